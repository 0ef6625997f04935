#include "mkv/verification.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "mkv/error.hpp"
#include "mkv/kernels.hpp"
#include "mkv/norms.hpp"
#include "mkv/pontryagin.hpp"
#include "mkv/regression.hpp"

namespace mkv {
namespace {

struct Sample {
  double mean = 0.0;
  double std_error = 0.0;
};

Sample summarize(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  Sample s;
  s.mean = kernels::sum(v) / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return s;
}

// Component of the mixture used for one cloud.
struct Component {
  double mx, my, sx, sy, rho;
};

Component random_component(std::mt19937_64& rng, const CloudGenerator& gen) {
  std::uniform_real_distribution<double> mean(-gen.mean_bound, gen.mean_bound);
  std::uniform_real_distribution<double> scale(gen.scale_lo, gen.scale_hi);
  std::uniform_real_distribution<double> corr(-gen.corr_bound, gen.corr_bound);
  Component c;
  c.mx = mean(rng);
  c.my = mean(rng);
  c.sx = scale(rng);
  c.sy = scale(rng);
  c.rho = corr(rng);
  return c;
}

struct Cloud {
  std::vector<double> x, y;
};

Cloud random_cloud(std::mt19937_64& rng, std::size_t size, const CloudGenerator& gen) {
  const std::array<Component, 2> comps{random_component(rng, gen), random_component(rng, gen)};
  std::normal_distribution<double> normal;
  std::bernoulli_distribution pick(0.5);
  Cloud c{std::vector<double>(size), std::vector<double>(size)};
  for (std::size_t k = 0; k < size; ++k) {
    const Component& m = comps[pick(rng) ? 1 : 0];
    const double g1 = normal(rng), g2 = normal(rng);
    c.x[k] = m.mx + m.sx * g1;
    c.y[k] = m.my + m.sy * (m.rho * g1 + std::sqrt(1.0 - m.rho * m.rho) * g2);
  }
  return c;
}

double random_time(std::mt19937_64& rng, const CloudGenerator& gen) {
  return std::uniform_real_distribution<double>(0.0, gen.horizon)(rng);
}

double random_coordinate(std::mt19937_64& rng, const CloudGenerator& gen) {
  return std::uniform_real_distribution<double>(-gen.mean_bound - 2.0 * gen.scale_hi,
                                                gen.mean_bound + 2.0 * gen.scale_hi)(rng);
}

// Rounding allowance for pointwise inequalities.
double slack_tolerance(double scale) { return 1e-9 * (1.0 + std::abs(scale)); }

// Falsifier report from per-sample excesses (positive = violated).
ConditionReport falsifier_report(std::string id, std::span<const double> excess) {
  ConditionReport rep;
  rep.condition_id = std::move(id);
  rep.method = CheckMethod::monte_carlo;
  rep.samples_used = excess.size();
  const double worst = *std::max_element(excess.begin(), excess.end());
  rep.margin = -worst;
  rep.holds = rep.margin >= 0.0;
  rep.std_error = summarize(excess).std_error;
  return rep;
}

void require_samples(std::size_t n, const char* what) {
  if (n == 0) throw ValidationError(std::string(what) + ": at least one sample is required");
}

double evaluate(const FbsdeFn& fn, const char* name, std::size_t draw, double t, double x, double y,
                const EmpiricalLaw& m) {
  try {
    return fn(t, x, y, m);
  } catch (const Error& e) {
    throw Error(std::string(name) + " failed on draw " + std::to_string(draw) + ": " + e.what());
  }
}

double random_action(std::mt19937_64& rng, const ActionSet& actions) {
  if (actions.bounded()) return std::uniform_real_distribution<double>(actions.lo, actions.hi)(rng);
  return actions.clip(std::normal_distribution<double>(0.0, 2.0)(rng));
}

double time_extreme(const TimeGrid& grid, auto&& fn, bool take_max) {
  double best = fn(grid.t(0));
  for (std::size_t i = 1; i < grid.n_points(); ++i) {
    const double v = fn(grid.t(i));
    best = take_max ? std::max(best, v) : std::min(best, v);
  }
  return best;
}

void require_convexity(const ConditionInputs& in, bool needs_zeta, const char* what) {
  std::vector<std::string> missing;
  if (!(in.convexity.eta > 0.0)) missing.emplace_back("eta");
  if (needs_zeta && !(in.convexity.zeta > 0.0)) missing.emplace_back("zeta");
  if (!(in.convexity.l >= 0.0)) missing.emplace_back("l");
  if (!(in.r > 0.0)) missing.emplace_back("r");
  if (!missing.empty()) {
    std::string msg = std::string(what) + ": missing or invalid constants:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }
  if (needs_zeta && 2.0 * in.convexity.eta > in.convexity.zeta * (1.0 + 1e-12)) {
    throw ValidationError(std::string(what) + ": convexity requires 2 eta <= zeta");
  }
}

// Closed-form conditions: `fwd` is the inf-over-time member pair, `alt` the two
// bounds on max b1. Forward variants need unconstrained actions; a
// constrained set fails with margin at most -1.
TheoremCheck forward_check(const ConditionInputs& in, const TimeGrid& grid, std::string id, bool strict,
                           auto&& member) {
  require_convexity(in, true, id.c_str());
  TheoremCheck out;
  out.threshold = time_extreme(grid, [&](double t) { return member(std::abs(in.b2(t))); }, false);
  ConditionReport& rep = out.report;
  rep.condition_id = std::move(id);
  rep.method = CheckMethod::arithmetic;
  rep.samples_used = grid.n_points();
  const double slack = out.threshold - 0.5 * in.r;
  rep.holds = strict ? slack > 0.0 : slack >= 0.0;
  rep.margin = slack;
  if (!in.unconstrained_actions) {
    rep.holds = false;
    rep.margin = std::min(slack, -1.0);
  }
  return out;
}

TheoremCheck alternate_check(const ConditionInputs& in, const TimeGrid& grid, std::string id, double lead1,
                             auto&& inner1, double lead2, auto&& inner2) {
  require_convexity(in, false, id.c_str());
  const double eta = in.convexity.eta;
  const double m1 = time_extreme(grid, [&](double t) { return inner1(std::abs(in.b2(t))); }, true);
  const double m2 = time_extreme(grid, [&](double t) { return inner2(std::abs(in.b2(t))); }, true);
  TheoremCheck out;
  out.threshold = -std::max(lead1 - 0.5 * in.r + m1 / (2.0 * eta), lead2 - 0.5 * in.r + m2 / (2.0 * eta));
  ConditionReport& rep = out.report;
  rep.condition_id = std::move(id);
  rep.method = CheckMethod::arithmetic;
  rep.samples_used = grid.n_points();
  rep.margin = out.threshold - in.b1.max_on(grid);
  rep.holds = rep.margin >= 0.0;
  return out;
}

// Simulates the controlled state and returns per-particle discounted costs.
// `actions(step, t, x, mu, out)` fills the control for every particle.
template <class Actions>
std::vector<double> run_costs(const ControlModel& model, Actions&& actions, double sigma, const XiSpec& xi,
                              const BrownianDriver& driver, const std::vector<EmpiricalLaw>* frozen_flow) {
  if (!model.drift || !model.cost) throw ValidationError("cost estimate: drift and cost are required");
  const TimeGrid& grid = driver.grid();
  const std::size_t n = grid.n_steps(), n_part = driver.n_particles();
  const double dt = grid.dt(), r = model.discount;
  if (frozen_flow && frozen_flow->size() != grid.n_points()) {
    throw DimensionError("cost estimate: frozen flow needs one law per grid point");
  }
  std::vector<double> x = sample_initial(xi, n_part, driver.seed());
  std::vector<double> next(n_part), drift(n_part), a(n_part), cost(n_part, 0.0);
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = grid.t(i);
    std::optional<EmpiricalLaw> own;
    if (!frozen_flow) own.emplace(x);
    const EmpiricalLaw& mu = frozen_flow ? (*frozen_flow)[i] : *own;
    actions(i, t, std::span<const double>(x), mu, std::span<double>(a));
    const double w = std::exp(-r * t) * ((i == 0 || i == n) ? 0.5 * dt : dt);
    for (std::size_t j = 0; j < n_part; ++j) cost[j] += w * model.cost(t, x[j], mu, a[j]);
    if (i == n) break;
    for (std::size_t j = 0; j < n_part; ++j) drift[j] = model.drift(t, x[j], mu, a[j]);
    kernels::euler_step(next, x, drift, driver.increments(i), dt, sigma);
    if (!std::all_of(next.begin(), next.end(), [](double v) { return std::isfinite(v); })) {
      throw DivergenceError("cost estimate: state is not finite after step " + std::to_string(i),
                            static_cast<long>(i));
    }
    x.swap(next);
  }
  return cost;
}

auto feedback_actions(const FeedbackPolicy& policy) {
  return [&policy](std::size_t step, double t, std::span<const double> x, const EmpiricalLaw& mu,
                   std::span<double> out) {
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = policy(step, t, x[j], mu);
  };
}

CostEstimate to_estimate(std::span<const double> costs) {
  const Sample s = summarize(costs);
  return {s.mean, s.std_error};
}

}  // namespace

const char* to_string(CheckMethod method) {
  return method == CheckMethod::arithmetic ? "arithmetic" : "monte-carlo";
}

ConditionReport check_assumption1_mc(const CoefficientSet& coeffs, double K, double kappa, std::size_t n_pairs,
                                     std::size_t cloud_size, std::uint64_t seed, const CloudGenerator& gen) {
  if (n_pairs < 100) throw ValidationError("monotonicity check: n_pairs must be at least 100");
  if (cloud_size < 2) throw ValidationError("monotonicity check: cloud_size must be at least 2");
  if (!coeffs.drift || !coeffs.driver) throw ValidationError("monotonicity check: drift and driver are required");

  std::vector<double> excess(n_pairs);
  double worst_se = 0.0, worst = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(cloud_size), sizes(cloud_size);
  for (std::size_t d = 0; d < n_pairs; ++d) {
    auto rng = make_stream(seed, d, StreamTag::cloud);
    const Cloud a = random_cloud(rng, cloud_size, gen);
    const Cloud b = random_cloud(rng, cloud_size, gen);
    const double t = random_time(rng, gen);
    const EmpiricalLaw ma(a.x, a.y), mb(b.x, b.y);
    for (std::size_t k = 0; k < cloud_size; ++k) {
      const double dx = a.x[k] - b.x[k], dy = a.y[k] - b.y[k];
      const double dF = evaluate(coeffs.driver, "driver", d, t, a.x[k], a.y[k], ma) -
                        evaluate(coeffs.driver, "driver", d, t, b.x[k], b.y[k], mb);
      const double dB = evaluate(coeffs.drift, "drift", d, t, a.x[k], a.y[k], ma) -
                        evaluate(coeffs.drift, "drift", d, t, b.x[k], b.y[k], mb);
      terms[k] = -K * dx * dy - dx * dF + dy * dB + kappa * (dx * dx + dy * dy);
      sizes[k] = std::abs(K * dx * dy) + std::abs(dx * dF) + std::abs(dy * dB) + kappa * (dx * dx + dy * dy);
    }
    const Sample s = summarize(terms);
    // exact equality (a tight kappa) must not fail on rounding
    const double rounding = 1e-12 * kernels::sum(sizes) / static_cast<double>(cloud_size);
    excess[d] = s.mean - 2.0 * s.std_error - rounding;
    if (excess[d] > worst) {
      worst = excess[d];
      worst_se = s.std_error;
    }
  }
  ConditionReport rep;
  rep.condition_id = "A1-ii";
  rep.method = CheckMethod::monte_carlo;
  rep.samples_used = n_pairs * cloud_size;
  rep.margin = -worst;
  rep.holds = rep.margin >= 0.0;
  rep.std_error = worst_se;
  return rep;
}

ConditionReport check_assumption1_lipschitz_mc(const CoefficientSet& coeffs, double l, std::size_t n_samples,
                                               std::size_t cloud_size, std::uint64_t seed,
                                               const CloudGenerator& gen) {
  require_samples(n_samples, "Lipschitz check");
  std::vector<double> excess(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    auto rng = make_stream(seed, s, StreamTag::cloud);
    const Cloud a = random_cloud(rng, cloud_size, gen), b = random_cloud(rng, cloud_size, gen);
    const EmpiricalLaw ma(a.x, a.y), mb(b.x, b.y);
    const double t = random_time(rng, gen);
    const double x = random_coordinate(rng, gen), y = random_coordinate(rng, gen);
    const double x2 = random_coordinate(rng, gen), y2 = random_coordinate(rng, gen);
    const double lhs =
        std::abs(evaluate(coeffs.drift, "drift", s, t, x, y, ma) - evaluate(coeffs.drift, "drift", s, t, x2, y2, mb)) +
        std::abs(evaluate(coeffs.driver, "driver", s, t, x, y, ma) -
                 evaluate(coeffs.driver, "driver", s, t, x2, y2, mb));
    const double rhs = l * (std::abs(x - x2) + std::abs(y - y2) + wasserstein2(ma, mb));
    excess[s] = lhs - rhs - slack_tolerance(rhs);
  }
  return falsifier_report("A1-i", excess);
}

ConditionReport check_assumption2_monotone_mc(const CoefficientSet& coeffs, double kappa1, double kappa2,
                                              std::size_t n_samples, std::uint64_t seed,
                                              const CloudGenerator& gen) {
  require_samples(n_samples, "one-sided monotonicity check");
  std::vector<double> excess(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    auto rng = make_stream(seed, s, StreamTag::cloud);
    const Cloud c = random_cloud(rng, 64, gen);
    const EmpiricalLaw m(c.x, c.y);
    const double t = random_time(rng, gen);
    const double x = random_coordinate(rng, gen), x2 = random_coordinate(rng, gen);
    const double y = random_coordinate(rng, gen), y2 = random_coordinate(rng, gen);
    const double in_y = (y - y2) * (evaluate(coeffs.driver, "driver", s, t, x, y, m) -
                                    evaluate(coeffs.driver, "driver", s, t, x, y2, m)) +
                        kappa1 * (y - y2) * (y - y2);
    const double in_x = (x - x2) * (evaluate(coeffs.drift, "drift", s, t, x, y, m) -
                                    evaluate(coeffs.drift, "drift", s, t, x2, y, m)) +
                        kappa2 * (x - x2) * (x - x2);
    excess[s] = std::max(in_y - slack_tolerance(kappa1 * (y - y2) * (y - y2)),
                         in_x - slack_tolerance(kappa2 * (x - x2) * (x - x2)));
  }
  return falsifier_report("A2-i", excess);
}

ConditionReport check_assumption2_lipschitz_mc(const CoefficientSet& coeffs, double l1, double l2,
                                               std::size_t n_samples, std::size_t cloud_size, std::uint64_t seed,
                                               const CloudGenerator& gen) {
  require_samples(n_samples, "partial Lipschitz check");
  std::vector<double> excess(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    auto rng = make_stream(seed, s, StreamTag::cloud);
    const Cloud a = random_cloud(rng, cloud_size, gen), b = random_cloud(rng, cloud_size, gen);
    const EmpiricalLaw ma(a.x, a.y), mb(b.x, b.y);
    const double w = wasserstein2(ma, mb);
    const double t = random_time(rng, gen);
    const double x = random_coordinate(rng, gen), x2 = random_coordinate(rng, gen);
    const double y = random_coordinate(rng, gen), y2 = random_coordinate(rng, gen);
    const double rhs_f = l1 * (std::abs(x - x2) + w);
    const double rhs_b = l2 * (std::abs(y - y2) + w);
    const double f_gap = std::abs(evaluate(coeffs.driver, "driver", s, t, x, y, ma) -
                                  evaluate(coeffs.driver, "driver", s, t, x2, y, mb));
    const double b_gap = std::abs(evaluate(coeffs.drift, "drift", s, t, x, y, ma) -
                                  evaluate(coeffs.drift, "drift", s, t, x, y2, mb));
    excess[s] = std::max(f_gap - rhs_f - slack_tolerance(rhs_f), b_gap - rhs_b - slack_tolerance(rhs_b));
  }
  return falsifier_report("A2-ii", excess);
}

SplitCheck check_assumption2_constants(double kappa1, double kappa2, double l1, double l2, double eps1, double eps2,
                                       double K) {
  for (double v : {kappa1, kappa2, l1, l2, eps1, eps2, K}) {
    if (!std::isfinite(v)) throw ValidationError("split constants must be finite");
  }
  if (!(eps1 > 0.0) || !(eps2 > 0.0)) throw ValidationError("split constants: eps1 and eps2 must be positive");
  const double upper = 2.0 * kappa1 - 2.0 * l1 - 2.0 * l1 * eps1;
  const double lower = -2.0 * kappa2 + 2.0 * l2 + 2.0 * l2 * eps2;
  const double gap_f = upper - K;  // -K + 2k1 - 2l1 - 2l1 eps1
  const double gap_b = K - lower;  //  K + 2k2 - 2l2 - 2l2 eps2
  const double product = eps1 * eps2 * gap_f * gap_b;
  const double coupling = 4.0 * l1 * l2;

  SplitCheck out;
  ConditionReport& rep = out.report;
  rep.condition_id = "A2-iii";
  rep.method = CheckMethod::arithmetic;
  rep.samples_used = 0;
  rep.margin = std::min({gap_b, gap_f, product - coupling});
  rep.holds = gap_b > 0.0 && gap_f > 0.0 && product - coupling >= 0.0;
  if (coupling == 0.0) {
    out.contraction_constant = 0.0;
  } else if (product > 0.0) {
    out.contraction_constant = coupling / product;
  } else {
    out.contraction_constant = std::numeric_limits<double>::infinity();
  }
  return out;
}

ConditionReport check_assumption2_integrability(const CoefficientSet& coeffs, const TimeGrid& grid) {
  const EmpiricalLaw dirac(std::vector<double>{0.0}, std::vector<double>{0.0});
  double total = 0.0;
  for (std::size_t i = 0; i < grid.n_points(); ++i) {
    const double t = grid.t(i);
    const double f = coeffs.driver(t, 0.0, 0.0, dirac), b = coeffs.drift(t, 0.0, 0.0, dirac);
    const double w = (i == 0 || i == grid.n_steps()) ? 0.5 * grid.dt() : grid.dt();
    total += w * std::exp(-grid.discount_weight() * t) * (f * f + b * b);
  }
  ConditionReport rep;
  rep.condition_id = "A2-iv";
  rep.method = CheckMethod::arithmetic;
  rep.samples_used = grid.n_points();
  rep.holds = std::isfinite(total);
  rep.margin = rep.holds ? 1.0 / (1.0 + total) : -1.0;
  return rep;
}

std::vector<ConditionReport> check_assumption3(const ControlModel& model, double kappa, double l,
                                               const TimeGrid& grid, std::size_t n_samples, std::uint64_t seed) {
  if (!model.drift || !model.cost) throw ValidationError("control checks: drift and cost are required");
  require_samples(n_samples, "control checks");
  const CloudGenerator gen{.horizon = grid.horizon()};
  std::vector<ConditionReport> out;

  // Measure-Lipschitz drift.
  {
    std::vector<double> excess(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) {
      auto rng = make_stream(seed, s, StreamTag::cloud);
      const Cloud ca = random_cloud(rng, 128, gen), cb = random_cloud(rng, 96, gen);
      const EmpiricalLaw ma(ca.x), mb(cb.x);
      const double t = random_time(rng, gen), x = random_coordinate(rng, gen);
      const double a = random_action(rng, model.actions);
      const double rhs = l * wasserstein2(ma, mb);
      excess[s] = std::abs(model.drift(t, x, ma, a) - model.drift(t, x, mb, a)) - rhs - slack_tolerance(rhs);
    }
    out.push_back(falsifier_report("A3-i", excess));
  }

  // Integrability of the drift and the cost at the origin.
  {
    const EmpiricalLaw dirac(std::vector<double>{0.0});
    const double a0 = model.actions.clip(0.0), r = model.discount;
    double total = 0.0;
    for (std::size_t i = 0; i < grid.n_points(); ++i) {
      const double t = grid.t(i);
      const double w = ((i == 0 || i == grid.n_steps()) ? 0.5 * grid.dt() : grid.dt()) * std::exp(-r * t);
      const double b = model.drift(t, 0.0, dirac, a0);
      total += w * (b * b + std::abs(model.cost(t, 0.0, dirac, a0)));
    }
    ConditionReport rep;
    rep.condition_id = "A3-ii";
    rep.method = CheckMethod::arithmetic;
    rep.samples_used = grid.n_points();
    rep.holds = std::isfinite(total);
    rep.margin = rep.holds ? 1.0 / (1.0 + total) : -1.0;
    out.push_back(rep);
  }

  // Dissipativity in x with kappa > l - r/2.
  {
    std::vector<double> excess(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) {
      auto rng = make_stream(seed, s + n_samples, StreamTag::cloud);
      const Cloud c = random_cloud(rng, 64, gen);
      const EmpiricalLaw m(c.x);
      const double t = random_time(rng, gen);
      const double x = random_coordinate(rng, gen), x2 = random_coordinate(rng, gen);
      const double a = random_action(rng, model.actions);
      const double sq = (x - x2) * (x - x2);
      excess[s] = (x - x2) * (model.drift(t, x, m, a) - model.drift(t, x2, m, a)) + kappa * sq -
                  slack_tolerance(kappa * sq);
    }
    ConditionReport rep = falsifier_report("A3-iii", excess);
    const double gap = kappa - (l - 0.5 * model.discount);
    rep.margin = std::min(rep.margin, gap);
    rep.holds = rep.holds && gap > 0.0;
    out.push_back(rep);
  }
  return out;
}

ConditionInputs condition_inputs(const ControlModel& model) {
  std::vector<std::string> missing;
  if (!model.convexity) missing.emplace_back("convexity");
  if (!model.linear_drift) missing.emplace_back("linear_drift");
  if (!missing.empty()) {
    std::string msg = "condition inputs: model does not declare:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }
  ConditionInputs in;
  in.convexity = *model.convexity;
  in.r = model.discount;
  in.b1 = model.linear_drift->b1;
  in.b2 = model.linear_drift->b2;
  in.unconstrained_actions = std::isinf(model.actions.lo) && std::isinf(model.actions.hi);
  return in;
}

ConditionInputs condition_inputs(const LQModel& model, const TimeGrid& grid, TheoremVariant variant) {
  validate(model, grid);
  ConditionInputs in;
  in.convexity.eta = 0.5 * model.p.min_on(grid);
  in.convexity.zeta = model.p.max_on(grid);
  in.convexity.iota = 0.5 * model.q.min_on(grid);
  const double coupling = variant == TheoremVariant::primary
                              ? model.q_bar.max_abs_on(grid)
                              : time_extreme(grid, [&](double t) {
                                  return std::abs(model.q(t)) + std::abs(model.q_bar(t));
                                }, true);
  in.convexity.l = std::max(model.b1_bar.max_abs_on(grid), coupling);
  in.r = model.r;
  in.b1 = model.b1;
  in.b2 = model.b2;
  in.unconstrained_actions = true;
  return in;
}

TheoremCheck check_theorem31_conditions(const ConditionInputs& in, const TimeGrid& grid, TheoremVariant variant) {
  const double l = in.convexity.l, eta = in.convexity.eta;
  if (variant == TheoremVariant::primary) {
    const double iota = in.convexity.iota, zeta = in.convexity.zeta;
    return forward_check(in, grid, "T31-fwd", true, [=](double b2) {
      return std::min(2.0 * iota - 6.5 * l - (5.0 * l * l + 3.0 * b2 * l) / (2.0 * eta),
                      2.0 * b2 * b2 * eta / (zeta * zeta) - 1.5 * l - (l * l + 2.0 * b2 * l) / (2.0 * eta));
    });
  }
  return alternate_check(
      in, grid, "T31-alt", 9.0 * l, [=](double b2) { return 9.0 * l * l + 4.0 * l * b2; }, 3.0 * l,
      [=](double b2) { return 4.0 * b2 * l + 3.0 * b2 * b2; });
}

TheoremCheck check_theorem32_conditions(const ConditionInputs& in, const TimeGrid& grid, TheoremVariant variant) {
  const double l = in.convexity.l, eta = in.convexity.eta;
  if (variant == TheoremVariant::primary) {
    const double iota = in.convexity.iota, zeta = in.convexity.zeta;
    return forward_check(in, grid, "T32-fwd", false, [=](double b2) {
      return std::min(2.0 * iota - 1.5 * l - l * l / eta - 3.0 * b2 * l / (4.0 * eta),
                      2.0 * b2 * b2 * eta / (zeta * zeta) - 0.5 * l - 3.0 * b2 * l / (4.0 * eta));
    });
  }
  return alternate_check(
      in, grid, "T32-alt", 3.0 * l, [=](double b2) { return 3.0 * l * l + b2 * l; }, 3.0 * l,
      [=](double b2) { return 4.0 * b2 * l + 3.0 * b2 * b2; });
}

std::vector<double> simulate_costs(const ControlModel& model, const FeedbackPolicy& policy, double sigma,
                                   const XiSpec& xi, const BrownianDriver& driver,
                                   const std::vector<EmpiricalLaw>* frozen_flow) {
  return run_costs(model, feedback_actions(policy), sigma, xi, driver, frozen_flow);
}

CostEstimate estimate_cost(const ControlModel& model, const FeedbackPolicy& policy, double sigma, const XiSpec& xi,
                           const BrownianDriver& driver, const std::vector<EmpiricalLaw>* frozen_flow) {
  const auto costs = simulate_costs(model, policy, sigma, xi, driver, frozen_flow);
  return to_estimate(costs);
}

CostEstimate estimate_cost(const ControlModel& model, const Paths& controls, double sigma, const XiSpec& xi,
                           const BrownianDriver& driver, const std::vector<EmpiricalLaw>* frozen_flow) {
  if (controls.n_particles() != driver.n_particles() || controls.n_times() != driver.grid().n_points()) {
    throw DimensionError("cost estimate: controls must have one slice per grid point for every particle");
  }
  auto open_loop = [&controls](std::size_t step, double, std::span<const double>, const EmpiricalLaw&,
                               std::span<double> out) {
    const auto a = controls.slice(step);
    std::copy(a.begin(), a.end(), out.begin());
  };
  const auto costs = run_costs(model, open_loop, sigma, xi, driver, frozen_flow);
  return to_estimate(costs);
}

CostEstimate paired_cost_difference(const ControlModel& model, const FeedbackPolicy& reference,
                                    const FeedbackPolicy& alternative, double sigma, const XiSpec& xi,
                                    const BrownianDriver& driver, const std::vector<EmpiricalLaw>* frozen_flow) {
  auto diff = simulate_costs(model, reference, sigma, xi, driver, frozen_flow);
  const auto alt = simulate_costs(model, alternative, sigma, xi, driver, frozen_flow);
  for (std::size_t j = 0; j < diff.size(); ++j) diff[j] -= alt[j];
  return to_estimate(diff);
}

FeedbackPolicy feedback_from_solution(const ControlModel& model, const ParticleEnsemble& solution,
                                      std::size_t degree) {
  const std::size_t n_points = solution.grid.n_points();
  auto fits = std::make_shared<std::vector<SliceFit>>();
  fits->reserve(n_points);
  const std::vector<double> no_noise(solution.n_particles(), 0.0);
  for (std::size_t i = 0; i < n_points; ++i) {
    fits->push_back(fit_slice(solution.x.slice(i), no_noise, solution.y.slice(i), degree));
  }
  auto shared_model = std::make_shared<ControlModel>(model);
  return [fits, shared_model](std::size_t step, double t, double x, const EmpiricalLaw& mu) {
    if (step >= fits->size()) throw DimensionError("feedback: step outside the solved grid");
    double y = 0.0;
    (*fits)[step].conditional_mean(std::span<const double>(&x, 1), std::span<double>(&y, 1));
    return argmin_hamiltonian(*shared_model, t, x, mu, y);
  };
}

ProbeResult optimality_probe(const ControlModel& model, Problem problem, const SolveReport& solved, double sigma,
                             const XiSpec& xi, const BrownianDriver& driver, std::size_t n_perturbations,
                             double epsilon, std::uint64_t seed) {
  if (!solved.converged) throw ValidationError("optimality probe: the solve did not converge");
  if (!driver.grid().same_points(solved.final.grid)) {
    throw DimensionError("optimality probe: driver and solution use different grids");
  }
  require_samples(n_perturbations, "optimality probe");
  const FeedbackPolicy optimal = feedback_from_solution(model, solved.final);

  std::vector<EmpiricalLaw> flow;
  if (problem == Problem::mfg) {
    flow.reserve(solved.final.grid.n_points());
    for (std::size_t i = 0; i < solved.final.grid.n_points(); ++i) {
      const auto s = solved.final.x.slice(i);
      flow.emplace_back(std::vector<double>(s.begin(), s.end()));
    }
  }
  const std::vector<EmpiricalLaw>* frozen = problem == Problem::mfg ? &flow : nullptr;

  ProbeResult out;
  out.worst_delta = -std::numeric_limits<double>::infinity();
  const ActionSet actions = model.actions;
  for (std::size_t k = 0; k < n_perturbations; ++k) {
    auto rng = make_stream(seed, k, StreamTag::perturbation);
    std::normal_distribution<double> normal;
    const double u0 = normal(rng), u1 = normal(rng), u2 = normal(rng);
    const double omega = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    FeedbackPolicy bumped = [&, u0, u1, u2, omega](std::size_t step, double t, double x, const EmpiricalLaw& mu) {
      const double a = optimal(step, t, x, mu);
      if (epsilon == 0.0) return a;
      return actions.clip(a + epsilon * (u0 + u1 * x + u2 * std::sin(omega * t)));
    };
    const CostEstimate d = paired_cost_difference(model, optimal, bumped, sigma, xi, driver, frozen);
    out.deltas.push_back(d);
    if (d.value > out.worst_delta) {
      out.worst_delta = d.value;
      out.worst_std_error = d.std_error;
    }
  }
  return out;
}

}  // namespace mkv
