#include "mkv/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mkv/error.hpp"
#include "mkv/random.hpp"

namespace mkv {
namespace {

constexpr std::size_t kFuzzPoints = 64;
constexpr std::size_t kFuzzAtoms = 8;

EmpiricalLaw fuzz_law(std::mt19937_64& gen, std::size_t dim) {
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  std::vector<double> a(kFuzzAtoms), b(kFuzzAtoms);
  for (auto& v : a) v = coord(gen);
  if (dim == 1) return EmpiricalLaw(std::move(a));
  for (auto& v : b) v = coord(gen);
  return EmpiricalLaw(std::move(a), std::move(b));
}

double fuzz_action(std::mt19937_64& gen, const ActionSet& set) {
  const double lo = std::isfinite(set.lo) ? set.lo : std::min(-5.0, set.hi - 10.0);
  const double hi = std::isfinite(set.hi) ? set.hi : std::max(5.0, set.lo + 10.0);
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

}  // namespace

TimeFunction::TimeFunction(double constant) : breakpoints_{{0.0, constant}} {}

TimeFunction TimeFunction::piecewise(std::vector<std::pair<double, double>> breakpoints) {
  if (breakpoints.empty()) throw ValidationError("time function: breakpoint list is empty");
  if (breakpoints.front().first != 0.0) throw ValidationError("time function: first breakpoint must be at t = 0");
  for (std::size_t k = 0; k < breakpoints.size(); ++k) {
    if (!std::isfinite(breakpoints[k].first) || !std::isfinite(breakpoints[k].second)) {
      throw ValidationError("time function: breakpoints must be finite");
    }
    if (k > 0 && !(breakpoints[k].first > breakpoints[k - 1].first)) {
      throw ValidationError("time function: breakpoint times must be strictly increasing");
    }
  }
  TimeFunction f;
  f.breakpoints_ = std::move(breakpoints);
  return f;
}

TimeFunction TimeFunction::from(std::function<double(double)> fn) {
  if (!fn) throw ValidationError("time function: empty callable");
  TimeFunction f;
  f.breakpoints_.clear();
  f.fn_ = std::move(fn);
  return f;
}

double TimeFunction::operator()(double t) const {
  if (fn_) return fn_(t);
  if (breakpoints_.size() == 1) return breakpoints_.front().second;
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t,
                             [](double v, const std::pair<double, double>& bp) { return v < bp.first; });
  if (it == breakpoints_.begin()) return breakpoints_.front().second;
  return std::prev(it)->second;
}

double TimeFunction::min_on(const TimeGrid& grid) const {
  if (is_constant()) return breakpoints_.front().second;
  double m = (*this)(0.0);
  for (std::size_t i = 1; i < grid.n_points(); ++i) m = std::min(m, (*this)(grid.t(i)));
  return m;
}

double TimeFunction::max_on(const TimeGrid& grid) const {
  if (is_constant()) return breakpoints_.front().second;
  double m = (*this)(0.0);
  for (std::size_t i = 1; i < grid.n_points(); ++i) m = std::max(m, (*this)(grid.t(i)));
  return m;
}

double TimeFunction::max_abs_on(const TimeGrid& grid) const {
  return std::max(std::abs(min_on(grid)), std::abs(max_on(grid)));
}

bool ActionSet::bounded() const noexcept { return std::isfinite(lo) && std::isfinite(hi); }

void validate(const CoefficientSet& coeffs, std::uint64_t fuzz_seed) {
  if (!coeffs.drift || !coeffs.driver) throw ValidationError("coefficients: drift and driver are required");
  if (!(coeffs.sigma > 0.0) || !std::isfinite(coeffs.sigma)) {
    throw ValidationError("coefficients: sigma must be positive");
  }
  auto gen = make_stream(fuzz_seed, 0, StreamTag::cloud);
  std::uniform_real_distribution<double> time(0.0, 10.0), coord(-5.0, 5.0);
  for (std::size_t k = 0; k < kFuzzPoints; ++k) {
    const EmpiricalLaw m = fuzz_law(gen, 2);
    const double t = time(gen), x = coord(gen), y = coord(gen);
    if (!std::isfinite(coeffs.drift(t, x, y, m)) || !std::isfinite(coeffs.driver(t, x, y, m))) {
      throw ValidationError("coefficients: non-finite value at t=" + std::to_string(t) +
                            " x=" + std::to_string(x) + " y=" + std::to_string(y));
    }
  }
}

void validate(const ControlModel& model, std::uint64_t fuzz_seed) {
  if (!model.drift || !model.cost || !model.cost_dx || !model.cost_da) {
    throw ValidationError("control model: drift, cost, cost_dx and cost_da are required");
  }
  if (!(model.discount > 0.0) || !std::isfinite(model.discount)) {
    throw ValidationError("control model: discount r must be positive");
  }
  if (!(model.actions.lo < model.actions.hi)) throw ValidationError("control model: action set needs lo < hi");
  if (model.convexity) {
    const auto& c = *model.convexity;
    if (!(c.eta > 0.0) || c.iota < 0.0 || c.l < 0.0 || c.zeta < 0.0) {
      throw ValidationError("control model: convexity needs eta > 0 and nonnegative iota, zeta, l");
    }
  }
  auto gen = make_stream(fuzz_seed, 1, StreamTag::cloud);
  std::uniform_real_distribution<double> time(0.0, 10.0), coord(-5.0, 5.0);
  for (std::size_t k = 0; k < kFuzzPoints; ++k) {
    const EmpiricalLaw mu = fuzz_law(gen, 1);
    const double t = time(gen), x = coord(gen), a = fuzz_action(gen, model.actions);
    const double h = 1e-4 * std::max(1.0, std::abs(a));
    const double fd = (model.cost(t, x, mu, a + h) - model.cost(t, x, mu, a - h)) / (2.0 * h);
    const double exact = model.cost_da(t, x, mu, a);
    if (!std::isfinite(exact) || std::abs(fd - exact) > 1e-5 * std::max(1.0, std::abs(exact))) {
      throw ValidationError("control model: cost_da disagrees with a finite difference of cost at t=" +
                            std::to_string(t) + " x=" + std::to_string(x) + " a=" + std::to_string(a));
    }
  }
}

void validate(const LQModel& model, const TimeGrid& grid) {
  if (!(model.sigma >= 0.0) || !std::isfinite(model.sigma)) throw ValidationError("LQ model: sigma must be >= 0");
  if (!(model.r > 0.0) || !std::isfinite(model.r)) throw ValidationError("LQ model: r must be positive");
  const std::pair<const char*, const TimeFunction*> fns[] = {
      {"b1", &model.b1}, {"b1_bar", &model.b1_bar}, {"b2", &model.b2},
      {"q", &model.q},   {"q_bar", &model.q_bar},   {"p", &model.p}};
  for (std::size_t i = 0; i < grid.n_points(); ++i) {
    const double t = grid.t(i);
    for (const auto& [name, fn] : fns) {
      if (!std::isfinite((*fn)(t))) {
        throw ValidationError(std::string("LQ model: ") + name + " is not finite at t=" + std::to_string(t));
      }
    }
    if (!(model.p(t) > 0.0)) throw ValidationError("LQ model: p must be positive, fails at t=" + std::to_string(t));
  }
}

ControlModel lq_control_model(const LQModel& m) {
  ControlModel c;
  c.drift = [m](double t, double x, const EmpiricalLaw& mu, double a) {
    return m.b1(t) * x + m.b1_bar(t) * mu.mean() + m.b2(t) * a;
  };
  c.cost = [m](double t, double x, const EmpiricalLaw& mu, double a) {
    const double dev = x - mu.mean();
    return 0.5 * (x * x * m.q(t) + dev * dev * m.q_bar(t) + a * a * m.p(t));
  };
  c.cost_dx = [m](double t, double x, const EmpiricalLaw& mu, double) {
    return m.q(t) * x + m.q_bar(t) * (x - mu.mean());
  };
  c.cost_da = [m](double t, double, const EmpiricalLaw&, double a) { return m.p(t) * a; };
  c.cost_dmu = [m](double t, double atom, const EmpiricalLaw& mu, double, double) {
    return -m.q_bar(t) * (atom - mu.mean());
  };
  c.cost_dmu_ignores_x = true;
  c.discount = m.r;
  c.linear_drift = LinearDrift{m.b1, m.b1_bar, m.b2};
  c.analytic_argmin = [m](double t, double, const EmpiricalLaw&, double y) { return -m.b2(t) * y / m.p(t); };
  c.quadratic_growth_declared = true;
  return c;
}

CoefficientSet lq_fbsde_coefficients(const LQModel& m, Problem problem) {
  CoefficientSet c;
  c.sigma = m.sigma;
  c.drift = [m](double t, double x, double y, const EmpiricalLaw& law) {
    const double b2 = m.b2(t);
    return m.b1(t) * x - (b2 * b2 / m.p(t)) * y + m.b1_bar(t) * law.mean(0);
  };
  if (problem == Problem::mfc) {
    c.driver = [m](double t, double x, double y, const EmpiricalLaw& law) {
      return m.b1(t) * y + (m.q(t) + m.q_bar(t)) * x - m.q_bar(t) * law.mean(0) - m.r * y +
             m.b1_bar(t) * law.mean(1);
    };
  } else {
    c.driver = [m](double t, double x, double y, const EmpiricalLaw& law) {
      return m.b1(t) * y + (m.q(t) + m.q_bar(t)) * x - m.q_bar(t) * law.mean(0) - m.r * y;
    };
  }
  return c;
}

MonotoneConstants lq_monotone_constants(const LQModel& m, Problem problem, const TimeGrid& grid) {
  // With K = r the cross terms in y cancel and the monotonicity form is
  //   -(q + q_bar) E x^2 + q_bar (E x)^2 - s E y^2 [+ b1_bar E x E y for MFG],
  // where s = b2^2 / p.
  MonotoneConstants out;
  out.K = m.r;
  out.kappa = std::numeric_limits<double>::infinity();
  out.l = 0.0;
  for (std::size_t i = 0; i < grid.n_points(); ++i) {
    const double t = grid.t(i);
    const double b1 = m.b1(t), bb = m.b1_bar(t), b2 = m.b2(t), q = m.q(t), qb = m.q_bar(t);
    const double s = b2 * b2 / m.p(t);
    const double cross = problem == Problem::mfg ? 0.5 * std::abs(bb) : 0.0;
    out.kappa = std::min({out.kappa, q + qb - std::max(qb, 0.0) - cross, s - cross});
    const double lx = std::abs(b1) + std::abs(q + qb);
    const double ly = s + std::abs(b1 - m.r);
    const double lm = std::abs(bb) + std::abs(qb) + (problem == Problem::mfc ? std::abs(bb) : 0.0);
    out.l = std::max({out.l, lx, ly, lm});
  }
  return out;
}

}  // namespace mkv
