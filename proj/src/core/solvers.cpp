#include "mkv/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "mkv/empirical_law.hpp"
#include "mkv/kernels.hpp"
#include "mkv/norms.hpp"
#include "mkv/regression.hpp"

namespace mkv {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_shapes(const SolverConfig& cfg, const BrownianDriver& driver) {
  if (driver.n_particles() != cfg.n_particles || !driver.grid().same_points(cfg.grid)) {
    throw DimensionError("solver: Brownian driver shape does not match the solver configuration");
  }
}

void require_points(const Paths& p, const SolverConfig& cfg, const char* what) {
  if (p.n_particles() != cfg.n_particles || p.n_times() != cfg.grid.n_points()) {
    throw DimensionError(std::string("solver: ") + what + " is not defined on the solver grid");
  }
}

void require_finite(std::span<const double> s, std::size_t step, const char* what) {
  for (double v : s) {
    if (!std::isfinite(v)) {
      throw DivergenceError(std::string(what) + ": non-finite value at step " + std::to_string(step),
                            static_cast<long>(step));
    }
  }
}

// Root of y = e + dt F(y): secant iteration, fixed-point step as a fallback.
template <class Driver>
double implicit_step(double e, double dt, Driver&& f) {
  double y0 = e;
  double f0 = f(y0);
  double g0 = -dt * f0;
  if (g0 == 0.0) return y0;
  double y1 = e + dt * f0;
  double g1 = y1 - e - dt * f(y1);
  for (int k = 0; k < 40; ++k) {
    if (std::abs(g1) <= 1e-13 * (1.0 + std::abs(y1))) break;
    const double denom = g1 - g0;
    double y2 = denom != 0.0 ? y1 - g1 * (y1 - y0) / denom : y1 - g1;
    if (!std::isfinite(y2)) y2 = y1 - g1;
    y0 = y1;
    g0 = g1;
    y1 = y2;
    g1 = y1 - e - dt * f(y1);
  }
  return y1;
}

void normalized_noise(const BrownianDriver& driver, std::size_t step, std::vector<double>& out) {
  auto dw = driver.increments(step);
  out.resize(dw.size());
  const double inv = 1.0 / std::sqrt(driver.grid().dt());
  for (std::size_t j = 0; j < dw.size(); ++j) out[j] = dw[j] * inv;
}

double ratio_estimate(const std::vector<IterationRecord>& its) {
  const std::size_t k = its.size();
  if (k < 2) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t count = std::min<std::size_t>(5, k - 1);
  double log_sum = 0.0;
  for (std::size_t i = k - count; i < k; ++i) {
    const double prev = its[i - 1].delta_norm, cur = its[i].delta_norm;
    if (!(prev > 0.0) || !(cur > 0.0)) return 0.0;
    log_sum += std::log(cur / prev);
  }
  return std::exp(log_sum / static_cast<double>(count));
}

void blend_paths(Paths& out, const Paths& prev, double damping) {
  if (damping == 0.0) return;
  for (std::size_t i = 0; i < out.n_times(); ++i) {
    kernels::blend(out.slice(i), out.slice(i), prev.slice(i), 1.0 - damping, damping);
  }
}

}  // namespace

void validate(const SolverConfig& cfg) {
  if (cfg.n_particles == 0) throw ValidationError("solver: n_particles must be positive");
  if (!(cfg.picard_tol > 0.0)) throw ValidationError("solver: picard_tol must be positive");
  if (cfg.max_picard_iters == 0) throw ValidationError("solver: max_picard_iters must be positive");
  if (cfg.inner_law_iters == 0) throw ValidationError("solver: inner_law_iters must be positive");
  if (cfg.regression_degree > kernels::kMaxDegree) throw ValidationError("solver: regression degree must be <= 5");
  if (!(cfg.damping >= 0.0 && cfg.damping < 1.0)) throw ValidationError("solver: damping must lie in [0, 1)");
  if (cfg.max_inner_solves == 0) throw ValidationError("solver: max_inner_solves must be positive");
}

SolveReport::SolveReport(const SolverConfig& cfg)
    : final(cfg.grid, cfg.n_particles),
      truncation_T(cfg.grid.horizon()),
      dt(cfg.grid.dt()),
      n_particles(cfg.n_particles) {}

Paths solve_mkv_sde(const CoefficientSet& coeffs, const Paths& y_bar, const XiSpec& xi, const SolverConfig& cfg,
                    const BrownianDriver& driver) {
  const auto x0 = sample_initial(xi, cfg.n_particles, driver.seed());
  return solve_mkv_sde(coeffs, y_bar, x0, cfg, driver);
}

Paths solve_mkv_sde(const CoefficientSet& coeffs, const Paths& y_bar, std::span<const double> x0,
                    const SolverConfig& cfg, const BrownianDriver& driver) {
  require_shapes(cfg, driver);
  require_points(y_bar, cfg, "y_bar");
  if (x0.size() != cfg.n_particles) throw DimensionError("solver: initial state has the wrong length");
  const std::size_t n_part = cfg.n_particles, n = cfg.grid.n_steps();
  const double dt = cfg.grid.dt();
  Paths x(n_part, n + 1);
  std::copy(x0.begin(), x0.end(), x.slice(0).begin());
  std::vector<double> drift(n_part);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.slice(i);
    auto yi = y_bar.slice(i);
    const EmpiricalLaw law(xi, yi);
    const double t = cfg.grid.t(i);
    for (std::size_t j = 0; j < n_part; ++j) drift[j] = coeffs.drift(t, xi[j], yi[j], law);
    kernels::euler_step(x.slice(i + 1), xi, drift, driver.increments(i), dt, coeffs.sigma);
    require_finite(x.slice(i + 1), i + 1, "forward SDE");
  }
  return x;
}

BsdeSolution solve_bsde(const CoefficientSet& coeffs, const Paths& x, const SolverConfig& cfg,
                        const BrownianDriver& driver, const Paths* y_guess) {
  require_shapes(cfg, driver);
  require_points(x, cfg, "x");
  if (y_guess) require_points(*y_guess, cfg, "y guess");
  const std::size_t n_part = cfg.n_particles, n = cfg.grid.n_steps();
  const double dt = cfg.grid.dt();

  BsdeSolution out{Paths(n_part, n + 1), Paths(n_part, n), 0};
  Paths law_y = y_guess ? *y_guess : Paths(n_part, n + 1);
  std::vector<double> noise, cond(n_part);
  for (std::size_t sweep = 0; sweep < cfg.inner_law_iters; ++sweep) {
    for (std::size_t i = n; i-- > 0;) {
      auto xi = x.slice(i);
      normalized_noise(driver, i, noise);
      const SliceFit fit = fit_slice(xi, noise, out.y.slice(i + 1), cfg.regression_degree);
      if (fit.fallback) ++out.regression_fallbacks;
      fit.conditional_mean(xi, cond);
      fit.integrand(xi, dt, out.z.slice(i));

      const EmpiricalLaw law(xi, law_y.slice(i));
      const double t = cfg.grid.t(i);
      auto yi = out.y.slice(i);
      for (std::size_t j = 0; j < n_part; ++j) {
        const double xj = xi[j];
        yi[j] = implicit_step(cond[j], dt, [&](double y) { return coeffs.driver(t, xj, y, law); });
      }
      require_finite(yi, i, "backward SDE");
      require_finite(out.z.slice(i), i, "backward SDE");
    }
    if (sweep + 1 < cfg.inner_law_iters) law_y = out.y;
  }
  return out;
}

ParticleEnsemble solve_lambda0(double kappa, double sigma, const Paths& phi, const Paths& psi, const XiSpec& xi,
                               const SolverConfig& cfg, const BrownianDriver& driver, const Paths* regressor) {
  const auto x0 = sample_initial(xi, cfg.n_particles, driver.seed());
  return solve_lambda0(kappa, sigma, phi, psi, x0, cfg, driver, regressor);
}

ParticleEnsemble solve_lambda0(double kappa, double sigma, const Paths& phi, const Paths& psi,
                               std::span<const double> x0, const SolverConfig& cfg, const BrownianDriver& driver,
                               const Paths* regressor, std::span<const double> terminal_p) {
  const double K = cfg.grid.discount_weight();
  if (!(kappa > 0.0) || !(K > 0.0) || !(K < 2.0 * kappa)) {
    throw HypothesisError("base case needs 0 < K < 2 kappa (K = " + std::to_string(K) +
                          ", kappa = " + std::to_string(kappa) + ")");
  }
  if (!(sigma >= 0.0)) throw ValidationError("base case: sigma must be nonnegative");
  require_shapes(cfg, driver);
  require_points(phi, cfg, "phi");
  require_points(psi, cfg, "psi");
  if (x0.size() != cfg.n_particles) throw DimensionError("solver: initial state has the wrong length");
  Paths walk;
  if (regressor) {
    require_points(*regressor, cfg, "regressor");
  } else {
    walk = driver.cumulative();
    regressor = &walk;
  }

  const std::size_t n_part = cfg.n_particles, n = cfg.grid.n_steps();
  const double dt = cfg.grid.dt();
  ParticleEnsemble out(cfg.grid, n_part);
  Paths& p = out.y;  // holds P until the end
  if (!terminal_p.empty()) {
    if (terminal_p.size() != n_part) throw DimensionError("base case: terminal value has the wrong length");
    std::copy(terminal_p.begin(), terminal_p.end(), p.slice(n).begin());
  }
  std::vector<double> noise, cond(n_part);
  for (std::size_t i = n; i-- > 0;) {
    auto reg = regressor->slice(i);
    normalized_noise(driver, i, noise);
    const SliceFit fit = fit_slice(reg, noise, p.slice(i + 1), cfg.regression_degree);
    fit.conditional_mean(reg, cond);
    fit.integrand(reg, dt, out.z.slice(i));
    auto pi = p.slice(i);
    auto fi = phi.slice(i), si = psi.slice(i);
    const double denom = 1.0 + kappa * dt;
    for (std::size_t j = 0; j < n_part; ++j) pi[j] = (cond[j] + (fi[j] + si[j]) * dt) / denom;
    require_finite(pi, i, "base case backward equation");
  }

  std::copy(x0.begin(), x0.end(), out.x.slice(0).begin());
  std::vector<double> drift(n_part);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = out.x.slice(i);
    auto pi = p.slice(i);
    auto fi = phi.slice(i);
    for (std::size_t j = 0; j < n_part; ++j) drift[j] = -kappa * (xi[j] + pi[j]) + fi[j];
    kernels::euler_step(out.x.slice(i + 1), xi, drift, driver.increments(i), dt, sigma);
    require_finite(out.x.slice(i + 1), i + 1, "base case forward equation");
  }

  for (std::size_t i = 0; i <= n; ++i) kernels::blend(p.slice(i), p.slice(i), out.x.slice(i), 1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : out.z.slice(i)) v += sigma;
  }
  return out;
}

SolveReport picard_solve(const CoefficientSet& coeffs, const XiSpec& xi, const SolverConfig& cfg,
                         const BrownianDriver& driver, const Paths* initial_x) {
  validate(cfg);
  validate(coeffs);
  require_shapes(cfg, driver);
  const auto start = Clock::now();
  const auto x0 = sample_initial(xi, cfg.n_particles, driver.seed());

  SolveReport report(cfg);
  report.method = "picard";
  Paths x = initial_x ? *initial_x : Paths::constant_in_time(x0, cfg.grid.n_points());
  require_points(x, cfg, "initial guess");
  std::copy(x0.begin(), x0.end(), x.slice(0).begin());
  Paths y;
  std::size_t blowups = 0;

  for (std::size_t k = 1; k <= cfg.max_picard_iters; ++k) {
    BsdeSolution back = solve_bsde(coeffs, x, cfg, driver, y.empty() ? nullptr : &y);
    report.regression_fallbacks += back.regression_fallbacks;
    Paths next = solve_mkv_sde(coeffs, back.y, x0, cfg, driver);
    blend_paths(next, x, cfg.damping);

    IterationRecord rec;
    rec.iter = k;
    rec.delta_norm = weighted_l2_distance(next, x, cfg.grid);
    rec.y_delta_norm = y.empty() ? weighted_l2_norm(back.y, cfg.grid) : weighted_l2_distance(back.y, y, cfg.grid);
    rec.wall_time = seconds_since(start);
    report.iterates.push_back(rec);
    x = std::move(next);
    y = std::move(back.y);

    if (rec.delta_norm <= cfg.picard_tol) {
      report.converged = true;
      break;
    }
    const double first = report.iterates.front().delta_norm;
    blowups = (k > 1 && rec.delta_norm > 10.0 * first) ? blowups + 1 : 0;
    if (blowups >= 3) {
      throw DivergenceError("picard: residual exceeded 10x its first value for 3 consecutive iterations",
                            static_cast<long>(k));
    }
  }
  report.contraction_ratio_estimate = ratio_estimate(report.iterates);

  BsdeSolution back = solve_bsde(coeffs, x, cfg, driver, &y);
  report.regression_fallbacks += back.regression_fallbacks;
  report.final.x = std::move(x);
  report.final.y = std::move(back.y);
  report.final.z = std::move(back.z);
  return report;
}

double continuation_step(double kappa, double l) {
  if (!(kappa > 0.0) || !(l >= 0.0)) throw ValidationError("continuation: needs kappa > 0 and l >= 0");
  return 2.0 * kappa / (3.0 * kappa + 12.0 * l);
}

std::size_t continuation_levels(double kappa, double l) {
  return static_cast<std::size_t>(std::ceil(1.0 / continuation_step(kappa, l) - 1e-12));
}

namespace {

class Continuation {
 public:
  Continuation(const CoefficientSet& coeffs, const SolverConfig& cfg, const BrownianDriver& driver, double kappa,
               std::vector<double> x0, std::vector<double> lambdas, SolveReport& report)
      : coeffs_(coeffs),
        cfg_(cfg),
        driver_(driver),
        kappa_(kappa),
        x0_(std::move(x0)),
        lambdas_(std::move(lambdas)),
        report_(report),
        start_(Clock::now()) {}

  // Solution at lambdas_[level] with offsets (phi, psi).
  ParticleEnsemble solve(std::size_t level, const Paths& phi, const Paths& psi, const Paths& regressor,
                         const ParticleEnsemble* warm, double tol) {
    if (level == 0) {
      if (report_.inner_solves >= cfg_.max_inner_solves) {
        throw BudgetError("continuation: exceeded " + std::to_string(cfg_.max_inner_solves) + " base-case solves",
                          std::make_shared<const SolveReport>(report_));
      }
      ++report_.inner_solves;
      // P_T = -x_T of the frozen iterate, so that Y_T = 0 at the fixed point
      // (the same truncation as the backward solver).
      terminal_.resize(cfg_.n_particles);
      auto xt = regressor.slice(cfg_.grid.n_steps());
      for (std::size_t j = 0; j < terminal_.size(); ++j) terminal_[j] = -xt[j];
      return solve_lambda0(kappa_, coeffs_.sigma, phi, psi, x0_, cfg_, driver_, &regressor, terminal_);
    }
    const bool top = level + 1 == lambdas_.size();
    const double step = lambdas_[level] - lambdas_[level - 1];
    ParticleEnsemble cur = warm ? *warm : solve(level - 1, phi, psi, regressor, nullptr, tol);

    Paths phi_next(cfg_.n_particles, cfg_.grid.n_points());
    Paths psi_next(cfg_.n_particles, cfg_.grid.n_points());
    double last_delta = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= cfg_.max_picard_iters; ++k) {
      offsets(cur, phi, psi, step, phi_next, psi_next);
      const double inner_tol = std::max(0.25 * tol, 0.1 * std::min(last_delta, 1e6));
      ParticleEnsemble next = solve(level - 1, phi_next, psi_next, cur.x, &cur, inner_tol);
      blend_paths(next.x, cur.x, cfg_.damping);
      blend_paths(next.y, cur.y, cfg_.damping);
      last_delta = weighted_l2_distance(next.x, cur.x, cfg_.grid);
      if (top) {
        IterationRecord rec;
        rec.iter = k;
        rec.delta_norm = last_delta;
        rec.y_delta_norm = weighted_l2_distance(next.y, cur.y, cfg_.grid);
        rec.wall_time = seconds_since(start_);
        report_.iterates.push_back(rec);
      }
      cur = std::move(next);
      if (last_delta <= tol) {
        if (top) report_.converged = true;
        break;
      }
    }
    return cur;
  }

 private:
  // phi + step (B(u) + kappa y) and psi + step (F(u) - kappa x) at u = (x, y, law(x, y)).
  void offsets(const ParticleEnsemble& u, const Paths& phi, const Paths& psi, double step, Paths& phi_out,
               Paths& psi_out) const {
    for (std::size_t i = 0; i < cfg_.grid.n_points(); ++i) {
      auto xi = u.x.slice(i), yi = u.y.slice(i);
      auto fi = phi.slice(i), si = psi.slice(i);
      auto fo = phi_out.slice(i), so = psi_out.slice(i);
      const EmpiricalLaw law(xi, yi);
      const double t = cfg_.grid.t(i);
      for (std::size_t j = 0; j < xi.size(); ++j) {
        fo[j] = fi[j] + step * (coeffs_.drift(t, xi[j], yi[j], law) + kappa_ * yi[j]);
        so[j] = si[j] + step * (coeffs_.driver(t, xi[j], yi[j], law) - kappa_ * xi[j]);
      }
    }
  }

  const CoefficientSet& coeffs_;
  const SolverConfig& cfg_;
  const BrownianDriver& driver_;
  double kappa_;
  std::vector<double> x0_;
  std::vector<double> lambdas_;
  SolveReport& report_;
  Clock::time_point start_;
  std::vector<double> terminal_;
};

}  // namespace

SolveReport continuation_solve(const CoefficientSet& coeffs, const XiSpec& xi, const SolverConfig& cfg,
                               const BrownianDriver& driver, double kappa, double l) {
  validate(cfg);
  validate(coeffs);
  require_shapes(cfg, driver);
  const double K = cfg.grid.discount_weight();
  if (!(K > 0.0) || !(K < 2.0 * kappa)) throw HypothesisError("continuation: needs 0 < K < 2 kappa");
  const double step = continuation_step(kappa, l);
  const std::size_t levels = continuation_levels(kappa, l);
  std::vector<double> lambdas(levels + 1);
  for (std::size_t k = 0; k <= levels; ++k) lambdas[k] = std::min(static_cast<double>(k) * step, 1.0);

  SolveReport report(cfg);
  report.method = "continuation";
  auto x0 = sample_initial(xi, cfg.n_particles, driver.seed());
  const Paths zero(cfg.n_particles, cfg.grid.n_points());
  const Paths regressor = Paths::constant_in_time(x0, cfg.grid.n_points());
  Continuation engine(coeffs, cfg, driver, kappa, std::move(x0), std::move(lambdas), report);
  ParticleEnsemble sol = engine.solve(levels, zero, zero, regressor, nullptr, cfg.picard_tol);
  report.contraction_ratio_estimate = ratio_estimate(report.iterates);
  report.final = std::move(sol);
  return report;
}

UniquenessResult uniqueness_probe(const CoefficientSet& coeffs, const XiSpec& xi, const SolverConfig& cfg,
                                  const BrownianDriver& driver, std::size_t n_starts) {
  if (n_starts < 2) throw ValidationError("uniqueness probe: needs at least 2 starts");
  validate(cfg);
  require_shapes(cfg, driver);
  const auto x0 = sample_initial(xi, cfg.n_particles, driver.seed());
  const std::size_t n_points = cfg.grid.n_points();

  CoefficientSet ou;
  ou.sigma = coeffs.sigma;
  ou.drift = [](double, double x, double, const EmpiricalLaw&) { return -x; };
  ou.driver = [](double, double, double, const EmpiricalLaw&) { return 0.0; };

  UniquenessResult out;
  for (std::size_t s = 0; s < n_starts; ++s) {
    Paths start;
    switch (s % 3) {
      case 0:
        start = Paths::constant_in_time(x0, n_points);
        break;
      case 1:
        start = solve_mkv_sde(ou, Paths(cfg.n_particles, n_points), x0, cfg, driver);
        break;
      default: {
        start = driver.cumulative();
        for (std::size_t i = 0; i < n_points; ++i) {
          kernels::blend(start.slice(i), start.slice(i), std::span<const double>(x0), coeffs.sigma, 1.0);
        }
      }
    }
    // Later cycles shift the start away from the earlier ones.
    const double shift = static_cast<double>(s / 3);
    if (shift != 0.0) {
      for (std::size_t i = 1; i < n_points; ++i) {
        for (double& v : start.slice(i)) v += shift;
      }
    }
    out.runs.push_back(picard_solve(coeffs, xi, cfg, driver, &start));
    out.all_converged = out.all_converged && out.runs.back().converged;
  }
  for (std::size_t a = 0; a < out.runs.size(); ++a) {
    for (std::size_t b = a + 1; b < out.runs.size(); ++b) {
      const double dx = weighted_l2_distance(out.runs[a].final.x, out.runs[b].final.x, cfg.grid);
      const double dy = weighted_l2_distance(out.runs[a].final.y, out.runs[b].final.y, cfg.grid);
      out.max_distance = std::max(out.max_distance, std::sqrt(dx * dx + dy * dy));
    }
  }
  return out;
}

}  // namespace mkv
