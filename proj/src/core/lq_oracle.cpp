#include "mkv/lq_oracle.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "mkv/error.hpp"
#include "mkv/kernels.hpp"

namespace mkv {
namespace {

constexpr double kBlowUp = 1e6;

// Roots of s v^2 - c v - d = 0 that lie on or above the vertex c / (2s).
// Returns the largest admissible root, which minimizes the closed-loop drift.
double admissible_root(double s, double c, double d, const char* which) {
  const double disc = c * c + 4.0 * s * d;
  if (disc < 0.0) {
    throw NoRealRootError(std::string(which) + ": negative discriminant " + std::to_string(disc));
  }
  const double sq = std::sqrt(disc);
  // Cancellation-free pair for a v^2 + b v + e with a = s, b = -c, e = -d.
  const double b = -c, e = -d;
  const double q = -0.5 * (b + std::copysign(sq, b));
  double r1, r2;
  if (q == 0.0) {
    r1 = r2 = 0.0;
  } else {
    r1 = q / s;
    r2 = e / q;
  }
  const double vertex = c / (2.0 * s);
  const double tol = 1e-12 * std::max(1.0, std::abs(vertex));
  const bool ok1 = r1 >= vertex - tol, ok2 = r2 >= vertex - tol;
  if (!ok1 && !ok2) throw InfeasibleError(std::string(which) + ": no root satisfies the admissibility bound");
  if (ok1 && ok2) return std::max(r1, r2);
  return ok1 ? r1 : r2;
}

double ratio_s(const LQModel& m, double t) {
  const double b2 = m.b2(t);
  return b2 * b2 / m.p(t);
}

double eta_rhs(const LQModel& m, double t, double eta) {
  return ratio_s(m, t) * eta * eta - (2.0 * m.b1(t) - m.r) * eta - (m.q(t) + m.q_bar(t));
}

double eta_bar_rhs(const LQModel& m, double t, double v) {
  return ratio_s(m, t) * v * v - (2.0 * m.b1(t) + m.b1_bar(t) - m.r) * v - m.q(t);
}

// Midpoint value from endpoint values and slopes (cubic Hermite).
double hermite_mid(double v0, double v1, double d0, double d1, double h) {
  return 0.5 * (v0 + v1) + h * (d0 - d1) / 8.0;
}

template <class Rhs>
void integrate_backward(const TimeGrid& grid, std::vector<double>& v, Rhs rhs, const char* which) {
  const std::size_t n = grid.n_steps();
  for (std::size_t i = n; i-- > 0;) {
    const double t1 = grid.t(i + 1), t0 = grid.t(i);
    const double h = t0 - t1;
    const double tm = 0.5 * (t0 + t1);
    const double y = v[i + 1];
    const double k1 = rhs(t1, y);
    const double k2 = rhs(tm, y + 0.5 * h * k1);
    const double k3 = rhs(tm, y + 0.5 * h * k2);
    const double k4 = rhs(t0, y + h * k3);
    v[i] = y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    if (!std::isfinite(v[i]) || std::abs(v[i]) > kBlowUp) {
      throw DivergenceError(std::string(which) + " blew up on [" + std::to_string(t0) + ", " + std::to_string(t1) +
                                "]",
                            static_cast<long>(i));
    }
  }
}

}  // namespace

double eta_lower_bound(const LQModel& m, double t) {
  const double b2 = m.b2(t);
  return (m.p(t) / (b2 * b2)) * (m.b1(t) - 0.5 * m.r);
}

StationaryRoots stationary_roots(const LQModel& m, double t) {
  const double b2 = m.b2(t), p = m.p(t);
  if (b2 == 0.0) throw DomainError("stationary roots: b2 must be nonzero");
  if (!(p > 0.0)) throw DomainError("stationary roots: p must be positive");
  const double s = b2 * b2 / p;
  StationaryRoots out;
  out.eta_star = admissible_root(s, 2.0 * m.b1(t) - m.r, m.q(t) + m.q_bar(t), "gain equation");
  out.eta_bar_star = admissible_root(s, 2.0 * m.b1(t) + m.b1_bar(t) - m.r, m.q(t), "mean gain equation");
  return out;
}

void RiccatiSolution::write_csv(std::ostream& out) const {
  out << "t,eta,chi,eta_bar,x_bar\n";
  char buf[160];
  for (std::size_t i = 0; i < eta.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", grid.t(i), eta[i], chi[i], eta_bar[i],
                  x_bar[i]);
    out << buf;
  }
}

RiccatiSolution riccati_solve(const LQModel& m, const TimeGrid& grid, double xi_mean) {
  validate(m, grid);
  const std::size_t n = grid.n_steps();
  const double T = grid.horizon();
  RiccatiSolution sol{grid, std::vector<double>(n + 1), std::vector<double>(n + 1), std::vector<double>(n + 1),
                      std::vector<double>(n + 1)};
  const StationaryRoots tail = stationary_roots(m, T);

  sol.eta_bar[n] = tail.eta_bar_star;
  integrate_backward(grid, sol.eta_bar, [&](double t, double v) { return eta_bar_rhs(m, t, v); }, "mean gain");
  sol.eta[n] = tail.eta_star;
  integrate_backward(grid, sol.eta, [&](double t, double v) { return eta_rhs(m, t, v); }, "gain");

  for (std::size_t i = 0; i <= n; ++i) {
    const double t = grid.t(i);
    if (sol.eta[i] < eta_lower_bound(m, t) - 1e-9 * std::max(1.0, std::abs(sol.eta[i]))) {
      throw InfeasibleError("riccati: gain below its admissible bound at t=" + std::to_string(t));
    }
  }

  // x_bar forward; the mean gain at half steps comes from Hermite interpolation.
  auto mean_rate = [&](double t, double gain) { return m.b1(t) + m.b1_bar(t) - gain * ratio_s(m, t); };
  sol.x_bar[0] = xi_mean;
  for (std::size_t i = 0; i < n; ++i) {
    const double t0 = grid.t(i), t1 = grid.t(i + 1), h = t1 - t0, tm = 0.5 * (t0 + t1);
    const double g0 = sol.eta_bar[i], g1 = sol.eta_bar[i + 1];
    const double gm = hermite_mid(g0, g1, eta_bar_rhs(m, t0, g0), eta_bar_rhs(m, t1, g1), h);
    const double y = sol.x_bar[i];
    const double k1 = mean_rate(t0, g0) * y;
    const double k2 = mean_rate(tm, gm) * (y + 0.5 * h * k1);
    const double k3 = mean_rate(tm, gm) * (y + 0.5 * h * k2);
    const double k4 = mean_rate(t1, g1) * (y + h * k3);
    sol.x_bar[i + 1] = y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
  }

  // chi backward: chi' = -chi (b1 - r - eta s) + (q_bar - eta b1_bar) x_bar.
  auto xbar_rate = [&](std::size_t i) { return mean_rate(grid.t(i), sol.eta_bar[i]) * sol.x_bar[i]; };
  auto chi_rhs = [&](double t, double chi, double gain, double mean) {
    return -chi * (m.b1(t) - m.r - gain * ratio_s(m, t)) + (m.q_bar(t) - gain * m.b1_bar(t)) * mean;
  };
  sol.chi[n] = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double t0 = grid.t(i), t1 = grid.t(i + 1), h = t0 - t1, tm = 0.5 * (t0 + t1);
    const double e0 = sol.eta[i], e1 = sol.eta[i + 1];
    const double em = hermite_mid(e0, e1, eta_rhs(m, t0, e0), eta_rhs(m, t1, e1), t1 - t0);
    const double xm = hermite_mid(sol.x_bar[i], sol.x_bar[i + 1], xbar_rate(i), xbar_rate(i + 1), t1 - t0);
    const double y = sol.chi[i + 1];
    const double k1 = chi_rhs(t1, y, e1, sol.x_bar[i + 1]);
    const double k2 = chi_rhs(tm, y + 0.5 * h * k1, em, xm);
    const double k3 = chi_rhs(tm, y + 0.5 * h * k2, em, xm);
    const double k4 = chi_rhs(t0, y + h * k3, e0, sol.x_bar[i]);
    sol.chi[i] = y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
  }
  for (std::size_t i = 0; i <= n; ++i) {
    if (!std::isfinite(sol.chi[i]) || !std::isfinite(sol.x_bar[i])) {
      throw DivergenceError("riccati: offset or mean is not finite", static_cast<long>(i));
    }
  }
  return sol;
}

ParticleEnsemble lq_closed_loop(const LQModel& m, const RiccatiSolution& ric, const XiSpec& xi,
                                const BrownianDriver& driver) {
  if (!driver.grid().same_points(ric.grid) || ric.eta.size() != ric.grid.n_points()) {
    throw DimensionError("closed loop: Riccati solution and driver use different grids");
  }
  const TimeGrid& grid = ric.grid;
  const std::size_t n_part = driver.n_particles(), n = grid.n_steps();
  const double dt = grid.dt();
  ParticleEnsemble out(grid, n_part);
  const auto x0 = sample_initial(xi, n_part, driver.seed());
  std::copy(x0.begin(), x0.end(), out.x.slice(0).begin());
  std::vector<double> drift(n_part);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = grid.t(i);
    auto xi_s = out.x.slice(i);
    const double mean = kernels::sum(xi_s) / static_cast<double>(n_part);
    const double b2 = m.b2(t), gain = -b2 / m.p(t);
    const double b1 = m.b1(t), bb = m.b1_bar(t);
    for (std::size_t j = 0; j < n_part; ++j) {
      drift[j] = b1 * xi_s[j] + bb * mean + b2 * gain * (ric.eta[i] * xi_s[j] + ric.chi[i]);
    }
    kernels::euler_step(out.x.slice(i + 1), xi_s, drift, driver.increments(i), dt, m.sigma);
  }
  for (std::size_t i = 0; i <= n; ++i) {
    auto xs = out.x.slice(i);
    auto ys = out.y.slice(i);
    for (std::size_t j = 0; j < n_part; ++j) ys[j] = ric.eta[i] * xs[j] + ric.chi[i];
    if (i < n) {
      for (double& z : out.z.slice(i)) z = ric.eta[i] * m.sigma;
    }
  }
  return out;
}

}  // namespace mkv
