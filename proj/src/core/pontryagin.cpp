#include "mkv/pontryagin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <tuple>

#include "mkv/error.hpp"

namespace mkv {
namespace {

constexpr double kArgminTol = 1e-10;
constexpr double kInvPhi = 0.6180339887498949;

double drift_da(const ControlModel& model, double t, double x, const EmpiricalLaw& mu, double a) {
  if (model.linear_drift) return model.linear_drift->b2(t);
  const double h = 1e-6 * std::max(1.0, std::abs(a));
  return (model.drift(t, x, mu, a + h) - model.drift(t, x, mu, a - h)) / (2.0 * h);
}

double hamiltonian_unchecked(const ControlModel& model, double t, double x, const EmpiricalLaw& mu, double a,
                             double y) {
  return model.drift(t, x, mu, a) * y + model.cost(t, x, mu, a) - model.discount * x * y;
}

// Initial search interval for an unbounded action set, from the convexity
// modulus: |argmin - a0| <= |dH/da(a0)| / (2 eta).
std::pair<double, double> convex_bracket(const ControlModel& model, double t, double x, const EmpiricalLaw& mu,
                                         double y) {
  const ActionSet& set = model.actions;
  const double a0 = set.clip(0.0);
  const double g0 = hamiltonian_da(model, t, x, mu, a0, y);
  const double radius = std::abs(g0) / model.convexity->eta + 1.0;
  double lo = set.clip(a0 - radius), hi = set.clip(a0 + radius);
  // Widen if the declared modulus was optimistic.
  for (int k = 0; k < 64; ++k) {
    const bool lo_ok = lo == set.lo || hamiltonian_da(model, t, x, mu, lo, y) <= 0.0;
    const bool hi_ok = hi == set.hi || hamiltonian_da(model, t, x, mu, hi, y) >= 0.0;
    if (lo_ok && hi_ok) break;
    const double width = hi - lo;
    if (!lo_ok) lo = set.clip(lo - width);
    if (!hi_ok) hi = set.clip(hi + width);
  }
  return {lo, hi};
}

double golden_section(const ControlModel& model, double t, double x, const EmpiricalLaw& mu, double y, double lo,
                      double hi) {
  auto h = [&](double a) { return hamiltonian_unchecked(model, t, x, mu, a, y); };
  double c = hi - kInvPhi * (hi - lo), d = lo + kInvPhi * (hi - lo);
  double hc = h(c), hd = h(d);
  const double width_tol = 1e-6 * std::max(1.0, std::abs(lo) + std::abs(hi));
  while (hi - lo > width_tol) {
    if (hc <= hd) {
      hi = d;
      d = c;
      hd = hc;
      c = hi - kInvPhi * (hi - lo);
      hc = h(c);
    } else {
      lo = c;
      c = d;
      hc = hd;
      d = lo + kInvPhi * (hi - lo);
      hd = h(d);
    }
  }
  return 0.5 * (lo + hi);
}

double derivative_bisection(const ControlModel& model, double t, double x, const EmpiricalLaw& mu, double y,
                            double lo, double hi) {
  auto g = [&](double a) { return hamiltonian_da(model, t, x, mu, a, y); };
  if (g(lo) >= 0.0) return lo;
  if (g(hi) <= 0.0) return hi;
  for (int k = 0; k < 200 && hi - lo > kArgminTol; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void require_linear_drift(const ControlModel& model) {
  if (!model.linear_drift) {
    throw CapabilityError(
        "coefficient assembly needs a drift of the form b0(t) + b1_bar(t) mean + b1(t) x + b2(t) a; "
        "declare linear_drift on the control model");
  }
}

// Equal-weight average over the atoms (x', y') of m of the cost's measure
// derivative, evaluated at x.
double atom_average(const ControlModel& model, double t, const EmpiricalLaw& m, const EmpiricalLaw& mu, double x) {
  auto xs = m.column(0), ys = m.column(1);
  double total = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double a = argmin_hamiltonian(model, t, xs[k], mu, ys[k]);
    total += model.cost_dmu(t, xs[k], mu, a, x);
  }
  return total / static_cast<double>(xs.size());
}

struct AtomAverageCache {
  const void* owner = nullptr;
  std::uint64_t law = 0;
  double t = std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
};

}  // namespace

double hamiltonian(const ControlModel& model, double t, double x, const EmpiricalLaw& mu, double a, double y) {
  if (!model.actions.contains(a)) {
    throw DomainError("hamiltonian: action " + std::to_string(a) + " outside the action set");
  }
  return hamiltonian_unchecked(model, t, x, mu, a, y);
}

double hamiltonian_da(const ControlModel& model, double t, double x, const EmpiricalLaw& mu, double a, double y) {
  return drift_da(model, t, x, mu, a) * y + model.cost_da(t, x, mu, a);
}

double argmin_hamiltonian(const ControlModel& model, double t, double x, const EmpiricalLaw& mu, double y) {
  if (model.analytic_argmin) return model.actions.clip(model.analytic_argmin(t, x, mu, y));
  double lo = model.actions.lo, hi = model.actions.hi;
  if (!model.actions.bounded()) {
    if (!model.convexity) {
      throw CapabilityError("argmin: unbounded action set needs a declared convexity modulus eta");
    }
    std::tie(lo, hi) = convex_bracket(model, t, x, mu, y);
  }
  const double guess = golden_section(model, t, x, mu, y, lo, hi);
  const double window = 1e-5 * std::max(1.0, std::abs(lo) + std::abs(hi));
  return derivative_bisection(model, t, x, mu, y, std::max(lo, guess - window), std::min(hi, guess + window));
}

CoefficientSet assemble_mfc_coefficients(const ControlModel& model, double sigma) {
  require_linear_drift(model);
  if (!model.cost_dmu) throw ValidationError("MFC assembly: the cost's measure derivative is required");
  auto shared = std::make_shared<const ControlModel>(model);
  CoefficientSet c;
  c.sigma = sigma;
  c.drift = [shared](double t, double x, double y, const EmpiricalLaw& m) {
    const EmpiricalLaw mu = m.marginal(0);
    return shared->drift(t, x, mu, argmin_hamiltonian(*shared, t, x, mu, y));
  };
  c.driver = [shared](double t, double x, double y, const EmpiricalLaw& m) {
    const ControlModel& cm = *shared;
    const EmpiricalLaw mu = m.marginal(0);
    const double a = argmin_hamiltonian(cm, t, x, mu, y);
    double integral;
    if (cm.cost_dmu_ignores_x) {
      thread_local AtomAverageCache cache;
      if (cache.owner != shared.get() || cache.law != m.id() || cache.t != t) {
        cache = {shared.get(), m.id(), t, atom_average(cm, t, m, mu, x)};
      }
      integral = cache.value;
    } else {
      integral = atom_average(cm, t, m, mu, x);
    }
    const LinearDrift& lin = *cm.linear_drift;
    return lin.b1(t) * y + cm.cost_dx(t, x, mu, a) - cm.discount * y + lin.b1_bar(t) * m.mean(1) + integral;
  };
  return c;
}

CoefficientSet assemble_mfg_coefficients(const ControlModel& model, double sigma) {
  require_linear_drift(model);
  auto shared = std::make_shared<const ControlModel>(model);
  CoefficientSet c;
  c.sigma = sigma;
  c.drift = [shared](double t, double x, double y, const EmpiricalLaw& m) {
    const EmpiricalLaw mu = m.marginal(0);
    return shared->drift(t, x, mu, argmin_hamiltonian(*shared, t, x, mu, y));
  };
  c.driver = [shared](double t, double x, double y, const EmpiricalLaw& m) {
    const ControlModel& cm = *shared;
    const EmpiricalLaw mu = m.marginal(0);
    const double a = argmin_hamiltonian(cm, t, x, mu, y);
    return cm.linear_drift->b1(t) * y + cm.cost_dx(t, x, mu, a) - cm.discount * y;
  };
  return c;
}

}  // namespace mkv
