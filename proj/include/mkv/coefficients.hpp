#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "mkv/empirical_law.hpp"
#include "mkv/time_grid.hpp"

namespace mkv {

// Scalar function of time: a constant, a right-continuous step function
// given by (start time, value) breakpoints beginning at t = 0, or a callable.
class TimeFunction {
 public:
  TimeFunction(double constant = 0.0);  // NOLINT(google-explicit-constructor)
  static TimeFunction piecewise(std::vector<std::pair<double, double>> breakpoints);
  static TimeFunction from(std::function<double(double)> fn);

  double operator()(double t) const;
  bool is_constant() const noexcept { return !fn_ && breakpoints_.size() == 1; }
  const std::vector<std::pair<double, double>>& breakpoints() const noexcept { return breakpoints_; }

  // Extremes over the grid points (exact for step functions whose
  // breakpoints are grid points, sampled otherwise).
  double min_on(const TimeGrid& grid) const;
  double max_on(const TimeGrid& grid) const;
  double max_abs_on(const TimeGrid& grid) const;

 private:
  std::vector<std::pair<double, double>> breakpoints_;
  std::function<double(double)> fn_;
};

// Coefficient over (t, x, y, law of (X, Y)).
using FbsdeFn = std::function<double(double t, double x, double y, const EmpiricalLaw& m)>;

// Constants of the monotone setting: joint Lipschitz l, monotonicity kappa,
// discount weight K with 0 < K < 2 kappa.
struct MonotoneConstants {
  double l = 0.0;
  double kappa = 0.0;
  double K = 0.0;
};

// Constants of the split (Picard) setting.
struct SplitConstants {
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double eps1 = 1.0;
  double eps2 = 1.0;
  double K = 0.0;
};

struct CoefficientSet {
  FbsdeFn drift;
  FbsdeFn driver;
  double sigma = 1.0;
  std::optional<MonotoneConstants> monotone;
  std::optional<SplitConstants> split;
};

// Throws ValidationError if sigma <= 0, a function is missing, or B/F return
// non-finite values on fuzzed finite inputs.
void validate(const CoefficientSet& coeffs, std::uint64_t fuzz_seed = 7);

// Coefficient over (t, x, law of X, action).
using ControlFn = std::function<double(double t, double x, const EmpiricalLaw& mu, double a)>;
// Measure derivative of the cost: (t, atom x', mu, a) evaluated at x.
using MeasureDerivativeFn =
    std::function<double(double t, double atom, const EmpiricalLaw& mu, double a, double x)>;
using ArgminFn = std::function<double(double t, double x, const EmpiricalLaw& mu, double y)>;

struct ActionSet {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool bounded() const noexcept;
  bool contains(double a) const noexcept { return a >= lo && a <= hi; }
  double clip(double a) const noexcept { return a < lo ? lo : (a > hi ? hi : a); }
};

struct ConvexityParams {
  double eta = 0.0;   // convexity modulus of f in a
  double iota = 0.0;  // convexity modulus of f in x
  double zeta = 0.0;  // Lipschitz constant of the a-derivative of f in a
  double l = 0.0;     // shared Lipschitz constant
};

// Drift of the form b0(t) + b1_bar(t) mean + b1(t) x + b2(t) a.
struct LinearDrift {
  TimeFunction b1;
  TimeFunction b1_bar;
  TimeFunction b2;
};

struct ControlModel {
  ControlFn drift;
  ControlFn cost;
  ControlFn cost_dx;
  ControlFn cost_da;
  MeasureDerivativeFn cost_dmu;  // optional
  // The measure derivative does not depend on its evaluation point x, so its
  // atom average can be computed once per law.
  bool cost_dmu_ignores_x = false;
  double discount = 1.0;
  ActionSet actions;
  std::optional<ConvexityParams> convexity;
  std::optional<LinearDrift> linear_drift;
  // Unconstrained minimizer of the Hamiltonian when known in closed form.
  ArgminFn analytic_argmin;
  // Quadratic growth of f is declared, never verified.
  bool quadratic_growth_declared = false;
};

// Registration checks: required functions present, r > 0, lo < hi, and
// cost_da agrees with a centered difference of cost within 1e-5 relative.
void validate(const ControlModel& model, std::uint64_t fuzz_seed = 11);

struct LQModel {
  TimeFunction b1;
  TimeFunction b1_bar;
  TimeFunction b2;
  TimeFunction q;
  TimeFunction q_bar;
  TimeFunction p = 1.0;
  double sigma = 1.0;
  double r = 1.0;
};

// p > 0 and all functions finite at every grid point; sigma >= 0, r > 0.
void validate(const LQModel& model, const TimeGrid& grid);

enum class Problem { mfc, mfg };

ControlModel lq_control_model(const LQModel& model);
CoefficientSet lq_fbsde_coefficients(const LQModel& model, Problem problem);

// Monotonicity and Lipschitz constants of the LQ FBSDE coefficients over the
// grid, with K = r (the weight under which the -r y term cancels).
MonotoneConstants lq_monotone_constants(const LQModel& model, Problem problem, const TimeGrid& grid);

}  // namespace mkv
