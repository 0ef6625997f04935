#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mkv/coefficients.hpp"
#include "mkv/empirical_law.hpp"
#include "mkv/random.hpp"
#include "mkv/solvers.hpp"
#include "mkv/time_grid.hpp"

namespace mkv {

enum class CheckMethod { arithmetic, monte_carlo };

// Outcome of one sufficient-condition check. margin is the signed slack
// (positive means satisfied); Monte Carlo checks are falsifiers and report a
// standard error.
struct ConditionReport {
  std::string condition_id;
  bool holds = false;
  double margin = 0.0;
  CheckMethod method = CheckMethod::arithmetic;
  std::size_t samples_used = 0;
  std::optional<double> std_error;
};

const char* to_string(CheckMethod method);

// Random coupled clouds used by the Monte Carlo checkers: two-component
// Gaussian mixtures with means in [-3, 3], scales in [0.1, 2] and
// correlation in [-0.9, 0.9].
struct CloudGenerator {
  double mean_bound = 3.0;
  double scale_lo = 0.1;
  double scale_hi = 2.0;
  double corr_bound = 0.9;
  double horizon = 10.0;  // times are drawn uniformly from [0, horizon]
};

// Monotonicity of (B, F) with weight K: on each draw evaluates
//   E[-K dX dY - dX dF + dY dB] + kappa E[dX^2 + dY^2]
// over a random pair of clouds. Fails when a draw is positive beyond two
// standard errors; margin = -max(draw - 2 se).
ConditionReport check_assumption1_mc(const CoefficientSet& coeffs, double K, double kappa, std::size_t n_pairs,
                                     std::size_t cloud_size, std::uint64_t seed, const CloudGenerator& gen = {});

// Joint Lipschitz bound |dB| + |dF| <= l (|dx| + |dy| + W2(m, m')) on random points.
ConditionReport check_assumption1_lipschitz_mc(const CoefficientSet& coeffs, double l, std::size_t n_samples,
                                               std::size_t cloud_size, std::uint64_t seed,
                                               const CloudGenerator& gen = {});

// One-sided monotonicity of F in y (kappa1) and of B in x (kappa2).
ConditionReport check_assumption2_monotone_mc(const CoefficientSet& coeffs, double kappa1, double kappa2,
                                              std::size_t n_samples, std::uint64_t seed,
                                              const CloudGenerator& gen = {});

// Partial Lipschitz bounds of F in (x, m) with l1 and of B in (y, m) with l2.
ConditionReport check_assumption2_lipschitz_mc(const CoefficientSet& coeffs, double l1, double l2,
                                               std::size_t n_samples, std::size_t cloud_size, std::uint64_t seed,
                                               const CloudGenerator& gen = {});

struct SplitCheck {
  ConditionReport report;
  // 4 l1 l2 / (eps1 eps2 (-K + 2k1 - 2l1 - 2l1 eps1)(K + 2k2 - 2l2 - 2l2 eps2)),
  // the contraction factor of the Picard map on squared norms.
  double contraction_constant = 0.0;
};

SplitCheck check_assumption2_constants(double kappa1, double kappa2, double l1, double l2, double eps1, double eps2,
                                       double K);

// |F(., 0, 0, delta_0)|_K^2 + |B(., 0, 0, delta_0)|_K^2 on the truncated grid;
// holds when finite, margin = 1 / (1 + value).
ConditionReport check_assumption2_integrability(const CoefficientSet& coeffs, const TimeGrid& grid);

// Checks on the control data: measure-Lipschitz drift (l), integrability of
// the drift and cost at the origin, and dissipativity of the drift in x with
// kappa > l - r/2. Returns the three reports in that order.
std::vector<ConditionReport> check_assumption3(const ControlModel& model, double kappa, double l,
                                               const TimeGrid& grid, std::size_t n_samples, std::uint64_t seed);

enum class TheoremVariant { primary, alternate };

// Constants entering the closed-form sufficient conditions.
struct ConditionInputs {
  ConvexityParams convexity;
  double r = 0.0;
  TimeFunction b1;
  TimeFunction b2;
  bool unconstrained_actions = true;
};

ConditionInputs condition_inputs(const ControlModel& model);
// LQ metadata: eta = min p / 2, zeta = max p, iota = min q / 2, and
// l = max(|b1_bar|, |q_bar|) (primary) or max(|b1_bar|, |q| + |q_bar|) (alternate).
ConditionInputs condition_inputs(const LQModel& model, const TimeGrid& grid, TheoremVariant variant);

struct TheoremCheck {
  ConditionReport report;
  // primary: the infimum compared with r/2; alternate: the bound max_t b1 must not exceed.
  double threshold = 0.0;
};

// Mean field control conditions.
TheoremCheck check_theorem31_conditions(const ConditionInputs& in, const TimeGrid& grid, TheoremVariant variant);
// Mean field game conditions.
TheoremCheck check_theorem32_conditions(const ConditionInputs& in, const TimeGrid& grid, TheoremVariant variant);

// Closed-loop control a = policy(step, t, x, law of X at step).
using FeedbackPolicy = std::function<double(std::size_t step, double t, double x, const EmpiricalLaw& mu)>;

struct CostEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Per-particle discounted costs (trapezoid over the driver's grid) under the
// policy. When frozen_flow is given (one law per grid point) the population
// law is held fixed, which is the representative-player setting.
std::vector<double> simulate_costs(const ControlModel& model, const FeedbackPolicy& policy, double sigma,
                                   const XiSpec& xi, const BrownianDriver& driver,
                                   const std::vector<EmpiricalLaw>* frozen_flow = nullptr);

// Monte Carlo estimate of E int_0^T e^{-rt} f dt with standard error.
CostEstimate estimate_cost(const ControlModel& model, const FeedbackPolicy& policy, double sigma, const XiSpec& xi,
                           const BrownianDriver& driver, const std::vector<EmpiricalLaw>* frozen_flow = nullptr);
// Open-loop variant: controls[step][particle].
CostEstimate estimate_cost(const ControlModel& model, const Paths& controls, double sigma, const XiSpec& xi,
                           const BrownianDriver& driver, const std::vector<EmpiricalLaw>* frozen_flow = nullptr);

// J(reference) - J(alternative) under common random numbers, with the
// standard error of the paired difference.
CostEstimate paired_cost_difference(const ControlModel& model, const FeedbackPolicy& reference,
                                    const FeedbackPolicy& alternative, double sigma, const XiSpec& xi,
                                    const BrownianDriver& driver,
                                    const std::vector<EmpiricalLaw>* frozen_flow = nullptr);

// Feedback built from a solved ensemble: y is regressed on x per grid slice
// and the Hamiltonian minimizer is evaluated at the fitted y.
FeedbackPolicy feedback_from_solution(const ControlModel& model, const ParticleEnsemble& solution,
                                      std::size_t degree = 1);

struct ProbeResult {
  double worst_delta = 0.0;      // max over perturbations of J(optimal) - J(perturbed)
  double worst_std_error = 0.0;  // standard error of that difference
  std::vector<CostEstimate> deltas;
};

// Compares the solved feedback with random bumps eps (u0 + u1 x + u2 sin(w t)).
// For the game the population law is frozen at the solved flow.
ProbeResult optimality_probe(const ControlModel& model, Problem problem, const SolveReport& solved, double sigma,
                             const XiSpec& xi, const BrownianDriver& driver, std::size_t n_perturbations,
                             double epsilon, std::uint64_t seed);

}  // namespace mkv
