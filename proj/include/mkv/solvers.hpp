#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mkv/coefficients.hpp"
#include "mkv/error.hpp"
#include "mkv/paths.hpp"
#include "mkv/random.hpp"
#include "mkv/time_grid.hpp"

namespace mkv {

struct SolverConfig {
  TimeGrid grid;
  std::size_t n_particles = 1000;
  double picard_tol = 1e-4;
  std::size_t max_picard_iters = 50;
  std::size_t inner_law_iters = 3;
  std::size_t regression_degree = 1;  // 1 = affine basis
  double damping = 0.0;
  // Continuation only: cap on the total number of base-case solves.
  std::size_t max_inner_solves = 10000;

  explicit SolverConfig(TimeGrid g) : grid(g) {}
};

void validate(const SolverConfig& cfg);

struct IterationRecord {
  std::size_t iter = 0;
  double delta_norm = 0.0;    // |x^{k+1} - x^k|_K
  double y_delta_norm = 0.0;  // |y^{k+1} - y^k|_K
  double wall_time = 0.0;     // seconds since the solve started
};

struct SolveReport {
  std::string method;
  std::vector<IterationRecord> iterates;
  bool converged = false;
  double contraction_ratio_estimate = 0.0;  // NaN until two iterations exist
  ParticleEnsemble final;
  double truncation_T = 0.0;
  double dt = 0.0;
  std::size_t n_particles = 0;
  std::size_t regression_fallbacks = 0;
  std::size_t inner_solves = 0;  // base-case solves (continuation)

  explicit SolveReport(const SolverConfig& cfg);
};

// Raised when continuation exhausts its solve budget; carries what was done.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, std::shared_ptr<const SolveReport> partial)
      : Error(what), partial_(std::move(partial)) {}
  const SolveReport& partial() const noexcept { return *partial_; }

 private:
  std::shared_ptr<const SolveReport> partial_;
};

// Euler scheme for x_{i+1} = x_i + B(t_i, x_i, ybar_i, law(x_i, ybar_i)) dt + sigma dW_i.
// The initial state is sampled from xi with the driver's seed.
Paths solve_mkv_sde(const CoefficientSet& coeffs, const Paths& y_bar, const XiSpec& xi, const SolverConfig& cfg,
                    const BrownianDriver& driver);
Paths solve_mkv_sde(const CoefficientSet& coeffs, const Paths& y_bar, std::span<const double> x0,
                    const SolverConfig& cfg, const BrownianDriver& driver);

struct BsdeSolution {
  Paths y;
  Paths z;
  std::size_t regression_fallbacks = 0;
};

// Backward sweep from y_T = 0: y_i = E[y_{i+1} | x_i] + F(t_i, x_i, y_i, m_i) dt,
// solved for y_i per particle, with m_i = law(x_i, y_i) frozen from the
// previous sweep. y_guess seeds the first law (zeros if null).
BsdeSolution solve_bsde(const CoefficientSet& coeffs, const Paths& x, const SolverConfig& cfg,
                        const BrownianDriver& driver, const Paths* y_guess = nullptr);

// Linear base system dX = (-kappa Y + phi) dt + sigma dW, dY = -(kappa X + psi) dt + Z dW,
// solved through P = Y - X. Conditional expectations regress on `regressor`
// (the cumulative Brownian path if null). P_T is zero unless terminal_p is
// given. Requires 0 < K < 2 kappa.
ParticleEnsemble solve_lambda0(double kappa, double sigma, const Paths& phi, const Paths& psi,
                               std::span<const double> x0, const SolverConfig& cfg, const BrownianDriver& driver,
                               const Paths* regressor = nullptr, std::span<const double> terminal_p = {});
ParticleEnsemble solve_lambda0(double kappa, double sigma, const Paths& phi, const Paths& psi, const XiSpec& xi,
                               const SolverConfig& cfg, const BrownianDriver& driver,
                               const Paths* regressor = nullptr);

// Fixed-point iteration of the forward map composed with the backward map.
// initial_x replaces the constant-in-time start when given.
SolveReport picard_solve(const CoefficientSet& coeffs, const XiSpec& xi, const SolverConfig& cfg,
                         const BrownianDriver& driver, const Paths* initial_x = nullptr);

// Step size of the continuation in lambda.
double continuation_step(double kappa, double l);
std::size_t continuation_levels(double kappa, double l);

// Continuation from the base system to lambda = 1 in steps of
// continuation_step(kappa, l), each level solved by fixed-point iteration
// over the level below.
SolveReport continuation_solve(const CoefficientSet& coeffs, const XiSpec& xi, const SolverConfig& cfg,
                               const BrownianDriver& driver, double kappa, double l);

struct UniquenessResult {
  double max_distance = 0.0;  // max pairwise sqrt(|dx|_K^2 + |dy|_K^2)
  bool all_converged = true;
  std::vector<SolveReport> runs;
};

// Runs picard_solve from n_starts initializations (constant xi, an
// Ornstein-Uhlenbeck presolve, xi + sigma W, then cycling with shifts).
UniquenessResult uniqueness_probe(const CoefficientSet& coeffs, const XiSpec& xi, const SolverConfig& cfg,
                                  const BrownianDriver& driver, std::size_t n_starts);

}  // namespace mkv
