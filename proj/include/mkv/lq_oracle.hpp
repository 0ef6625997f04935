#pragma once

#include <iosfwd>
#include <vector>

#include "mkv/coefficients.hpp"
#include "mkv/paths.hpp"
#include "mkv/random.hpp"
#include "mkv/time_grid.hpp"

namespace mkv {

// Constant solutions of the Riccati pair at a fixed time.
struct StationaryRoots {
  double eta_star = 0.0;
  double eta_bar_star = 0.0;
};

// Roots on or above the vertex of each quadratic are admissible; if two are,
// the one giving the more negative closed-loop drift is chosen.
// Throws NoRealRootError on a negative discriminant and DomainError if b2 = 0.
StationaryRoots stationary_roots(const LQModel& model, double t);

// Lower bound (p / b2^2)(b1 - r/2) that the feedback gain must respect.
double eta_lower_bound(const LQModel& model, double t);

struct RiccatiSolution {
  TimeGrid grid;
  std::vector<double> eta;
  std::vector<double> chi;
  std::vector<double> eta_bar;
  std::vector<double> x_bar;

  // Columns t, eta, chi, eta_bar, x_bar with 17 significant digits.
  void write_csv(std::ostream& out) const;
};

// RK4 on the grid: gains backward from their stationary values at T, the mean
// forward from xi_mean, the offset chi backward from 0. Throws
// DivergenceError if |eta| exceeds 1e6 and InfeasibleError if the gain
// leaves its admissible range.
RiccatiSolution riccati_solve(const LQModel& model, const TimeGrid& grid, double xi_mean);

// Simulates the optimal feedback a = -(b2/p)(eta X + chi) and fills
// y = eta X + chi, z = eta sigma.
ParticleEnsemble lq_closed_loop(const LQModel& model, const RiccatiSolution& ric, const XiSpec& xi,
                                const BrownianDriver& driver);

}  // namespace mkv
