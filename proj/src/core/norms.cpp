#include "mkv/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mkv/error.hpp"
#include "mkv/kernels.hpp"

namespace mkv {
namespace {

void require_grid_shape(const Paths& v, const TimeGrid& grid) {
  if (v.n_times() != grid.n_points() || v.n_particles() == 0) {
    throw DimensionError("weighted norm: ensemble has " + std::to_string(v.n_times()) +
                         " time points, grid has " + std::to_string(grid.n_points()));
  }
}

template <class SliceSq>
double trapezoid(const TimeGrid& grid, std::size_t n_particles, SliceSq slice_sq) {
  const double k = grid.discount_weight();
  const std::size_t n = grid.n_steps();
  double total = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    total += w * std::exp(-k * grid.t(i)) * slice_sq(i);
  }
  return std::sqrt(std::max(0.0, total * grid.dt() / static_cast<double>(n_particles)));
}

double sorted_w2_squared(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t na = a.size(), nb = b.size();
  if (na == nb) return kernels::sum_sq_diff(a, b) / static_cast<double>(na);
  // Integrate (Qa(u) - Qb(u))^2 over the merged breakpoints k/na and k/nb.
  double total = 0.0;
  std::size_t ia = 0, ib = 0;
  double u = 0.0;
  while (ia < na && ib < nb) {
    const double next_a = static_cast<double>(ia + 1) / static_cast<double>(na);
    const double next_b = static_cast<double>(ib + 1) / static_cast<double>(nb);
    const double next = std::min(next_a, next_b);
    const double d = a[ia] - b[ib];
    total += (next - u) * d * d;
    u = next;
    // Compare with exact integer arithmetic to avoid drifting breakpoints.
    const std::size_t lhs = (ia + 1) * nb, rhs = (ib + 1) * na;
    if (lhs <= rhs) ++ia;
    if (rhs <= lhs) ++ib;
  }
  return total;
}

// Minimum-cost perfect matching on a square cost matrix (row-major), O(n^3).
double assignment_cost(const std::vector<double>& cost, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) total += cost[(p[j] - 1) * n + (j - 1)];
  return total;
}

}  // namespace

double weighted_l2_norm(const Paths& v, const TimeGrid& grid) {
  require_grid_shape(v, grid);
  return trapezoid(grid, v.n_particles(), [&](std::size_t i) {
    auto s = v.slice(i);
    return kernels::dot(s, s);
  });
}

double weighted_l2_distance(const Paths& a, const Paths& b, const TimeGrid& grid) {
  require_grid_shape(a, grid);
  require_grid_shape(b, grid);
  if (a.n_particles() != b.n_particles()) throw DimensionError("weighted norm: particle counts differ");
  return trapezoid(grid, a.n_particles(),
                   [&](std::size_t i) { return kernels::sum_sq_diff(a.slice(i), b.slice(i)); });
}

double wasserstein2(const EmpiricalLaw& a, const EmpiricalLaw& b, std::size_t assignment_cap) {
  if (a.dim() != b.dim()) throw DimensionError("wasserstein2: laws have different dimensions");
  if (a.dim() == 1) {
    auto ca = a.column(0), cb = b.column(0);
    return std::sqrt(std::max(0.0, sorted_w2_squared({ca.begin(), ca.end()}, {cb.begin(), cb.end()})));
  }
  if (a.size() != b.size()) {
    throw CapabilityError("wasserstein2: d = 2 needs clouds of equal size; subsample both to a common N");
  }
  const std::size_t n = a.size();
  if (n > assignment_cap) {
    throw CapabilityError("wasserstein2: d = 2 cloud of " + std::to_string(n) +
                          " atoms exceeds the assignment cap " + std::to_string(assignment_cap) +
                          "; subsample for diagnostics");
  }
  auto ax = a.column(0), ay = a.column(1), bx = b.column(0), by = b.column(1);
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = ax[i] - bx[j], dy = ay[i] - by[j];
      cost[i * n + j] = dx * dx + dy * dy;
    }
  }
  return std::sqrt(std::max(0.0, assignment_cost(cost, n) / static_cast<double>(n)));
}

}  // namespace mkv
