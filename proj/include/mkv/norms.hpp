#pragma once

#include "mkv/empirical_law.hpp"
#include "mkv/paths.hpp"
#include "mkv/time_grid.hpp"

#include <cstddef>

namespace mkv {

// sqrt of the trapezoid rule for (1/N) sum_j int_0^T e^{-Kt} v_j(t)^2 dt.
// v must carry one slice per grid point.
double weighted_l2_norm(const Paths& v, const TimeGrid& grid);

// weighted_l2_norm(a - b) without materializing the difference.
double weighted_l2_distance(const Paths& a, const Paths& b, const TimeGrid& grid);

inline constexpr std::size_t kDefaultAssignmentCap = 512;

// Exact W2 between equal-weight clouds. d = 1 uses the sorted quantile
// coupling (any sizes); d = 2 solves the assignment problem and needs equal
// sizes no larger than assignment_cap.
double wasserstein2(const EmpiricalLaw& a, const EmpiricalLaw& b,
                    std::size_t assignment_cap = kDefaultAssignmentCap);

}  // namespace mkv
