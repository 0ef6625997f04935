#pragma once

#include <cstddef>

namespace mkv {

// Uniform grid on the truncated horizon [0, T] with the discount exponent K
// used by the weighted norm e^{-Kt}.
class TimeGrid {
 public:
  TimeGrid(double horizon, double dt, double discount_weight);

  double horizon() const noexcept { return horizon_; }
  double dt() const noexcept { return dt_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  std::size_t n_points() const noexcept { return n_steps_ + 1; }
  double discount_weight() const noexcept { return discount_; }

  // t_i = i * dt, with t_{n_steps} pinned to T.
  double t(std::size_t i) const noexcept;

  // Same grid with a different K.
  TimeGrid with_discount(double discount_weight) const;

  bool same_points(const TimeGrid& other) const noexcept;

 private:
  double horizon_;
  double dt_;
  std::size_t n_steps_;
  double discount_;
};

}  // namespace mkv
