#include "mkv/time_grid.hpp"

#include <cmath>
#include <string>

#include "mkv/error.hpp"

namespace mkv {

TimeGrid::TimeGrid(double horizon, double dt, double discount_weight)
    : horizon_(horizon), dt_(dt), n_steps_(0), discount_(discount_weight) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ValidationError("time grid: horizon must be a positive finite number");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ValidationError("time grid: dt must be a positive finite number");
  }
  if (!std::isfinite(discount_weight)) {
    throw ValidationError("time grid: discount weight K must be finite");
  }
  const double steps = std::round(horizon / dt);
  if (steps < 1.0) {
    throw ValidationError("time grid: dt exceeds the horizon");
  }
  if (std::abs(steps * dt - horizon) > 1e-12 * horizon) {
    throw ValidationError("time grid: horizon " + std::to_string(horizon) +
                          " is not an integer multiple of dt " + std::to_string(dt));
  }
  n_steps_ = static_cast<std::size_t>(steps);
  dt_ = horizon / steps;
}

double TimeGrid::t(std::size_t i) const noexcept {
  return i >= n_steps_ ? horizon_ : static_cast<double>(i) * dt_;
}

TimeGrid TimeGrid::with_discount(double discount_weight) const {
  return TimeGrid(horizon_, dt_, discount_weight);
}

bool TimeGrid::same_points(const TimeGrid& other) const noexcept {
  return n_steps_ == other.n_steps_ && horizon_ == other.horizon_;
}

}  // namespace mkv
