#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mkv {

// Least-squares fit of a target v on the joint basis {u^k, k <= degree} x {1, w}
// where u is the standardized regressor and w = dW / sqrt(dt). The w-free part
// is the conditional expectation given the regressor; the w-coefficient
// polynomial divided by sqrt(dt) estimates the martingale integrand.
struct SliceFit {
  std::vector<double> mean_coeffs;  // in powers of u
  std::vector<double> noise_coeffs;  // in powers of u; empty if the noise is degenerate
  double shift = 0.0;
  double scale = 1.0;
  bool fallback = false;  // degree lowered after a singular design (a flat regressor is not counted)

  // out = conditional expectation at each regressor value
  void conditional_mean(std::span<const double> regressor, std::span<double> out) const;
  // out = estimated integrand at each regressor value (zero if no noise part)
  void integrand(std::span<const double> regressor, double dt, std::span<double> out) const;
};

SliceFit fit_slice(std::span<const double> regressor, std::span<const double> normalized_noise,
                   std::span<const double> target, std::size_t degree);

}  // namespace mkv
