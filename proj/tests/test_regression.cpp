#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mkv/regression.hpp"

namespace {

using mkv::fit_slice;

TEST(Regression, RecoversAffineTargetExactly) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t n = 500;
  const double dt = 0.04;
  std::vector<double> x(n), w(n), v(n);
  for (std::size_t j = 0; j < n; ++j) {
    x[j] = 3.0 + 2.0 * g(rng);
    w[j] = g(rng);
    v[j] = 1.5 - 0.7 * x[j] + (0.4 + 0.1 * x[j]) * w[j];
  }
  const auto fit = fit_slice(x, w, v, 1);
  EXPECT_FALSE(fit.fallback);
  std::vector<double> mean(n), integrand(n);
  fit.conditional_mean(x, mean);
  fit.integrand(x, dt, integrand);
  for (std::size_t j = 0; j < n; ++j) {
    EXPECT_NEAR(mean[j], 1.5 - 0.7 * x[j], 1e-9);
    EXPECT_NEAR(integrand[j], (0.4 + 0.1 * x[j]) / std::sqrt(dt), 1e-8);
  }
}

TEST(Regression, QuadraticNeedsDegreeTwo) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> x(300), w(300, 0.0), v(300);
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] = u(rng);
    v[j] = x[j] * x[j] - 1.0;
  }
  const auto fit = fit_slice(x, w, v, 2);
  std::vector<double> mean(x.size()), integrand(x.size());
  fit.conditional_mean(x, mean);
  fit.integrand(x, 0.01, integrand);
  for (std::size_t j = 0; j < x.size(); ++j) {
    EXPECT_NEAR(mean[j], v[j], 1e-9);
    EXPECT_EQ(integrand[j], 0.0);  // degenerate noise
  }
}

TEST(Regression, FlatRegressorUsesMean) {
  std::vector<double> x(50, 4.0), w(50, 0.0), v(50);
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = static_cast<double>(j);
  const auto fit = fit_slice(x, w, v, 1);
  EXPECT_FALSE(fit.fallback);
  std::vector<double> mean(50);
  fit.conditional_mean(x, mean);
  for (double m : mean) EXPECT_NEAR(m, 24.5, 1e-12);
}

TEST(Regression, CollinearDesignFallsBack) {
  // two distinct regressor values cannot carry a quadratic
  std::vector<double> x(40), w(40, 0.0), v(40);
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] = j % 2 ? 7.0 : 3.0;
    v[j] = 3.0 + 0.5 * x[j];
  }
  const auto fit = fit_slice(x, w, v, 2);
  std::vector<double> mean(x.size());
  fit.conditional_mean(x, mean);
  EXPECT_TRUE(fit.fallback);
  EXPECT_EQ(fit.mean_coeffs.size(), 2u);  // lowered to the affine basis, which is exact here
  for (std::size_t j = 0; j < x.size(); ++j) EXPECT_NEAR(mean[j], v[j], 1e-9);
}

}  // namespace
