#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "mkv/empirical_law.hpp"
#include "mkv/error.hpp"
#include "mkv/norms.hpp"
#include "mkv/paths.hpp"
#include "mkv/random.hpp"
#include "mkv/time_grid.hpp"

namespace {

using namespace mkv;

// W2 by brute force over all matchings of two equal-size 2-d clouds.
double brute_w2(const std::vector<std::array<double, 2>>& a, const std::vector<std::array<double, 2>>& b) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double dx = a[i][0] - b[perm[i]][0], dy = a[i][1] - b[perm[i]][1];
      c += dx * dx + dy * dy;
    }
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best / static_cast<double>(a.size()));
}

// 1-d W2 for unequal sizes: replicate atoms to the common size Na*Nb and match sorted.
double replicated_w2(std::vector<double> a, std::vector<double> b) {
  std::vector<double> ra, rb;
  for (double v : a) ra.insert(ra.end(), b.size(), v);
  for (double v : b) rb.insert(rb.end(), a.size(), v);
  std::sort(ra.begin(), ra.end());
  std::sort(rb.begin(), rb.end());
  double c = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) c += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return std::sqrt(c / static_cast<double>(ra.size()));
}

std::vector<double> randn(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

Paths random_paths(std::size_t n_part, std::size_t n_times, std::uint64_t seed) {
  Paths p(n_part, n_times);
  const auto v = randn(n_part * n_times, seed);
  for (std::size_t i = 0; i < n_times; ++i)
    for (std::size_t j = 0; j < n_part; ++j) p(j, i) = v[i * n_part + j];
  return p;
}

TEST(TimeGrid, PointsAndValidation) {
  TimeGrid g(10.0, 0.01, 0.5);
  EXPECT_EQ(g.n_steps(), 1000u);
  EXPECT_EQ(g.t(0), 0.0);
  EXPECT_EQ(g.t(g.n_steps()), 10.0);
  for (std::size_t i = 1; i <= g.n_steps(); ++i) EXPECT_GT(g.t(i), g.t(i - 1));
  EXPECT_LE(std::abs(g.n_steps() * g.dt() - g.horizon()), 1e-12 * g.horizon());
  EXPECT_THROW(TimeGrid(10.0, 0.0, 0.5), ValidationError);
  EXPECT_THROW(TimeGrid(-1.0, 0.1, 0.5), ValidationError);
  EXPECT_THROW(TimeGrid(1.0, 0.3, 0.5), ValidationError);  // not a divisor
  EXPECT_TRUE(g.same_points(g.with_discount(2.0)));
}

TEST(Paths, LayoutAndConstantInTime) {
  Paths p(3, 4);
  p(2, 1) = 5.0;
  EXPECT_EQ(p.slice(1)[2], 5.0);
  const std::vector<double> v{1, 2, 3};
  const auto c = Paths::constant_in_time(v, 4);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(c(1, i), 2.0);
  EXPECT_EQ(c.particle_path(2), std::vector<double>(4, 3.0));
  EXPECT_TRUE(c.all_finite());
}

TEST(EmpiricalLaw, MomentsMarginalsAndValidation) {
  EmpiricalLaw m(std::vector<double>{1, 2, 3, 6}, std::vector<double>{0, 0, 1, 1});
  EXPECT_EQ(m.dim(), 2u);
  EXPECT_DOUBLE_EQ(m.mean(0), 3.0);
  EXPECT_DOUBLE_EQ(m.second_moment(0), (1 + 4 + 9 + 36) / 4.0);
  EXPECT_DOUBLE_EQ(m.variance(0), 12.5 - 9.0);
  EXPECT_DOUBLE_EQ(m.covariance(), ((1 + 2) * 0 + (3 + 6) * 1) / 4.0 - 3.0 * 0.5);
  const auto x = m.marginal(0);
  EXPECT_EQ(x.dim(), 1u);
  EXPECT_DOUBLE_EQ(x.mean(), 3.0);
  EXPECT_NE(x.id(), m.id());
  EXPECT_THROW(EmpiricalLaw(std::vector<double>{}), ValidationError);
  EXPECT_THROW(EmpiricalLaw(std::vector<double>{1.0, NAN}), ValidationError);
  EXPECT_THROW(EmpiricalLaw(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), DimensionError);
}

TEST(WeightedNorm, ClosedForms) {
  TimeGrid g(10.0, 0.001, 1.0);
  EXPECT_EQ(weighted_l2_norm(Paths(5, g.n_points(), 0.0), g), 0.0);
  const double one = weighted_l2_norm(Paths(5, g.n_points(), 1.0), g);
  EXPECT_NEAR(one, std::sqrt(1.0 - std::exp(-10.0)), 1e-4);
  EXPECT_NEAR(weighted_l2_norm(Paths(5, g.n_points(), 3.0), g), 3.0 * one, 1e-12);
  EXPECT_NEAR(3.0 * one, 2.99993, 1e-4);
  EXPECT_THROW(weighted_l2_norm(Paths(5, g.n_points() - 1, 1.0), g), DimensionError);
}

TEST(WeightedNorm, TriangleAndHomogeneityProperty) {
  TimeGrid g(2.0, 0.05, 0.7);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto a = random_paths(8, g.n_points(), 2 * s), b = random_paths(8, g.n_points(), 2 * s + 1);
    Paths sum(8, g.n_points()), scaled(8, g.n_points());
    const double c = -3.0 + 0.06 * static_cast<double>(s);
    for (std::size_t i = 0; i < g.n_points(); ++i)
      for (std::size_t j = 0; j < 8; ++j) {
        sum(j, i) = a(j, i) + b(j, i);
        scaled(j, i) = c * a(j, i);
      }
    const double na = weighted_l2_norm(a, g), nb = weighted_l2_norm(b, g);
    EXPECT_LE(weighted_l2_norm(sum, g), (na + nb) * (1 + 1e-10));
    EXPECT_NEAR(weighted_l2_norm(scaled, g), std::abs(c) * na, 1e-10 * (1 + std::abs(c) * na));
    EXPECT_NEAR(weighted_l2_distance(a, b, g), weighted_l2_norm([&] {
                  Paths d(8, g.n_points());
                  for (std::size_t i = 0; i < g.n_points(); ++i)
                    for (std::size_t j = 0; j < 8; ++j) d(j, i) = a(j, i) - b(j, i);
                  return d;
                }(), g),
                1e-12);
  }
}

TEST(Wasserstein, OneDimensionalExamples) {
  const EmpiricalLaw a(std::vector<double>{0, 1});
  EXPECT_EQ(wasserstein2(a, a), 0.0);
  EXPECT_DOUBLE_EQ(wasserstein2(EmpiricalLaw(std::vector<double>{0, 0}), EmpiricalLaw(std::vector<double>{1, 1})), 1.0);
  EXPECT_DOUBLE_EQ(wasserstein2(a, EmpiricalLaw(std::vector<double>{1, 2})), 1.0);
}

TEST(Wasserstein, UnequalSizesMatchReplicatedCoupling) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto a = randn(3 + s % 7, 10 + s), b = randn(2 + s % 5, 50 + s, 1.5);
    EXPECT_NEAR(wasserstein2(EmpiricalLaw(a), EmpiricalLaw(b)), replicated_w2(a, b), 1e-12);
  }
}

TEST(Wasserstein, TwoDimensionalMatchesBruteForce) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t n = 2 + s % 5;
    const auto ax = randn(n, s), ay = randn(n, s + 100), bx = randn(n, s + 200), by = randn(n, s + 300);
    std::vector<std::array<double, 2>> pa(n), pb(n);
    for (std::size_t k = 0; k < n; ++k) {
      pa[k] = {ax[k], ay[k]};
      pb[k] = {bx[k], by[k]};
    }
    EXPECT_NEAR(wasserstein2(EmpiricalLaw(ax, ay), EmpiricalLaw(bx, by)), brute_w2(pa, pb), 1e-10);
  }
}

TEST(Wasserstein, CapabilityAndDimensionErrors) {
  const auto big = randn(600, 1);
  EXPECT_THROW(wasserstein2(EmpiricalLaw(big, big), EmpiricalLaw(big, big)), CapabilityError);
  EXPECT_THROW(wasserstein2(EmpiricalLaw(randn(4, 1), randn(4, 2)), EmpiricalLaw(randn(5, 1), randn(5, 2))),
               CapabilityError);
  EXPECT_THROW(wasserstein2(EmpiricalLaw(randn(4, 1)), EmpiricalLaw(randn(4, 1), randn(4, 2))), DimensionError);
}

TEST(Wasserstein, MetricAxiomsProperty) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const EmpiricalLaw a(randn(1 + s % 64, 3 * s)), b(randn(1 + (s * 7) % 64, 3 * s + 1, 2.0)),
        c(randn(1 + (s * 13) % 64, 3 * s + 2, 0.5));
    EXPECT_EQ(wasserstein2(a, b), wasserstein2(b, a));
    EXPECT_GE(wasserstein2(a, b), 0.0);
    EXPECT_LE(wasserstein2(a, c), wasserstein2(a, b) + wasserstein2(b, c) + 1e-10);
  }
}

TEST(Wasserstein, PairedCouplingBoundProperty) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::size_t n = 2 + s % 30;
    const auto x = randn(n, s), y = randn(n, s + 1000), x2 = randn(n, s + 2000), y2 = randn(n, s + 3000);
    double ex = 0, ey = 0;
    for (std::size_t k = 0; k < n; ++k) {
      ex += (x[k] - x2[k]) * (x[k] - x2[k]);
      ey += (y[k] - y2[k]) * (y[k] - y2[k]);
    }
    const double bound = std::sqrt(ex / n) + std::sqrt(ey / n);
    EXPECT_LE(wasserstein2(EmpiricalLaw(x, y), EmpiricalLaw(x2, y2)), bound + 1e-12);
  }
}

TEST(SampleInitial, Examples) {
  EXPECT_EQ(sample_initial(DeterministicXi{1.0}, 4, 9), std::vector<double>(4, 1.0));
  EXPECT_EQ(sample_initial(UniformXi{2.0, 2.0}, 3, 9), std::vector<double>(3, 2.0));
  const auto g = sample_initial(GaussianXi{0.0, 1.0}, 100000, 5);
  EXPECT_NEAR(std::accumulate(g.begin(), g.end(), 0.0) / g.size(), 0.0, 0.02);
  EXPECT_EQ(g, sample_initial(GaussianXi{0.0, 1.0}, 100000, 5));
  EXPECT_THROW(sample_initial(GaussianXi{0.0, -1.0}, 3, 1), ValidationError);
  EXPECT_THROW(sample_initial(UniformXi{1.0, 0.0}, 3, 1), ValidationError);
  const auto u = sample_initial(UniformXi{-1.0, 3.0}, 50000, 2);
  for (double v : u) ASSERT_TRUE(v >= -1.0 && v <= 3.0);
  EXPECT_NEAR(std::accumulate(u.begin(), u.end(), 0.0) / u.size(), 1.0, 0.03);
}

TEST(BrownianDriver, IncrementStatistics) {
  TimeGrid g(10.0, 0.01, 0.5);
  BrownianDriver d(11, 1000, g);  // 10^6 increments
  const auto all = d.all_increments().values();
  const double n = static_cast<double>(all.size());
  const double mean = std::accumulate(all.begin(), all.end(), 0.0) / n;
  double var = 0;
  for (double v : all) var += (v - mean) * (v - mean);
  var /= n;
  EXPECT_LE(std::abs(mean), 4.0 * std::sqrt(g.dt() / n));
  EXPECT_NEAR(var, g.dt(), 0.05 * g.dt());
}

TEST(BrownianDriver, ReproducibleAndIndependentOfParticleCount) {
  TimeGrid g(1.0, 0.1, 0.5);
  BrownianDriver a(3, 5, g), b(3, 5, g), c(3, 9, g), other(4, 5, g);
  EXPECT_EQ(a.all_increments(), b.all_increments());
  for (std::size_t i = 0; i < g.n_steps(); ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(a.increment(j, i), c.increment(j, i));
  EXPECT_NE(a.all_increments(), other.all_increments());
  const auto w = a.cumulative();
  EXPECT_EQ(w.n_times(), g.n_points());
  double acc = 0;
  for (std::size_t i = 0; i < g.n_steps(); ++i) acc += a.increment(2, i);
  EXPECT_NEAR(w(2, g.n_steps()), acc, 1e-14);
  const auto z = BrownianDriver::zero(4, g);
  for (double v : z.all_increments().values()) EXPECT_EQ(v, 0.0);
}

}  // namespace
