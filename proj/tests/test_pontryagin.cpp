#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mkv/coefficients.hpp"
#include "mkv/error.hpp"
#include "mkv/pontryagin.hpp"
#include "model_fixtures.hpp"

namespace {

using namespace mkv;

EmpiricalLaw cloud(std::uint64_t seed, std::size_t n = 7) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.3, 1.2);
  std::vector<double> xs(n), ys(n);
  for (auto& v : xs) v = g(rng);
  for (auto& v : ys) v = g(rng);
  return EmpiricalLaw(xs, ys);
}

ControlModel numeric_lq() {
  auto cm = lq_control_model(fixtures::benchmark_lq());
  cm.analytic_argmin = nullptr;
  cm.convexity = ConvexityParams{0.5, 0.5, 1.0, 0.0};
  return cm;
}

TEST(Hamiltonian, HandEvaluation) {
  const auto cm = lq_control_model(fixtures::benchmark_lq());
  const EmpiricalLaw mu(std::vector<double>{0.0});
  // b = -1 + 1 = 0, f = 1/2 + 1/2, discount term -0.5 * 1 * 1
  EXPECT_DOUBLE_EQ(hamiltonian(cm, 0.0, 1.0, mu, 1.0, 1.0), 0.5);
  // b = -2 + 3 = 1, f = 2 + 4.5, discount -0.5 * 2 * 2
  EXPECT_DOUBLE_EQ(hamiltonian(cm, 0.0, 2.0, mu, 3.0, 2.0), 2.0 + 6.5 - 2.0);
  EXPECT_DOUBLE_EQ(hamiltonian(cm, 0.0, 0.0, mu, 0.0, 5.0), 0.0);
  auto undiscounted = cm;
  undiscounted.discount = 0.0;
  EXPECT_DOUBLE_EQ(hamiltonian(undiscounted, 0.0, 1.0, mu, 1.0, 1.0), 1.0);
}

TEST(Hamiltonian, OutsideActionSetThrows) {
  auto cm = lq_control_model(fixtures::benchmark_lq());
  cm.actions = {0.0, 1.0};
  const EmpiricalLaw mu(std::vector<double>{0.0});
  EXPECT_NO_THROW(hamiltonian(cm, 0.0, 1.0, mu, 1.0, 1.0));
  EXPECT_THROW(hamiltonian(cm, 0.0, 1.0, mu, 1.5, 1.0), DomainError);
}

TEST(Hamiltonian, DerivativeMatchesFiniteDifference) {
  const auto cm = fixtures::NonQuadratic{}.model();
  const auto mu = cloud(1);
  for (double a : {-2.0, -0.3, 0.0, 0.8, 3.0}) {
    const double h = 1e-5;
    const double fd = (hamiltonian(cm, 0.2, 0.7, mu, a + h, -0.4) - hamiltonian(cm, 0.2, 0.7, mu, a - h, -0.4)) / (2 * h);
    EXPECT_NEAR(hamiltonian_da(cm, 0.2, 0.7, mu, a, -0.4), fd, 1e-7);
  }
}

TEST(Argmin, LqClosedFormAndNumeric) {
  const EmpiricalLaw mu(std::vector<double>{0.0});
  const auto cm = lq_control_model(fixtures::benchmark_lq());
  EXPECT_DOUBLE_EQ(argmin_hamiltonian(cm, 0.0, 1.0, mu, 2.0), -2.0);
  EXPECT_DOUBLE_EQ(argmin_hamiltonian(cm, 0.0, 1.0, mu, 0.0), 0.0);
  const auto num = numeric_lq();
  EXPECT_NEAR(argmin_hamiltonian(num, 0.0, 1.0, mu, 2.0), -2.0, 1e-8);
  EXPECT_NEAR(argmin_hamiltonian(num, 0.0, 1.0, mu, 0.0), 0.0, 1e-8);
}

TEST(Argmin, ClippedToActionSet) {
  const EmpiricalLaw mu(std::vector<double>{0.0});
  for (bool analytic : {true, false}) {
    auto cm = analytic ? lq_control_model(fixtures::benchmark_lq()) : numeric_lq();
    cm.actions = {0.0, 1.0};
    const double a = argmin_hamiltonian(cm, 0.0, 1.0, mu, 2.0);
    EXPECT_NEAR(a, 0.0, 1e-8);
    double best = std::numeric_limits<double>::infinity(), best_a = -1;
    for (int k = 0; k <= 1000; ++k) {
      const double c = k / 1000.0;
      const double h = hamiltonian(cm, 0.0, 1.0, mu, c, 2.0);
      if (h < best) best = h, best_a = c;
    }
    EXPECT_NEAR(a, best_a, 1e-3);
  }
}

TEST(Argmin, UnboundedWithoutConvexityIsCapabilityError) {
  auto cm = numeric_lq();
  cm.convexity.reset();
  const EmpiricalLaw mu(std::vector<double>{0.0});
  EXPECT_THROW(argmin_hamiltonian(cm, 0.0, 1.0, mu, 1.0), CapabilityError);
  cm.actions = {-5.0, 5.0};
  EXPECT_NEAR(argmin_hamiltonian(cm, 0.0, 1.0, mu, 1.0), -1.0, 1e-8);
}

// First-order condition and global minimality over random states.
TEST(Argmin, FirstOrderConditionAndMinimalityProperty) {
  const auto cm = fixtures::NonQuadratic{}.model();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-4.0, 4.0), tt(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto mu = cloud(100 + trial);
    const double t = tt(rng), x = u(rng), y = u(rng);
    const double a = argmin_hamiltonian(cm, t, x, mu, y);
    EXPECT_NEAR(hamiltonian_da(cm, t, x, mu, a, y), 0.0, 1e-6);
    const double h = hamiltonian(cm, t, x, mu, a, y);
    for (int k = 0; k < 100; ++k) EXPECT_LE(h, hamiltonian(cm, t, x, mu, u(rng) * 3.0, y) + 1e-12);
  }
}

// Lipschitz continuity of the optimal control in (x, y) and its monotonicity in y.
TEST(Argmin, LipschitzAndMonotoneProperty) {
  const fixtures::NonQuadratic k;
  const auto cm = k.model();
  const double eta = 0.5 * k.p;
  const double lip_x = k.g / (2 * eta), lip_y = std::abs(k.b2) / (2 * eta);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const auto mu = cloud(5);
  for (int trial = 0; trial < 500; ++trial) {
    const double x1 = u(rng), x2 = u(rng), y1 = u(rng), y2 = u(rng);
    const double a1 = argmin_hamiltonian(cm, 0.0, x1, mu, y1);
    const double a2 = argmin_hamiltonian(cm, 0.0, x2, mu, y2);
    EXPECT_LE(std::abs(a1 - a2), lip_x * std::abs(x1 - x2) + lip_y * std::abs(y1 - y2) + 1e-8);
    // increasing y lowers the control when b2 > 0
    const double a3 = argmin_hamiltonian(cm, 0.0, x1, mu, y1 + 0.5);
    EXPECT_LE(a3, a1 + 1e-9);
  }
}

TEST(Assembly, RequiresLinearDriftAndMeasureDerivative) {
  auto cm = fixtures::NonQuadratic{}.model();
  auto no_drift = cm;
  no_drift.linear_drift.reset();
  EXPECT_THROW(assemble_mfc_coefficients(no_drift, 1.0), CapabilityError);
  auto no_dmu = cm;
  no_dmu.cost_dmu = nullptr;
  EXPECT_THROW(assemble_mfc_coefficients(no_dmu, 1.0), ValidationError);
  EXPECT_NO_THROW(assemble_mfg_coefficients(no_dmu, 1.0));
}

TEST(Assembly, GameDriverIsAdjointOfHamiltonian) {
  const auto cm = fixtures::NonQuadratic{}.model();
  const auto g = assemble_mfg_coefficients(cm, 1.0);
  const auto mu = cloud(3);
  for (double x : {-1.0, 0.5, 2.0})
    for (double y : {-0.7, 0.0, 1.1}) {
      const double a = argmin_hamiltonian(cm, 0.0, x, mu, y);
      const double h = 1e-5;
      const double dh = (hamiltonian(cm, 0.0, x + h, mu, a, y) - hamiltonian(cm, 0.0, x - h, mu, a, y)) / (2 * h);
      // the discounted Hamiltonian already carries the -r y part of the driver
      EXPECT_NEAR(g.driver(0.0, x, y, mu), dh, 1e-6);
      EXPECT_NEAR(g.drift(0.0, x, y, mu), cm.drift(0.0, x, mu, a), 1e-10);
    }
}

TEST(Assembly, SingleAtomMeasureTerm) {
  auto cm = fixtures::NonQuadratic{}.model();
  cm.cost_dmu = [](double, double atom, const EmpiricalLaw&, double, double x_self) { return atom * x_self; };
  cm.cost_dmu_ignores_x = false;
  const auto c = assemble_mfc_coefficients(cm, 1.0);
  const auto g = assemble_mfg_coefficients(cm, 1.0);
  const EmpiricalLaw atom(std::vector<double>{1.5}, std::vector<double>{0.4});
  // with a single atom at (x, y) the integral is the integrand at the atom itself
  const double x = 1.5, y = 0.4;
  const double expected = g.driver(0.0, x, y, atom) + 0.2 * 0.4 + x * x;
  EXPECT_NEAR(c.driver(0.0, x, y, atom), expected, 1e-10);
}

}  // namespace
