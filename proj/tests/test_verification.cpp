#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mkv/coefficients.hpp"
#include "mkv/error.hpp"
#include "mkv/pontryagin.hpp"
#include "mkv/solvers.hpp"
#include "mkv/verification.hpp"
#include "model_fixtures.hpp"

namespace {

using namespace mkv;

CoefficientSet linear_pair(double bx, double by, double fx, double fy) {
  CoefficientSet c;
  c.drift = [bx, by](double, double x, double y, const EmpiricalLaw&) { return bx * x + by * y; };
  c.driver = [fx, fy](double, double x, double y, const EmpiricalLaw&) { return fx * x + fy * y; };
  c.sigma = 1.0;
  return c;
}

void expect_consistent(const ConditionReport& r) {
  EXPECT_EQ(r.holds, r.margin >= 0.0) << r.condition_id << " margin " << r.margin;
  if (r.method == CheckMethod::monte_carlo) {
    EXPECT_TRUE(r.std_error.has_value()) << r.condition_id;
    EXPECT_GT(r.samples_used, 0u);
  }
}

ConditionInputs inputs(double l, double eta, double zeta, double iota, double b1, double b2, double r) {
  ConditionInputs in;
  in.convexity = ConvexityParams{eta, iota, zeta, l};
  in.r = r;
  in.b1 = b1;
  in.b2 = b2;
  return in;
}

TEST(Assumption1, BaseCouplingIsRejectedForPositiveWeight) {
  const double kappa = 1.0;
  const auto r = check_assumption1_mc(linear_pair(0.0, -kappa, kappa, 0.0), 0.5, kappa, 200, 64, 3);
  EXPECT_FALSE(r.holds);
  EXPECT_EQ(r.condition_id, "A1-ii");
  expect_consistent(r);
}

TEST(Assumption1, ZeroCoefficientsAreRejected) {
  const auto r = check_assumption1_mc(linear_pair(0.0, 0.0, 0.0, 0.0), 0.5, 1.0, 100, 32, 1);
  EXPECT_FALSE(r.holds);
  expect_consistent(r);
}

// B = -kappa x - c y, F = c x - kappa y: the expression equals
// -K E[dx dy] - (c - kappa) E[dx^2 + dy^2], nonpositive once c >= kappa + K/2.
TEST(Assumption1, ConformingFamilyAcceptedAcrossSeedsProperty) {
  const double kappa = 1.0, K = 0.5, c = kappa + K / 2;
  const auto coeffs = linear_pair(-kappa, -c, c, -kappa);
  int accepted = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto r = check_assumption1_mc(coeffs, K, kappa, 100, 32, seed);
    expect_consistent(r);
    accepted += r.holds ? 1 : 0;
  }
  EXPECT_GE(accepted, 99);
}

TEST(Assumption1, BenchmarkConstantsAccepted) {
  const auto m = fixtures::benchmark_lq();
  const TimeGrid g(10.0, 0.01, 0.5);
  const auto coeffs = lq_fbsde_coefficients(m, Problem::mfg);
  const auto k = lq_monotone_constants(m, Problem::mfg, g);
  EXPECT_TRUE(check_assumption1_mc(coeffs, k.K, k.kappa, 200, 64, 5).holds);
  const auto lip = check_assumption1_lipschitz_mc(coeffs, k.l, 200, 32, 5);
  EXPECT_TRUE(lip.holds);
  expect_consistent(lip);
  EXPECT_FALSE(check_assumption1_lipschitz_mc(coeffs, 0.5, 200, 32, 5).holds);
}

TEST(Assumption1, RequiresEnoughPairs) {
  EXPECT_THROW(check_assumption1_mc(linear_pair(-1, 0, 0, -1), 0.5, 1.0, 99, 32, 1), ValidationError);
}

TEST(Assumption2, SyntheticMonotoneAndLipschitz) {
  const auto coeffs = fixtures::synthetic_monotone(5.0, 1.0);
  const auto mono = check_assumption2_monotone_mc(coeffs, 5.0, 5.0, 300, 2);
  EXPECT_TRUE(mono.holds);
  expect_consistent(mono);
  EXPECT_FALSE(check_assumption2_monotone_mc(coeffs, 6.0, 5.0, 300, 2).holds);
  const auto lip = check_assumption2_lipschitz_mc(coeffs, 1.0, 1.0, 300, 32, 2);
  EXPECT_TRUE(lip.holds);
  expect_consistent(lip);
  EXPECT_FALSE(check_assumption2_lipschitz_mc(coeffs, 0.5, 0.5, 300, 32, 2).holds);
}

TEST(Assumption2, SplitConstants) {
  const auto ok = check_assumption2_constants(5, 5, 1, 1, 1, 1, 0.5);
  EXPECT_TRUE(ok.report.holds);
  EXPECT_NEAR(ok.contraction_constant, 4.0 / (5.5 * 6.5), 1e-15);
  EXPECT_NEAR(ok.contraction_constant, 0.1119, 1e-4);
  EXPECT_EQ(ok.report.method, CheckMethod::arithmetic);
  expect_consistent(ok.report);

  const auto free = check_assumption2_constants(2, 3, 0, 0, 1, 1, -5.5);
  EXPECT_TRUE(free.report.holds);
  EXPECT_EQ(free.contraction_constant, 0.0);

  const auto bad = check_assumption2_constants(1, 1, 1, 1, 1, 1, 0.5);
  EXPECT_FALSE(bad.report.holds);
  expect_consistent(bad.report);
}

TEST(Assumption2, IntegrabilityOnBoundedCoefficients) {
  const auto r = check_assumption2_integrability(fixtures::synthetic_monotone(5.0, 1.0), TimeGrid(5.0, 0.1, 0.5));
  EXPECT_TRUE(r.holds);
  expect_consistent(r);
}

TEST(Assumption3, LqModels) {
  const TimeGrid g(5.0, 0.05, 0.5);
  for (const auto& r : check_assumption3(lq_control_model(fixtures::benchmark_lq()), 1.0, 0.0, g, 200, 4)) {
    EXPECT_TRUE(r.holds) << r.condition_id;
    expect_consistent(r);
  }
  auto m = fixtures::benchmark_lq();
  m.b1_bar = 0.3;
  const auto reports = check_assumption3(lq_control_model(m), 1.0, 0.1, g, 200, 4);
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports[0].condition_id, "A3-i");
  EXPECT_FALSE(reports[0].holds);
}

// Independent evaluation of the alternate forms over a time grid.
double alt31_threshold(double l, double eta, double r, const TimeGrid& g, const TimeFunction& b2) {
  double m1 = -INFINITY, m2 = -INFINITY;
  for (std::size_t i = 0; i < g.n_points(); ++i) {
    const double b = std::abs(b2(g.t(i)));
    m1 = std::max(m1, 9 * l * l + 4 * l * b);
    m2 = std::max(m2, 4 * b * l + 3 * b * b);
  }
  return -std::max(9 * l - r / 2 + m1 / (2 * eta), 3 * l - r / 2 + m2 / (2 * eta));
}

double alt32_threshold(double l, double eta, double r, const TimeGrid& g, const TimeFunction& b2) {
  double m1 = -INFINITY, m2 = -INFINITY;
  for (std::size_t i = 0; i < g.n_points(); ++i) {
    const double b = std::abs(b2(g.t(i)));
    m1 = std::max(m1, 3 * l * l + b * l);
    m2 = std::max(m2, 4 * b * l + 3 * b * b);
  }
  return -std::max(3 * l - r / 2 + m1 / (2 * eta), 3 * l - r / 2 + m2 / (2 * eta));
}

TEST(Theorems, AlternateThresholdsHandValues) {
  const TimeGrid g(5.0, 0.1, 1.0);
  const auto in = inputs(0.1, 0.5, 1.0, 0.5, -3.5, 1.0, 1.0);
  const auto a = check_theorem31_conditions(in, g, TheoremVariant::alternate);
  const auto b = check_theorem32_conditions(in, g, TheoremVariant::alternate);
  EXPECT_NEAR(a.threshold, -3.2, 1e-12);
  EXPECT_NEAR(b.threshold, -3.2, 1e-12);
  EXPECT_EQ(a.report.condition_id, "T31-alt");
  EXPECT_EQ(b.report.condition_id, "T32-alt");
  EXPECT_TRUE(a.report.holds);
  EXPECT_NEAR(a.report.margin, 0.3, 1e-12);
  auto tight = in;
  tight.b1 = -3.2;
  EXPECT_TRUE(check_theorem31_conditions(tight, g, TheoremVariant::alternate).report.holds);
  tight.b1 = -3.1;
  EXPECT_FALSE(check_theorem31_conditions(tight, g, TheoremVariant::alternate).report.holds);
  EXPECT_FALSE(check_theorem32_conditions(tight, g, TheoremVariant::alternate).report.holds);
}

TEST(Theorems, AlternateThresholdsMatchIndependentFormulaProperty) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  const TimeGrid g(3.0, 0.25, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double l = u(rng), eta = u(rng), r = u(rng);
    const auto b2 = TimeFunction::piecewise({{0.0, u(rng)}, {1.0, -u(rng)}, {2.0, u(rng)}});
    auto in = inputs(l, eta, 2 * eta + u(rng), u(rng), -u(rng), 1.0, r);
    in.b2 = b2;
    const auto a = check_theorem31_conditions(in, g, TheoremVariant::alternate);
    const auto b = check_theorem32_conditions(in, g, TheoremVariant::alternate);
    EXPECT_NEAR(a.threshold, alt31_threshold(l, eta, r, g, b2), 1e-12 * (1 + std::abs(a.threshold)));
    EXPECT_NEAR(b.threshold, alt32_threshold(l, eta, r, g, b2), 1e-12 * (1 + std::abs(b.threshold)));
    expect_consistent(a.report);
    expect_consistent(b.report);
  }
}

TEST(Theorems, ForwardFormsWithoutCoupling) {
  const TimeGrid g(2.0, 0.1, 1.0);
  // l = 0: min{2 iota, 2 b2^2 eta / zeta^2} against r / 2
  const auto in = inputs(0.0, 0.5, 1.0, 0.5, -1.0, 1.0, 1.0);  // min{1, 1} = 1 > 0.5
  const auto a = check_theorem31_conditions(in, g, TheoremVariant::primary);
  const auto b = check_theorem32_conditions(in, g, TheoremVariant::primary);
  EXPECT_TRUE(a.report.holds);
  EXPECT_TRUE(b.report.holds);
  EXPECT_NEAR(a.report.margin, 0.5, 1e-12);
  EXPECT_NEAR(b.report.margin, 0.5, 1e-12);
  auto edge = in;
  edge.r = 2.0;  // min equals r / 2: strict form fails, non-strict form holds
  EXPECT_FALSE(check_theorem31_conditions(edge, g, TheoremVariant::primary).report.holds);
  EXPECT_TRUE(check_theorem32_conditions(edge, g, TheoremVariant::primary).report.holds);
}

TEST(Theorems, ZeroControlGainFailsForwardForm) {
  const TimeGrid g(2.0, 0.1, 1.0);
  const auto in = inputs(0.1, 0.5, 1.0, 5.0, -1.0, 0.0, 0.1);
  const auto a = check_theorem31_conditions(in, g, TheoremVariant::primary);
  EXPECT_FALSE(a.report.holds);
  expect_consistent(a.report);
}

TEST(Theorems, ConstrainedActionsFailForwardForm) {
  const TimeGrid g(2.0, 0.1, 1.0);
  auto in = inputs(0.0, 0.5, 1.0, 0.5, -1.0, 1.0, 1.0);
  in.unconstrained_actions = false;
  const auto a = check_theorem31_conditions(in, g, TheoremVariant::primary);
  EXPECT_FALSE(a.report.holds);
  expect_consistent(a.report);
}

TEST(Theorems, MissingConstantsListed) {
  auto cm = lq_control_model(fixtures::benchmark_lq());
  cm.convexity.reset();
  cm.linear_drift.reset();
  try {
    condition_inputs(cm);
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("convexity"), std::string::npos);
    EXPECT_NE(msg.find("drift"), std::string::npos);
  }
}

TEST(Theorems, LqInputsFromCoefficients) {
  const TimeGrid g(3.0, 0.5, 0.5);
  const auto m = fixtures::coupled_lq();
  const auto in = condition_inputs(m, g, TheoremVariant::primary);
  EXPECT_DOUBLE_EQ(in.convexity.eta, 0.5);
  EXPECT_DOUBLE_EQ(in.convexity.zeta, 1.5);
  EXPECT_DOUBLE_EQ(in.convexity.iota, 0.6);
  EXPECT_DOUBLE_EQ(in.convexity.l, 0.4);
  EXPECT_DOUBLE_EQ(condition_inputs(m, g, TheoremVariant::alternate).convexity.l, 1.6);
  EXPECT_DOUBLE_EQ(in.r, 0.7);
}

TEST(Theorems, Deterministic) {
  const TimeGrid g(3.0, 0.1, 1.0);
  const auto in = inputs(0.2, 0.7, 2.0, 0.9, -2.0, 0.8, 0.3);
  for (auto v : {TheoremVariant::primary, TheoremVariant::alternate}) {
    const auto a = check_theorem32_conditions(in, g, v), b = check_theorem32_conditions(in, g, v);
    EXPECT_EQ(a.threshold, b.threshold);
    EXPECT_EQ(a.report.margin, b.report.margin);
    EXPECT_EQ(a.report.holds, b.report.holds);
  }
}

ControlModel constant_cost(double value) {
  auto cm = lq_control_model(fixtures::benchmark_lq());
  cm.cost = [value](double, double, const EmpiricalLaw&, double) { return value; };
  return cm;
}

const FeedbackPolicy kZeroControl = [](std::size_t, double, double, const EmpiricalLaw&) { return 0.0; };

TEST(Cost, ConstantCosts) {
  const TimeGrid g(4.0, 0.01, 0.5);
  const BrownianDriver w(1, 200, g);
  const auto zero = estimate_cost(constant_cost(0.0), kZeroControl, 1.0, DeterministicXi{0.0}, w);
  EXPECT_EQ(zero.value, 0.0);
  EXPECT_EQ(zero.std_error, 0.0);
  const auto one = estimate_cost(constant_cost(1.0), kZeroControl, 1.0, DeterministicXi{0.0}, w);
  EXPECT_NEAR(one.value, (1.0 - std::exp(-0.5 * 4.0)) / 0.5, 1e-5);
  EXPECT_NEAR(one.std_error, 0.0, 1e-12);
}

// sigma = 0, x0 = 1, no control: cost integrand e^{-rt} x(t)^2 / 2 with x = e^{-t}.
double noise_free_cost_error(double dt) {
  const TimeGrid g(4.0, dt, 0.5);
  const auto cm = lq_control_model(fixtures::benchmark_lq());
  const auto e = estimate_cost(cm, kZeroControl, 0.0, DeterministicXi{1.0}, BrownianDriver(1, 2, g));
  const double exact = (1.0 - std::exp(-2.5 * 4.0)) / (2.0 * 2.5);
  return std::abs(e.value - exact);
}

TEST(Cost, ErrorHalvesWithStepProperty) {
  const double e1 = noise_free_cost_error(0.04), e2 = noise_free_cost_error(0.02), e3 = noise_free_cost_error(0.01);
  EXPECT_GT(e1 / e2, 1.4);
  EXPECT_LT(e1 / e2, 2.6);
  EXPECT_GT(e2 / e3, 1.4);
  EXPECT_LT(e2 / e3, 2.6);
}

TEST(Cost, StandardErrorHalvesWithFourTimesParticlesProperty) {
  const TimeGrid g(6.0, 0.02, 0.5);
  const auto cm = lq_control_model(fixtures::benchmark_lq());
  const auto a = estimate_cost(cm, kZeroControl, 1.0, DeterministicXi{0.0}, BrownianDriver(2, 2000, g));
  const auto b = estimate_cost(cm, kZeroControl, 1.0, DeterministicXi{0.0}, BrownianDriver(2, 8000, g));
  const double ratio = a.std_error / b.std_error;
  EXPECT_GT(ratio, 2.0 * 0.7);
  EXPECT_LT(ratio, 2.0 * 1.3);
}

TEST(Cost, UncontrolledBenchmarkClosedForm) {
  const TimeGrid g(20.0, 0.01, 0.5);
  const auto e = estimate_cost(lq_control_model(fixtures::benchmark_lq()), kZeroControl, 1.0, DeterministicXi{0.0},
                               BrownianDriver(3, 4000, g));
  EXPECT_NEAR(e.value, 0.4, 3.0 * e.std_error + 0.01);
}

TEST(Cost, OpenLoopMatchesFeedbackForDeterministicControl) {
  const TimeGrid g(2.0, 0.05, 0.5);
  const BrownianDriver w(4, 100, g);
  const auto cm = lq_control_model(fixtures::benchmark_lq());
  const Paths controls(100, g.n_points(), 0.3);
  const auto a = estimate_cost(cm, controls, 1.0, DeterministicXi{0.5}, w);
  const auto b = estimate_cost(cm, [](std::size_t, double, double, const EmpiricalLaw&) { return 0.3; }, 1.0,
                               DeterministicXi{0.5}, w);
  EXPECT_DOUBLE_EQ(a.value, b.value);
}

TEST(Cost, DivergentStateRaises) {
  const TimeGrid g(2.0, 0.1, 0.5);
  auto cm = lq_control_model(fixtures::benchmark_lq());
  cm.drift = [](double, double x, const EmpiricalLaw&, double) { return 1e3 * x * x; };
  EXPECT_THROW(estimate_cost(cm, kZeroControl, 0.0, DeterministicXi{10.0}, BrownianDriver(1, 4, g)), DivergenceError);
}

TEST(Probe, ZeroPerturbationGivesExactlyZero) {
  const auto m = fixtures::benchmark_lq();
  const TimeGrid g(3.0, 0.05, 0.5);
  SolverConfig cfg(g);
  cfg.n_particles = 300;
  const BrownianDriver w(5, cfg.n_particles, g);
  const auto solved = picard_solve(lq_fbsde_coefficients(m, Problem::mfc), DeterministicXi{1.0}, cfg, w);
  ASSERT_TRUE(solved.converged);
  const auto cm = lq_control_model(m);
  for (Problem p : {Problem::mfc, Problem::mfg}) {
    const auto r = optimality_probe(cm, p, solved, m.sigma, DeterministicXi{1.0}, w, 3, 0.0, 9);
    ASSERT_EQ(r.deltas.size(), 3u);
    for (const auto& d : r.deltas) EXPECT_EQ(d.value, 0.0);
    EXPECT_EQ(r.worst_delta, 0.0);
  }
}

TEST(Probe, RequiresConvergedSolution) {
  const TimeGrid g(1.0, 0.1, 0.5);
  SolverConfig cfg(g);
  cfg.n_particles = 10;
  SolveReport unsolved(cfg);
  EXPECT_THROW(optimality_probe(lq_control_model(fixtures::benchmark_lq()), Problem::mfc, unsolved, 1.0,
                                DeterministicXi{1.0}, BrownianDriver(1, 10, g), 2, 0.1, 1),
               ValidationError);
}

}  // namespace
