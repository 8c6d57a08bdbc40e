// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "eot/errors.hpp"
#include "eot/instances.hpp"
#include "eot/logsumexp.hpp"
#include "eot/oracle.hpp"
#include "eot/ot_core.hpp"

namespace {

using namespace eot;

// Symmetric 2x2 instance: mu = nu = (1/2, 1/2), C = [[0, 1], [1, 0]], lambda = 1.
// By symmetry u and v are constant, so P = K / sum(K) with K = [[1, e^-1], [e^-1, 1]].
const double kE = std::exp(-1.0);
const double kDiag = 1.0 / (2.0 * (1.0 + kE));
const double kOff = kE / (2.0 * (1.0 + kE));
const double kSymmetricE0 = kE / (1.0 + kE);
const double kSymmetricEntropy = -2.0 * kDiag * std::log(kDiag) - 2.0 * kOff * std::log(kOff);

Histogram half_half() { return validate_histogram({0.5, 0.5}); }
CostMatrix swap_cost() { return CostMatrix(Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}})); }

SinkhornConfig config_with(double lambda, int max_iters = 1000, double tol = 1e-12) {
  SinkhornConfig c;
  c.lambda = lambda;
  c.max_iters = max_iters;
  c.tolerance = tol;
  return c;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

// --- validate_histogram -----------------------------------------------------

TEST(ValidateHistogram, AcceptsSimplexPoint) {
  const auto h = validate_histogram({0.5, 0.5});
  EXPECT_EQ(h.size(), 2u);
  EXPECT_FALSE(h.has_zero_mass());
}

TEST(ValidateHistogram, RejectsMassDeficitWithoutRenormalising) {
  try {
    validate_histogram({0.5, 0.4});
    FAIL() << "expected NotNormalised";
  } catch (const NotNormalised& e) {
    EXPECT_NEAR(e.sum(), 0.9, 1e-15);
  }
}

TEST(ValidateHistogram, RejectsNegativeMass) {
  try {
    validate_histogram({-0.1, 1.1});
    FAIL() << "expected NegativeMass";
  } catch (const NegativeMass& e) {
    EXPECT_EQ(e.index(), 0u);
  }
}

TEST(ValidateHistogram, RejectsNonFinite) {
  EXPECT_THROW(validate_histogram({0.5, std::nan("")}), NonFinite);
  EXPECT_THROW(validate_histogram({INFINITY, 0.0}), NonFinite);
}

TEST(ValidateHistogram, AllowsZeroEntriesAndSmallRoundoff) {
  const auto h = validate_histogram({0.0, 1.0 + 5e-7});
  EXPECT_TRUE(h.has_zero_mass());
  EXPECT_EQ(log_mass(h)[0], kNegInf);
}

TEST(CostMatrixValidation, RejectsNegativeAndNonFiniteEntries) {
  EXPECT_THROW(CostMatrix(Matrix::from_rows({{0.0, -1.0}})), InvalidCost);
  EXPECT_THROW(CostMatrix(Matrix::from_rows({{0.0, INFINITY}})), InvalidCost);
  EXPECT_THROW(CostMatrix{Matrix{}}, InvalidCost);
}

TEST(SinkhornConfigValidation, RejectsBadFields) {
  EXPECT_THROW(config_with(0.0).validate(), InvalidConfig);
  EXPECT_THROW(config_with(1.0, 0).validate(), InvalidConfig);
  EXPECT_THROW(config_with(1.0, 10, -1.0).validate(), InvalidConfig);
  auto c = config_with(1.0);
  c.check_interval = 0;
  EXPECT_THROW(c.validate(), InvalidConfig);
  EXPECT_NO_THROW(config_with(1.0, 10, 0.0).validate());
}

// --- kernel_matrix ----------------------------------------------------------

TEST(KernelMatrix, ZeroCostIsOne) {
  const auto k = kernel_matrix(CostMatrix(Matrix(1, 1, 0.0)), 0.3);
  EXPECT_EQ(k(0, 0), 1.0);
}

TEST(KernelMatrix, SwapCostAtUnitLambda) {
  const auto k = kernel_matrix(swap_cost(), 1.0);
  EXPECT_EQ(k(0, 0), 1.0);
  EXPECT_EQ(k(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(k(0, 1), kE);
  EXPECT_DOUBLE_EQ(k(1, 0), kE);
}

TEST(KernelMatrix, UnderflowsToZeroAtTinyLambda) {
  const auto k = kernel_matrix(CostMatrix(Matrix(1, 1, 1.0)), 0.001);
  EXPECT_EQ(k(0, 0), 0.0);
}

// --- plain_sinkhorn_step ----------------------------------------------------

TEST(PlainSinkhornStep, OneByOneReachesFixedPoint) {
  const double k = 0.7;
  const double u0 = 2.5;
  const auto one = validate_histogram({1.0});
  const auto step = plain_sinkhorn_step(std::vector<double>{u0}, Matrix(1, 1, k), one, one);
  EXPECT_DOUBLE_EQ(step.v[0], 1.0 / (k * u0));
  EXPECT_DOUBLE_EQ(step.u[0], u0);
}

TEST(PlainSinkhornStep, SymmetricInstanceIsFixedRay) {
  const auto kernel = kernel_matrix(swap_cost(), 1.0);
  for (double s : {0.1, 1.0, 7.0}) {
    const auto step = plain_sinkhorn_step(std::vector<double>{s, s}, kernel, half_half(), half_half());
    EXPECT_NEAR(step.u[0], s, 1e-14 * s);
    EXPECT_NEAR(step.u[1], s, 1e-14 * s);
  }
}

TEST(PlainSinkhornStep, PointMassesGiveUnitPlanEntry) {
  const auto delta = validate_histogram({1.0, 0.0});
  const CostMatrix c(Matrix::from_rows({{0.3, 0.2}, {0.9, 0.4}}));
  const auto step =
      plain_sinkhorn_step(std::vector<double>{1.0, 0.0}, kernel_matrix(c, 1.0), delta, delta);
  DualPotentials pot{{std::log(step.u[0]), kNegInf}, {std::log(step.v[0]), kNegInf}, 1.0};
  const auto plan = transport_plan(pot, c);
  EXPECT_NEAR(plan.p(0, 0), 1.0, 1e-15);
  EXPECT_EQ(plan.p(0, 1), 0.0);
  EXPECT_EQ(plan.p(1, 0), 0.0);
  EXPECT_EQ(plan.p(1, 1), 0.0);
}

TEST(PlainSinkhornStep, ZeroDenominatorRaisesDivisionUnderflow) {
  const auto kernel = kernel_matrix(CostMatrix(Matrix(2, 2, 1.0)), 0.001);
  EXPECT_THROW(plain_sinkhorn_step(std::vector<double>{1.0, 1.0}, kernel, half_half(), half_half()),
               DivisionUnderflow);
}

// --- log_sinkhorn_step ------------------------------------------------------

TEST(LogSinkhornStep, ExponentiatedEqualsPlainStep) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto mu = random_histogram(10, rng);
    const auto nu = random_histogram(10, rng);
    const auto c = random_cost(10, 10, rng);
    std::uniform_real_distribution<double> log_scale(-2.0, 2.0);
    std::vector<double> log_u(10);
    std::vector<double> u(10);
    for (std::size_t i = 0; i < 10; ++i) {
      log_u[i] = log_scale(rng);
      u[i] = std::exp(log_u[i]);
    }
    const auto plain = plain_sinkhorn_step(u, kernel_matrix(c, 1.0), mu, nu);
    const auto logged = log_sinkhorn_step(log_u, c, 1.0, log_mass(mu), log_mass(nu));
    for (std::size_t k = 0; k < 10; ++k) {
      EXPECT_NEAR(std::exp(logged.log_v[k]), plain.v[k], 1e-12 * plain.v[k]);
      EXPECT_NEAR(std::exp(logged.log_u[k]), plain.u[k], 1e-12 * plain.u[k]);
    }
  }
}

TEST(LogSinkhornStep, ZeroMassBinIsNegInf) {
  const auto mu = validate_histogram({0.5, 0.5});
  const auto nu = validate_histogram({1.0, 0.0});
  const auto step = log_sinkhorn_step(std::vector<double>{0.0, 0.0}, swap_cost(), 1.0,
                                      log_mass(mu), log_mass(nu));
  EXPECT_EQ(step.log_v[1], kNegInf);
  EXPECT_TRUE(std::isfinite(step.log_v[0]));
  EXPECT_TRUE(std::isfinite(step.log_u[0]));
  EXPECT_TRUE(std::isfinite(step.log_u[1]));
}

TEST(LogSinkhornStep, HugeCostsStayFiniteWherePlainPathUnderflows) {
  std::mt19937_64 rng(99);
  const auto mu = random_histogram(6, rng);
  const auto nu = random_histogram(6, rng);
  Matrix scaled = random_cost(6, 6, rng, 0.5, 1.0).matrix();
  for (double& x : scaled.data()) x *= 1e6;
  const CostMatrix c(scaled);

  const std::vector<double> ones(6, 1.0);
  EXPECT_THROW(plain_sinkhorn_step(ones, kernel_matrix(c, 1.0), mu, nu), DivisionUnderflow);

  const auto step = log_sinkhorn_step(std::vector<double>(6, 0.0), c, 1.0, log_mass(mu), log_mass(nu));
  for (double x : step.log_v) EXPECT_TRUE(std::isfinite(x));
  for (double x : step.log_u) EXPECT_TRUE(std::isfinite(x));
}

TEST(LogSinkhornStep, RejectsMismatchedShapes) {
  EXPECT_THROW(log_sinkhorn_step(std::vector<double>(3, 0.0), swap_cost(), 1.0,
                                 log_mass(half_half()), log_mass(half_half())),
               DimensionMismatch);
}

// --- run_sinkhorn -----------------------------------------------------------

TEST(RunSinkhorn, IdenticalPointMassesCostNothing) {
  const auto delta = validate_histogram({1.0});
  const auto config = config_with(1.0, 1000, 1e-9);
  const auto r = run_sinkhorn(delta, delta, CostMatrix(Matrix(1, 1, 0.0)), config);
  EXPECT_EQ(r.cost_e0, 0.0);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations_run, config.check_interval);
}

TEST(RunSinkhorn, SymmetricTwoByTwoClosedForm) {
  const auto r = run_sinkhorn(half_half(), half_half(), swap_cost(), config_with(1.0));
  EXPECT_NEAR(r.cost_e0, kSymmetricE0, 1e-6);
  EXPECT_NEAR(r.cost_e0, 0.2689414, 1e-6);
  EXPECT_NEAR(r.cost_elambda, kSymmetricE0 - kSymmetricEntropy, 1e-12);
  EXPECT_TRUE(r.converged);
}

TEST(RunSinkhorn, ForcedNonConvergence) {
  std::mt19937_64 rng(4);
  const auto mu = random_histogram(8, rng);
  const auto nu = random_histogram(8, rng);
  const auto r = run_sinkhorn(mu, nu, random_cost(8, 8, rng), config_with(0.1, 1, 1e-15));
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations_run, 1);
  EXPECT_GT(r.final_residual, 1e-15);
}

TEST(RunSinkhorn, ZeroToleranceRunsEveryIteration) {
  const auto r = run_sinkhorn(half_half(), half_half(), swap_cost(), config_with(1.0, 37, 0.0));
  EXPECT_EQ(r.iterations_run, 37);
  EXPECT_LT(r.final_residual, 1e-15);
}

TEST(RunSinkhorn, DimensionMismatch) {
  const auto three = validate_histogram({0.2, 0.3, 0.5});
  EXPECT_THROW(run_sinkhorn(three, half_half(), swap_cost(), config_with(1.0)), DimensionMismatch);
}

TEST(RunSinkhorn, ConvergedResidualWithinTolerance) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto mu = random_histogram(12, rng);
    const auto nu = random_histogram(9, rng);
    const auto c = random_cost(12, 9, rng);
    const auto config = config_with(0.1, 5000, 1e-10);
    const auto r = run_sinkhorn(mu, nu, c, config);
    ASSERT_TRUE(r.converged);
    EXPECT_LE(r.final_residual, config.tolerance);
    EXPECT_GE(r.cost_e0, 0.0);
  }
}

TEST(RunSinkhorn, ZeroMassBinsFollowNegInfConvention) {
  const auto mu = validate_histogram({0.5, 0.0, 0.5});
  const auto nu = validate_histogram({0.0, 0.6, 0.4});
  std::mt19937_64 rng(8);
  const auto c = random_cost(3, 3, rng);
  const auto r = run_sinkhorn(mu, nu, c, config_with(0.5));
  EXPECT_EQ(r.potentials.log_u[1], kNegInf);
  EXPECT_EQ(r.potentials.log_v[0], kNegInf);
  EXPECT_TRUE(std::isfinite(r.potentials.log_u[0]));
  EXPECT_TRUE(std::isfinite(r.potentials.log_v[2]));
  const auto plan = transport_plan(r.potentials, c);
  EXPECT_EQ(plan.row_sums()[1], 0.0);
  EXPECT_EQ(plan.col_sums()[0], 0.0);
}

TEST(RunSinkhorn, Deterministic) {
  std::mt19937_64 rng(12);
  const auto mu = random_histogram(15, rng);
  const auto nu = random_histogram(15, rng);
  const auto c = random_cost(15, 15, rng);
  const auto a = run_sinkhorn(mu, nu, c, config_with(0.05));
  const auto b = run_sinkhorn(mu, nu, c, config_with(0.05));
  EXPECT_EQ(a.cost_e0, b.cost_e0);
  EXPECT_EQ(a.potentials.log_u, b.potentials.log_u);
}

// --- transport_plan / entropy / costs ---------------------------------------

TEST(TransportPlan, PointMassPairHasSingleUnitEntry) {
  const auto mu = validate_histogram({0.0, 1.0});
  const auto nu = validate_histogram({1.0, 0.0, 0.0});
  const CostMatrix c(Matrix::from_rows({{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}}));
  const auto r = run_sinkhorn(mu, nu, c, config_with(1.0));
  const auto plan = transport_plan(r.potentials, c);
  EXPECT_NEAR(plan.p(1, 0), 1.0, 1e-14);
  EXPECT_NEAR(std::accumulate(plan.p.data().begin(), plan.p.data().end(), 0.0), 1.0, 1e-14);
  EXPECT_NEAR(primal_cost(r.potentials, c), 0.4, 1e-14);
  EXPECT_NEAR(regularized_cost(plan, c, 1.0), 0.4, 1e-14);
  EXPECT_NEAR(entropy(plan), 0.0, 1e-13);
}

TEST(TransportPlan, SymmetricTwoByTwoClosedForm) {
  const auto r = run_sinkhorn(half_half(), half_half(), swap_cost(), config_with(1.0));
  const auto plan = transport_plan(r.potentials, swap_cost());
  EXPECT_NEAR(plan.p(0, 0), kDiag, 1e-12);
  EXPECT_NEAR(plan.p(1, 1), kDiag, 1e-12);
  EXPECT_NEAR(plan.p(0, 1), kOff, 1e-12);
  EXPECT_NEAR(plan.p(1, 0), kOff, 1e-12);
}

TEST(TransportPlan, MarginalsMatchWithinFinalResidual) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const auto mu = random_histogram(20, rng);
    const auto nu = random_histogram(20, rng);
    const auto c = random_cost(20, 20, rng);
    const auto r = run_sinkhorn(mu, nu, c, config_with(0.1, 3000, 1e-9));
    const auto plan = transport_plan(r.potentials, c);
    const double slack = r.final_residual + 1e-14;
    EXPECT_LE(max_abs_diff(plan.row_sums(), mu.mass()), slack);
    EXPECT_LE(max_abs_diff(plan.col_sums(), nu.mass()), slack);
    EXPECT_NEAR(std::accumulate(plan.p.data().begin(), plan.p.data().end(), 0.0), 1.0, 1e-6);
  }
}

TEST(Entropy, UniformPlanIsLogFour) {
  EXPECT_NEAR(entropy(TransportPlan{Matrix(2, 2, 0.25)}), std::log(4.0), 1e-15);
}

TEST(Entropy, PointMassPlanIsZero) {
  TransportPlan plan{Matrix(3, 3, 0.0)};
  plan.p(1, 2) = 1.0;
  EXPECT_EQ(entropy(plan), 0.0);
}

TEST(Entropy, SymmetricTwoByTwoClosedForm) {
  const auto r = run_sinkhorn(half_half(), half_half(), swap_cost(), config_with(1.0));
  EXPECT_NEAR(entropy(transport_plan(r.potentials, swap_cost())), kSymmetricEntropy, 1e-12);
}

TEST(Entropy, BoundsHoldForProducedPlans) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(200 + seed);
    const auto mu = random_histogram(7, rng);
    const auto nu = random_histogram(11, rng);
    const auto c = random_cost(7, 11, rng);
    for (double lambda : {0.01, 0.1, 1.0, 10.0}) {
      const auto r = run_sinkhorn(mu, nu, c, config_with(lambda, 2000, 1e-10));
      const double h = entropy(transport_plan(r.potentials, c));
      EXPECT_GE(h, 0.0);
      EXPECT_LE(h, std::log(7.0 * 11.0) + 1e-12);
    }
  }
}

TEST(PrimalCost, SymmetricTwoByTwoClosedForm) {
  const auto r = run_sinkhorn(half_half(), half_half(), swap_cost(), config_with(1.0));
  EXPECT_NEAR(primal_cost(r.potentials, swap_cost()), kSymmetricE0, 1e-12);
}

TEST(PrimalCost, MatchesDenseSumOverMaterialisedPlan) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(300 + seed);
    const auto mu = random_histogram(20, rng);
    const auto nu = random_histogram(20, rng);
    Matrix raw = random_cost(20, 20, rng).matrix();
    raw(seed % 20, (seed * 7) % 20) = 0.0;  // exercise the log c = -inf path
    const CostMatrix c(raw);
    const auto r = run_sinkhorn(mu, nu, c, config_with(0.05));
    const auto plan = transport_plan(r.potentials, c);
    double dense = 0.0;
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t j = 0; j < 20; ++j) dense += plan.p(i, j) * c(i, j);
    EXPECT_NEAR(primal_cost(r.potentials, c), dense, 1e-12 * dense);
    EXPECT_NEAR(r.cost_e0, dense, 1e-12 * dense);
  }
}

TEST(PrimalCost, HugeCostOverLambdaStaysFinite) {
  std::mt19937_64 rng(31);
  const auto mu = random_histogram(5, rng);
  const auto nu = random_histogram(5, rng);
  const auto c = random_cost(5, 5, rng, 1000.0, 2000.0);
  const auto r = run_sinkhorn(mu, nu, c, config_with(0.01, 20000, 1e-8));
  EXPECT_TRUE(std::isfinite(r.cost_e0));
  EXPECT_GE(r.cost_e0, 1000.0 - 1e-6);
  EXPECT_LE(r.cost_e0, 2000.0 + 1e-6);
}

TEST(RegularizedCost, ZeroLambdaIsTransportCost) {
  TransportPlan plan{Matrix::from_rows({{0.25, 0.25}, {0.1, 0.4}})};
  const CostMatrix c(Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}}));
  EXPECT_DOUBLE_EQ(regularized_cost(plan, c, 0.0), 0.25 + 0.5 + 0.3 + 1.6);
}

TEST(RegularizedCost, SymmetricTwoByTwoClosedForm) {
  const auto r = run_sinkhorn(half_half(), half_half(), swap_cost(), config_with(1.0));
  const auto plan = transport_plan(r.potentials, swap_cost());
  EXPECT_NEAR(regularized_cost(plan, swap_cost(), 1.0), kSymmetricE0 - kSymmetricEntropy, 1e-12);
}

TEST(RegularizedCost, DualFormulaAgreesWithMaterialisedPlan) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(400 + seed);
    const auto mu = random_histogram(16, rng);
    const auto nu = random_histogram(13, rng);
    const auto c = random_cost(16, 13, rng);
    const auto r = run_sinkhorn(mu, nu, c, config_with(0.2, 200, 0.0));
    const auto plan = transport_plan(r.potentials, c);
    EXPECT_NEAR(r.cost_elambda, regularized_cost(plan, c, 0.2), 1e-12);
  }
}

// --- gradients --------------------------------------------------------------

TEST(Gradients, MeanZeroByConstruction) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(500 + seed);
    const auto mu = random_histogram(25, rng);
    const auto nu = random_histogram(18, rng);
    const auto r = run_sinkhorn(mu, nu, random_cost(25, 18, rng), config_with(0.05));
    const auto g = gradients(r.potentials);
    EXPECT_LE(std::abs(std::accumulate(g.grad_mu.begin(), g.grad_mu.end(), 0.0)), 1e-10 * 25);
    EXPECT_LE(std::abs(std::accumulate(g.grad_nu.begin(), g.grad_nu.end(), 0.0)), 1e-10 * 18);
  }
}

TEST(Gradients, EqualMultiplierProjection) {
  std::mt19937_64 rng(9);
  const auto mu = random_histogram(6, rng);
  const auto nu = random_histogram(6, rng);
  const auto r = run_sinkhorn(mu, nu, random_cost(6, 6, rng), config_with(0.3));
  // The gradient is the negated multiplier projected onto mean-zero vectors.
  const auto alpha = r.potentials.alpha();
  const double mean = std::accumulate(alpha.begin(), alpha.end(), 0.0) / 6.0;
  const auto g = gradients(r.potentials);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(g.grad_mu[i], -(alpha[i] - mean), 1e-12);
}

TEST(Gradients, MatchFiniteDifferencesAtModerateLambda) {
  std::mt19937_64 rng(21);
  const auto mu = random_histogram(30, rng, 0.01);
  const auto nu = random_histogram(30, rng, 0.01);
  const auto c = grid_metric_cost(30, 30, 2.0);
  const auto config = config_with(0.05, 1000, 0.0);
  const auto analytic = gradients(run_sinkhorn(mu, nu, c, config).potentials);
  const auto numeric = oracle::finite_difference_gradient(mu, nu, c, config, 1e-6);
  const auto report = oracle::compare_gradients(analytic, numeric, 1e-3, 1e-5);
  EXPECT_TRUE(report.passed) << report.max_abs_mu << " " << report.max_abs_nu;
}

TEST(Gradients, SymmetricInstanceIsAntisymmetricAndShared) {
  const auto r = run_sinkhorn(half_half(), half_half(), swap_cost(), config_with(1.0));
  const auto g = gradients(r.potentials);
  EXPECT_NEAR(g.grad_mu[0], -g.grad_mu[1], 1e-14);
  EXPECT_NEAR(g.grad_mu[0], g.grad_nu[0], 1e-14);
  EXPECT_NEAR(g.grad_mu[1], g.grad_nu[1], 1e-14);
  const auto numeric = oracle::finite_difference_gradient(half_half(), half_half(), swap_cost(),
                                                          config_with(1.0, 200, 0.0), 1e-6);
  EXPECT_NEAR(g.grad_mu[0], numeric.grad_mu[0], 1e-8);
}

TEST(Gradients, RefuseZeroMassBins) {
  std::mt19937_64 rng(1);
  const auto mu = validate_histogram({0.5, 0.0, 0.5});
  const auto r = run_sinkhorn(mu, mu, random_cost(3, 3, rng), config_with(1.0));
  EXPECT_THROW(gradients(r.potentials), ZeroMassGradient);
}

// --- marginal_residual ------------------------------------------------------

TEST(MarginalResidual, ZeroAtExactFixedPoint) {
  const auto r = run_sinkhorn(half_half(), half_half(), swap_cost(), config_with(1.0));
  EXPECT_LE(marginal_residual(r.potentials, swap_cost(), half_half(), half_half()), 1e-12);
}

TEST(MarginalResidual, PositiveAtInitialPotentials) {
  std::mt19937_64 rng(41);
  const auto mu = random_histogram(10, rng);
  const auto nu = random_histogram(10, rng);
  const auto c = random_cost(10, 10, rng);
  const DualPotentials initial{std::vector<double>(10, 0.0), std::vector<double>(10, 0.0), 0.5};
  EXPECT_GT(marginal_residual(initial, c, mu, nu), 0.0);
}

TEST(MarginalResidual, NonIncreasingAfterFirstIteration) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(600 + seed);
    const auto mu = random_histogram(20, rng);
    const auto nu = random_histogram(20, rng);
    const auto c = random_cost(20, 20, rng);
    const double lambda = 0.05;
    DualPotentials pot{std::vector<double>(20, 0.0), {}, lambda};
    double previous = INFINITY;
    for (int k = 1; k <= 300; ++k) {
      auto step = log_sinkhorn_step(pot.log_u, c, lambda, log_mass(mu), log_mass(nu));
      pot.log_u = std::move(step.log_u);
      pot.log_v = std::move(step.log_v);
      const double residual = marginal_residual(pot, c, mu, nu);
      if (k > 1) {
        EXPECT_LE(residual, previous + 1e-12) << "seed " << seed << " iteration " << k;
      }
      previous = residual;
    }
  }
}

TEST(MarginalResidual, DimensionMismatch) {
  const DualPotentials pot{{0.0, 0.0}, {0.0, 0.0}, 1.0};
  const auto three = validate_histogram({0.2, 0.3, 0.5});
  EXPECT_THROW(marginal_residual(pot, swap_cost(), three, half_half()), DimensionMismatch);
}

// --- properties -------------------------------------------------------------

TEST(Properties, LogAndLinearIterationsAgree) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(700 + seed);
    const std::size_t d = 5 + seed * 3;
    const auto mu = random_histogram(d, rng);
    const auto nu = random_histogram(d, rng);
    const auto c = random_cost(d, d, rng);
    const double lambda = 0.5 + 0.1 * static_cast<double>(seed);
    const auto kernel = kernel_matrix(c, lambda);
    std::vector<double> u(d, 1.0);
    std::vector<double> v;
    std::vector<double> log_u(d, 0.0);
    std::vector<double> log_v;
    for (int k = 0; k < 40; ++k) {
      auto plain = plain_sinkhorn_step(u, kernel, mu, nu);
      u = plain.u;
      v = plain.v;
      auto logged = log_sinkhorn_step(log_u, c, lambda, log_mass(mu), log_mass(nu));
      log_u = logged.log_u;
      log_v = logged.log_v;
    }
    const auto plan = transport_plan({log_u, log_v, lambda}, c);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(plan.p(i, j), u[i] * kernel(i, j) * v[j], 1e-10);
  }
}

TEST(Properties, PermutationEquivariance) {
  std::mt19937_64 rng(800);
  const std::size_t d = 12;
  const auto mu = random_histogram(d, rng);
  const auto nu = random_histogram(d, rng);
  const auto c = random_cost(d, d, rng);
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<double> mu_perm(d);
  Matrix c_perm(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    mu_perm[i] = mu[perm[i]];
    for (std::size_t j = 0; j < d; ++j) c_perm(i, j) = c(perm[i], j);
  }
  const auto config = config_with(0.1, 2000, 1e-13);
  const auto base = run_sinkhorn(mu, nu, c, config);
  const auto permuted =
      run_sinkhorn(validate_histogram(mu_perm), nu, CostMatrix(c_perm), config);
  EXPECT_NEAR(base.cost_e0, permuted.cost_e0, 1e-12);
  const auto g = gradients(base.potentials);
  const auto gp = gradients(permuted.potentials);
  for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(gp.grad_mu[i], g.grad_mu[perm[i]], 1e-10);
}

TEST(Properties, PrimalCostNonDecreasingInLambdaOnLine) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(900 + seed);
    const auto mu = random_histogram(24, rng);
    const auto nu = random_histogram(24, rng);
    const auto c = oracle::Grid1D::uniform(24).distance_cost(1.0);
    double previous = 0.0;
    for (double lambda : {0.01, 0.03, 0.1, 0.3, 1.0}) {
      const auto r = run_sinkhorn(mu, nu, c, config_with(lambda, 100000, 1e-11));
      ASSERT_TRUE(r.converged);
      EXPECT_GE(r.cost_e0, previous - 1e-10) << "seed " << seed << " lambda " << lambda;
      previous = r.cost_e0;
    }
  }
}

}  // namespace
