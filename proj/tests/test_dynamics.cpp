#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "percolate/dynamics.hpp"
#include "support/oracles.hpp"

namespace percolate {
namespace {

using testing::make_params;

TEST(Rhs, PointMassHandEvaluation) {
  const ModelParams p = make_params({0.0, 1.0}, 16);
  const auto d = rhs(p.pi, Policy::constant(1.0, p.n_max), p);
  EXPECT_DOUBLE_EQ(d[1], -1.0);
  EXPECT_DOUBLE_EQ(d[2], 1.0);
  for (int n = 3; n <= p.n_max; ++n) EXPECT_EQ(d[n], 0.0);
  EXPECT_EQ(d[0], 0.0);
}

TEST(Rhs, ZeroAtStationaryAndAtEntryLawWithoutSearch) {
  const ModelParams p = make_params({0.0, 0.4, 0.6}, 128);
  const auto none = rhs(p.pi, Policy::constant(0.0, p.n_max), p);
  for (double w : none.weights) EXPECT_EQ(w, 0.0);
  const auto s = solve_stationary(Policy::trigger(4, 0.2, 1.0, p.n_max), p);
  const auto d = rhs(s.mu, s.policy, p);
  for (double w : d.weights) EXPECT_LT(std::abs(w), 1e-10);
}

TEST(Rhs, MatchesNaiveOracleAndConserves) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ModelParams p = make_params({0.1, 0.5, 0.4}, 40);
  for (int trial = 0; trial < 100; ++trial) {
    PrecisionMeasure mu(p.n_max);
    std::vector<double> c(41);
    double total = 0.0;
    for (int n = 0; n <= 12; ++n) total += mu[n] = unit(rng);
    for (double& w : mu.weights) w /= total;
    for (double& x : c) x = unit(rng);
    const auto d = rhs(mu, Policy::from_efforts(c), p);
    const auto oracle = testing::naive_rhs(mu.weights, c, p.pi.weights, p.eta);
    double sum = 0.0;
    for (int n = 0; n <= p.n_max; ++n) {
      EXPECT_NEAR(d[n], oracle[static_cast<std::size_t>(n)], 1e-14);
      sum += d[n];
    }
    EXPECT_NEAR(sum + d.tail_mass, 0.0, 1e-14);
    EXPECT_LE(std::abs(sum), std::abs(d.tail_mass) + 1e-14);
  }
}

TEST(Integrate, StationaryStaysPut) {
  const ModelParams p = make_params({0.0, 0.5, 0.5}, 128);
  const auto s = solve_stationary(Policy::trigger(5, 0.3, 1.0, p.n_max), p);
  const auto traj = integrate(s.mu, s.policy, p, 100.0, 10.0);
  ASSERT_EQ(traj.times.size(), 11u);
  for (const auto& m : traj.measures) EXPECT_LT(l1_distance(m, s.mu), 1e-8);
  EXPECT_LT(traj.max_mass_deviation, 1e-6);
}

TEST(Integrate, ConvergesFromEntryLawAndPointMass) {
  ModelParams p = make_params({0.0, 1.0}, 128);
  const Policy policy = Policy::trigger(4, 0.5, 1.0, p.n_max);
  ASSERT_GE(p.eta, policy[p.n_max] * p.c_hi);
  const auto s = solve_stationary(policy, p);
  const auto from_pi = integrate(p.pi, policy, p, 60.0, 5.0);
  std::vector<double> dist;
  for (const auto& m : from_pi.measures) dist.push_back(l1_distance(m, s.mu));
  for (std::size_t i = 1; i < dist.size(); ++i) EXPECT_LE(dist[i], dist[i - 1] + 1e-9);
  EXPECT_LT(dist.back(), 1e-6);

  PrecisionMeasure five(p.n_max);
  five[5] = 1.0;
  const auto from_five = integrate(five, policy, p, 60.0, 60.0);
  EXPECT_LT(l1_distance(from_five.measures.back(), s.mu), 1e-6);
}

TEST(Integrate, GlobalAttractionFromRandomStarts) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ModelParams p = make_params({0.0, 0.6, 0.4}, 128);
  p.eta = 1.5;
  const Policy policy = Policy::trigger(3, 0.4, 1.0, p.n_max);
  const auto s = solve_stationary(policy, p);
  for (int trial = 0; trial < 10; ++trial) {
    PrecisionMeasure mu(p.n_max);
    double total = 0.0;
    for (int n = 1; n <= 20; ++n) total += mu[n] = unit(rng);
    for (double& w : mu.weights) w /= total;
    const auto traj = integrate(mu, policy, p, 50.0 / p.eta, 50.0 / p.eta);
    EXPECT_LT(l1_distance(traj.measures.back(), s.mu), 1e-6);
  }
}

TEST(Integrate, RejectsBadArguments) {
  const ModelParams p = make_params({0.0, 1.0}, 16);
  EXPECT_THROW(integrate(p.pi, Policy::constant(1.0, 16), p, 0.0, 1.0), ValidationError);
  EXPECT_THROW(integrate(p.pi, Policy::constant(1.0, 8), p, 1.0, 1.0), ValidationError);
}

TEST(MassLoss, ConditionArithmetic) {
  ModelParams p = make_params({0.0, 1.0}, 64);
  p.c_lo = 0.5;
  EXPECT_TRUE(mass_loss_check(Policy::trigger(3, 0.5, 1.0, p.n_max), p).condition_holds);
  p.eta = 0.1;
  p.c_lo = 0.0;
  const auto report = mass_loss_check(Policy::constant(1.0, p.n_max), p, 20.0);
  EXPECT_FALSE(report.condition_holds);
}

TEST(MassLoss, FailingCaseLeaksMassAndComponentsSettle) {
  ModelParams p = make_params({0.0, 1.0}, 512);
  p.eta = 0.25;
  const Policy policy = Policy::constant(1.0, p.n_max);
  const auto report = mass_loss_check(policy, p, 200.0);
  EXPECT_FALSE(report.condition_holds);
  EXPECT_LT(report.observed_window_mass, 1.0 - 1e-3);
  EXPECT_LT(report.predicted_limit_mass, 1.0);
  // With C constant every agent searches, so C̄ = 1 and the limit mass is 1 + (eta - 1).
  EXPECT_NEAR(report.stationary_c_bar, 1.0, 1e-9);
  EXPECT_NEAR(report.predicted_limit_mass, 0.25, 1e-9);
  EXPECT_NEAR(report.observed_window_mass, report.predicted_limit_mass, 1e-6);

  const auto t1 = integrate(p.pi, policy, p, 100.0, 100.0).measures.back();
  const auto t2 = integrate(p.pi, policy, p, 200.0, 200.0).measures.back();
  for (int n = 1; n <= 10; ++n) EXPECT_NEAR(t1[n], t2[n], 1e-6) << n;
}

}  // namespace
}  // namespace percolate
