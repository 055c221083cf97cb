#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "percolate/best_response.hpp"
#include "support/oracles.hpp"

namespace percolate {
namespace {

using testing::make_params;

// Beyond the window an agent is valued at its exit utility net of c_lo search cost.
double outside(const ModelParams& p, int k, double k_lo) {
  return (p.eta_prime * exit_utility(k, p) - k_lo) / (p.r + p.eta_prime);
}

// Value of following the agent's own trigger T in a fixed market, by a dense solve.
Eigen::VectorXd own_trigger_value(const MarketState& s, const ModelParams& p, int own_trigger, double kappa) {
  const int n = p.n_max;
  const double b = p.r + p.eta_prime;
  const PrecisionMeasure nu = effort_weighted(s.mu, s.policy);
  const double c_bar = nu.total_mass();
  const double tail = (p.eta_prime * exit_utility_limit(p) - kappa * p.c_lo) / b;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd rhs(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double c = i < own_trigger ? p.c_hi : p.c_lo;
    a(i, i) += b + c * c_bar;
    rhs(i) = p.eta_prime * exit_utility(i, p) - kappa * c + c * nu.tail_mass * tail;
    for (int m = 0; m <= n; ++m) {
      if (i + m <= n) {
        a(i, i + m) -= c * nu[m];
      } else {
        rhs(i) += c * nu[m] * outside(p, i + m, kappa * p.c_lo);
      }
    }
  }
  return a.partialPivLu().solve(rhs);
}

MarketState market(const ModelParams& p, int trigger) {
  return solve_stationary(Policy::trigger(trigger, p.c_lo, p.c_hi, p.n_max), p);
}

TEST(Bellman, NoMeetingMarketClosedForm) {
  ModelParams p = make_params({0.0, 1.0}, 64);
  const MarketState s = solve_stationary(Policy::constant(0.0, p.n_max), p);
  const auto br = solve_value(s, p);
  for (int n = 0; n <= p.n_max; ++n) {
    EXPECT_NEAR(br.value[n], p.eta_prime * exit_utility(n, p) / (p.r + p.eta_prime), 1e-12);
  }
  EXPECT_NEAR(br.value[1], -0.75 / 1.1, 1e-10);
  EXPECT_EQ(br.iterations, 1);
}

TEST(Bellman, DegenerateZeroEffortFixedInOneStep) {
  ModelParams p = make_params({0.0, 0.5, 0.5}, 32);
  p.c_hi = 0.0;
  const MarketState s = solve_stationary(Policy::constant(0.0, p.n_max), p);
  const auto br = solve_value(s, p);
  EXPECT_EQ(br.iterations, 1);
  EXPECT_EQ(br.final_sup_change, 0.0);
}

TEST(Bellman, ContractionOnRandomPairs) {
  ModelParams p = make_params({0.0, 0.6, 0.4}, 64);
  p.c_lo = 0.1;
  const MarketState s = market(p, 4);
  const double q = p.c_hi * s.c_bar / (p.c_hi * s.c_bar + p.r + p.eta_prime);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(-2.0, 0.0);
  for (int trial = 0; trial < 50; ++trial) {
    ValueFunction a, b;
    for (int n = 0; n <= p.n_max; ++n) {
      a.values.push_back(unit(rng));
      b.values.push_back(unit(rng));
    }
    a.tail_value = b.tail_value = tail_value(p);
    const auto ma = bellman_operator(a, s, p);
    const auto mb = bellman_operator(b, s, p);
    double lhs = 0.0, rhs = 0.0;
    for (int n = 0; n <= p.n_max; ++n) {
      lhs = std::max(lhs, std::abs(ma[n] - mb[n]));
      rhs = std::max(rhs, std::abs(a[n] - b[n]));
    }
    EXPECT_LE(lhs, q * rhs + 1e-12);
  }
}

TEST(SolveValue, StructuralPropertiesAcrossMarkets) {
  for (double c_lo : {0.0, 0.1}) {
    for (double kappa : {0.02, 0.1}) {
      for (int trigger : {0, 2, 5, 9}) {
        ModelParams p = make_params({0.0, 0.5, 0.3, 0.2}, 128);
        p.c_lo = c_lo;
        p.cost = CostSpec::linear(kappa);
        const MarketState s = market(p, trigger);
        const auto br = solve_value(s, p);
        EXPECT_LE(br.max_contraction_ratio, br.contraction_factor + 1e-12);
        EXPECT_TRUE(br.value_monotone);
        EXPECT_TRUE(br.decreasing_difference);
        EXPECT_TRUE(br.bang_bang);
        EXPECT_TRUE(br.policy_nonincreasing) << c_lo << " " << kappa << " " << trigger;
        EXPECT_LT(br.bellman_residual, 1e-10);
        const int bound = n_bar(p);
        for (int n = std::max(bound, 0); n <= p.n_max; ++n) EXPECT_EQ(br.policy[n], p.c_lo) << n;
        ASSERT_TRUE(br.trigger_interval);
        EXPECT_LE(br.trigger_interval->hi, bound);
      }
    }
  }
}

TEST(SolveValue, MatchesBestOwnTriggerOracle) {
  ModelParams p = make_params({0.0, 0.7, 0.3}, 48);
  p.cost = CostSpec::linear(0.05);
  for (int trigger : {0, 3, 6}) {
    const MarketState s = market(p, trigger);
    const auto br = solve_value(s, p);
    Eigen::VectorXd best = own_trigger_value(s, p, 0, 0.05);
    int best_t = 0;
    for (int t = 1; t <= 20; ++t) {
      const Eigen::VectorXd v = own_trigger_value(s, p, t, 0.05);
      if (v(1) > best(1)) best_t = t;
      best = best.cwiseMax(v);
    }
    for (int n = 0; n <= p.n_max; ++n) EXPECT_NEAR(br.value[n], best(n), 1e-9) << n;
    ASSERT_TRUE(br.trigger);
    EXPECT_TRUE(br.trigger_interval->contains(best_t <= 1 ? 0 : best_t) ||
                br.trigger_interval->contains(best_t)) << best_t;
  }
}

TEST(SolveValue, TabulatedCostMatchesBruteForce) {
  ModelParams p = make_params({0.0, 0.6, 0.4}, 48);
  p.c_lo = 0.1;
  p.cost = CostSpec::tabulated({{0.1, 0.0}, {0.3, 0.004}, {0.5, 0.012}, {0.7, 0.03}, {1.0, 0.075}});
  const MarketState s = market(p, 4);
  const auto br = solve_value(s, p);
  EXPECT_TRUE(br.policy_nonincreasing);
  EXPECT_FALSE(br.trigger.has_value());

  // Independent value iteration, maximizing over every node by enumeration.
  const PrecisionMeasure nu = effort_weighted(s.mu, s.policy);
  const double b = p.r + p.eta_prime;
  std::vector<double> v(static_cast<std::size_t>(p.n_max) + 1), next(v.size());
  for (int n = 0; n <= p.n_max; ++n) v[static_cast<std::size_t>(n)] = p.eta_prime * exit_utility(n, p) / b;
  const double tail = tail_value(p);
  for (int it = 0; it < 2000; ++it) {
    for (int n = 0; n <= p.n_max; ++n) {
      double cont = nu.tail_mass * tail;
      for (int m = 0; m <= p.n_max; ++m) cont += (n + m <= p.n_max ? v[static_cast<std::size_t>(n + m)] : outside(p, n + m, 0.0)) * nu[m];
      double best = -1e300;
      for (const auto& node : p.cost.nodes()) {
        best = std::max(best, (p.eta_prime * exit_utility(n, p) - node.cost + node.effort * cont) /
                                  (b + node.effort * nu.total_mass()));
      }
      next[static_cast<std::size_t>(n)] = best;
    }
    v.swap(next);
  }
  for (int n = 0; n <= p.n_max; ++n) EXPECT_NEAR(br.value[n], v[static_cast<std::size_t>(n)], 1e-10);
}

TEST(NBar, SpotValueAgainstScan) {
  ModelParams p = make_params({0.0, 1.0}, 256);
  p.cost = CostSpec::linear(0.1);
  int oracle = 0;
  for (int n = 1; n <= 1000; ++n) {
    if (1.1 * 0.75 / (1 + 0.25 * (n - 1)) >= 0.1) oracle = n;
  }
  EXPECT_EQ(oracle, 30);
  EXPECT_EQ(n_bar(p), oracle);
}

TEST(NBar, EmptyAndUnbounded) {
  ModelParams p = make_params({0.0, 1.0}, 256);
  p.cost = CostSpec::linear(1.0 * 1.0 * 1.1 * 0.75 + 1e-9);
  EXPECT_EQ(n_bar(p), 0);
  p.cost = CostSpec::linear(1e-9);
  EXPECT_EQ(n_bar(p), p.n_max);
  p.cost = CostSpec::linear(0.0);
  EXPECT_EQ(n_bar(p), p.n_max);
}

TEST(NBar, DescentStartCoversSufficientBound) {
  ModelParams p = make_params({0.0, 1.0}, 256);
  p.eta_prime = 0.2;
  p.r = 0.05;
  p.cost = CostSpec::linear(0.05);
  EXPECT_GE(descent_start(p), n_bar(p));
  EXPECT_GE(descent_start(p), n_bar_sufficient(p) + 1);
}

TEST(MinimalSearch, ZeroFloorAlwaysEquilibrium) {
  ModelParams p = make_params({0.0, 1.0}, 64);
  const auto r = minimal_search_test(p);
  EXPECT_EQ(r.benefit, 0.0);
  EXPECT_TRUE(r.is_equilibrium);
}

TEST(MinimalSearch, MatchesDenseSolveAndRespondsToCost) {
  ModelParams p = make_params({0.0, 1.0}, 64);
  p.c_lo = 0.5;
  p.rho = 0.9;
  p.cost = CostSpec::linear(1e-4);
  const auto r = minimal_search_test(p);
  EXPECT_FALSE(r.is_equilibrium);
  EXPECT_GT(r.benefit, 0.0);

  // Dense oracle for the c_lo value function.
  const int n = p.n_max;
  const double c = p.c_lo;
  const double b = p.r + p.eta_prime;
  const double tail = (p.eta_prime * exit_utility_limit(p) - 1e-4 * c) / b;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd rhs(n + 1);
  for (int i = 0; i <= n; ++i) {
    a(i, i) += b + c * c;
    rhs(i) = p.eta_prime * exit_utility(i, p) - 1e-4 * c + c * c * r.market.mu.tail_mass * tail;
    for (int m = 0; m <= n; ++m) {
      if (i + m <= n) {
        a(i, i + m) -= c * c * r.market.mu[m];
      } else {
        rhs(i) += c * c * r.market.mu[m] * outside(p, i + m, 1e-4 * c);
      }
    }
  }
  const Eigen::VectorXd v = a.partialPivLu().solve(rhs);
  for (int i = 0; i <= n; ++i) EXPECT_NEAR(r.value[i], v(i), 1e-12);

  double oracle_b = 0.0;
  for (int m = 1; m <= n; ++m) oracle_b += ((1 + m <= n ? v(1 + m) : outside(p, 1 + m, 1e-4 * c)) - v(1)) * r.market.mu[m];
  oracle_b += (tail - v(1)) * r.market.mu.tail_mass;
  EXPECT_NEAR(r.benefit, c * oracle_b, 1e-12);

  p.cost = CostSpec::linear(10.0);
  EXPECT_TRUE(minimal_search_test(p).is_equilibrium);
}

TEST(MinimalSearch, BenefitEqualsMarginalGainOfSolvedValue) {
  ModelParams p = make_params({0.0, 0.5, 0.5}, 96);
  p.c_lo = 0.3;
  p.cost = CostSpec::linear(5.0);
  const auto r = minimal_search_test(p);
  const auto br = solve_value(r.market, p);
  EXPECT_NEAR(br.gains[1], r.benefit, 1e-9);
  for (int n = 0; n <= p.n_max; ++n) EXPECT_NEAR(br.value[n], r.value[n], 1e-9);
}

}  // namespace
}  // namespace percolate
