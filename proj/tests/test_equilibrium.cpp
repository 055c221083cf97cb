#include <gtest/gtest.h>

#include <chrono>

#include "percolate/equilibrium.hpp"
#include "support/oracles.hpp"

namespace percolate {
namespace {

using testing::make_params;

TEST(Equilibrium, GridExistenceFixedPointsAndRanking) {
  for (double eta : {0.5, 2.0}) {
    for (double rho : {0.3, 0.8}) {
      for (double c_lo : {0.0, 0.1}) {
        ModelParams p = make_params({0.0, 0.5, 0.3, 0.2}, 96);
        p.eta = eta;
        p.rho = rho;
        p.c_lo = c_lo;
        p.cost = CostSpec::linear(0.05);
        const EquilibriumReport r = find_equilibria(p);
        SCOPED_TRACE(::testing::Message() << eta << " " << rho << " " << c_lo);
        ASSERT_FALSE(r.equilibria.empty());
        EXPECT_TRUE(r.correspondence_monotone);
        EXPECT_TRUE(r.correspondence_bounded);
        EXPECT_TRUE(r.pareto_consistent);
        if (c_lo == 0.0) EXPECT_NE(r.find(0), nullptr);
        EXPECT_EQ(r.minimal_search_equilibrium, r.find(0) != nullptr);
        for (const auto& e : r.equilibria) {
          EXPECT_TRUE(correspondence(e.n, p).optimal->contains(e.n)) << e.n;
        }
      }
    }
  }
}

// Every trigger in the window, not just those below the descent start.
TEST(Equilibrium, DescentFindsEveryFixedPointOfExhaustiveScan) {
  ModelParams p = make_params({0.0, 0.6, 0.4}, 40);
  p.rho = 0.4;
  p.cost = CostSpec::linear(0.03);
  const EquilibriumReport r = find_equilibria(p);
  std::vector<int> scan;
  for (int n = 0; n <= p.n_max; ++n) {
    if (n == 1) continue;  // same market as trigger 0 when nobody enters at precision 0
    if (correspondence(n, p).is_fixed_point()) scan.push_back(n);
  }
  std::vector<int> found;
  for (const auto& e : r.equilibria) found.push_back(e.n);
  EXPECT_EQ(found, scan);
}

TEST(Equilibrium, ProhibitiveCostLeavesOnlyNoSearch) {
  ModelParams p = make_params({0.0, 1.0}, 64);
  const double u_gap = exit_utility_limit(p) - exit_utility(1, p);
  p.cost = CostSpec::linear(p.c_hi * p.eta_prime * (p.r + p.eta_prime) * u_gap * 1.01);
  const EquilibriumReport r = find_equilibria(p);
  EXPECT_EQ(r.n_bar, 0);
  ASSERT_EQ(r.equilibria.size(), 1u);
  EXPECT_EQ(r.equilibria[0].n, 0);
  for (int n = 0; n <= p.n_max; ++n) {
    if (n == 1) continue;
    const auto entry = correspondence(n, p);
    ASSERT_TRUE(entry.optimal);
    EXPECT_EQ(entry.optimal->lo, 0) << n;
  }
}

TEST(Equilibrium, SearchEquilibriumDominatesNoSearch) {
  ModelParams p = make_params({0.0, 1.0}, 128);
  p.rho = 0.5;
  const double threshold = search_equilibrium_threshold(p);
  // u(2) - u(1) = rho^2 (1 - rho^2) / (1 + rho^2) and mu_1 = 1 with nobody searching.
  EXPECT_NEAR(threshold, 0.15 / 1.1, 1e-14);
  p.cost = CostSpec::linear(0.5 * threshold);
  const EquilibriumReport r = find_equilibria(p);
  ASSERT_NE(r.find(0), nullptr);
  ASSERT_GE(r.equilibria.size(), 2u);
  const Equilibrium& best = r.equilibria.back();
  EXPECT_GE(best.n, 2);
  EXPECT_TRUE(r.pareto_consistent);
  EXPECT_LE(r.max_pareto_violation, 1e-10);
  EXPECT_EQ(r.pareto_order.front(), best.n);
  EXPECT_GT(best.value[1], r.find(0)->value[1]);
}

TEST(Equilibrium, ParetoRankFlagsUnorderedValues) {
  EquilibriumReport r;
  Equilibrium lo, hi;
  lo.n = 0;
  hi.n = 3;
  lo.value.values = {1.0, 2.0};
  hi.value.values = {1.5, 1.9};
  r.equilibria = {hi, lo};
  EXPECT_TRUE(pareto_rank(r).empty());
  EXPECT_FALSE(r.pareto_consistent);
  EXPECT_NEAR(r.max_pareto_violation, 0.1, 1e-15);
  r.equilibria[1].value.values = {1.5, 2.0};
  EXPECT_EQ(pareto_rank(r), (std::vector<int>{3, 0}));
}

TEST(Equilibrium, NonlinearCostNeedsOptIn) {
  ModelParams p = make_params({0.0, 0.6, 0.4}, 32);
  p.c_lo = 0.1;
  p.cost = CostSpec::tabulated({{0.1, 0.0}, {0.5, 0.01}, {1.0, 0.04}});
  EXPECT_THROW(find_equilibria(p), ValidationError);
  EquilibriumOptions o;
  o.allow_nonlinear_cost = true;
  const EquilibriumReport r = find_equilibria(p, o);
  for (const auto& e : r.equilibria) EXPECT_TRUE(correspondence(e.n, p, o).is_fixed_point());
}

}  // namespace
}  // namespace percolate
