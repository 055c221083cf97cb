#include <gtest/gtest.h>

#include "percolate/interventions.hpp"
#include "support/oracles.hpp"

namespace percolate {
namespace {

using testing::make_params;

ModelParams base() {
  ModelParams p = make_params({0.0, 0.5, 0.3, 0.2}, 96);
  p.rho = 0.4;
  p.cost = CostSpec::linear(0.05);
  return p;
}

TEST(Subsidy, ZeroIsIdentityAndLimitsAreEnforced) {
  const ModelParams p = base();
  const ModelParams q = apply_subsidy(p, 0.0);
  EXPECT_EQ(effective_cost(q).kappa(), 0.05);
  EXPECT_THROW(apply_subsidy(p, 0.05), ValidationError);
  EXPECT_THROW(apply_subsidy(p, -0.01), ValidationError);
  const InterventionOutcome o = evaluate_subsidy(p, 0.0);
  EXPECT_EQ(o.tax, 0.0);
  EXPECT_EQ(o.sign, WelfareSign::zero);
  for (double d : o.welfare_delta) EXPECT_EQ(d, 0.0);
}

TEST(Subsidy, BudgetBalances) {
  const ModelParams p = base();
  const double delta = 0.02;
  const InterventionOutcome o = evaluate_subsidy(p, delta);
  const Equilibrium* e = o.treated.find(o.treated_trigger);
  ASSERT_NE(e, nullptr);
  EXPECT_NEAR(o.tax * p.eta, delta * effort_weighted(e->state.mu, e->state.policy).total_mass(), 1e-12);
}

TEST(Subsidy, TriggersRiseAlongDeltaGrid) {
  const ModelParams p = base();
  int previous = -1;
  for (double f : {0.0, 0.25, 0.5, 0.75}) {
    const InterventionOutcome o = evaluate_subsidy(p, f * 0.05);
    EXPECT_GE(o.treated_trigger, previous) << f;
    EXPECT_TRUE(o.trigger_monotone);
    previous = o.treated_trigger;
  }
}

TEST(Subsidy, OptimalTriggerRisesInFixedMarket) {
  ModelParams p = base();
  const MarketState s = solve_stationary(Policy::trigger(4, p.c_lo, p.c_hi, p.n_max), p);
  int lo = -1, hi = -1;
  for (double delta : {0.0, 0.01, 0.02, 0.03, 0.04, 0.045}) {
    const BestResponse br = solve_value(s, apply_subsidy(p, delta));
    ASSERT_TRUE(br.trigger_interval);
    EXPECT_GE(br.trigger_interval->lo, lo);
    EXPECT_GE(br.trigger_interval->hi, hi);
    lo = br.trigger_interval->lo;
    hi = br.trigger_interval->hi;
  }
}

TEST(Education, ZeroIsIdentity) {
  const ModelParams p = base();
  EXPECT_EQ(apply_education(p, 0).public_signals, 0);
  EXPECT_THROW(apply_education(p, -1), ValidationError);
  const InterventionOutcome o = evaluate_education(p, 0);
  EXPECT_EQ(o.sign, WelfareSign::zero);
}

TEST(Education, TriggersAndEffortFallAlongSignalGrid) {
  ModelParams p = base();
  p.cost = CostSpec::linear(0.01);
  int previous = 1 << 30;
  std::optional<PrecisionMeasure> last;
  for (int m : {0, 1, 2, 3}) {
    const InterventionOutcome o = evaluate_education(p, m);
    EXPECT_LE(o.treated_trigger, previous) << m;
    EXPECT_TRUE(o.trigger_monotone);
    previous = o.treated_trigger;
    const Equilibrium* e = o.treated.find(o.treated_trigger);
    const PrecisionMeasure weighted = effort_weighted(e->state.mu, e->state.policy);
    if (last) EXPECT_TRUE(fosd_compare(*last, weighted).a_dominates()) << m;
    last = weighted;
  }
}

TEST(Education, OptimalTriggerFallsInFixedMarket) {
  ModelParams p = base();
  p.cost = CostSpec::linear(0.01);
  const MarketState s = solve_stationary(Policy::trigger(8, p.c_lo, p.c_hi, p.n_max), p);
  int lo = 1 << 30, hi = 1 << 30;
  for (int m : {0, 1, 2, 3, 5, 8}) {
    const BestResponse br = solve_value(s, apply_education(p, m));
    ASSERT_TRUE(br.trigger_interval);
    EXPECT_LE(br.trigger_interval->lo, lo);
    EXPECT_LE(br.trigger_interval->hi, hi);
    lo = br.trigger_interval->lo;
    hi = br.trigger_interval->hi;
  }
}

TEST(Welfare, IdenticalReportsGiveZeroAndTaxShiftsEveryEntry) {
  const ModelParams p = base();
  const EquilibriumReport r = find_equilibria(p);
  const InterventionOutcome same = welfare_compare(r, r, 0.0, Selection::pareto_best, p.pi);
  EXPECT_EQ(same.sign, WelfareSign::zero);
  const InterventionOutcome taxed = welfare_compare(r, r, 0.01, Selection::pareto_best, p.pi);
  EXPECT_EQ(taxed.sign, WelfareSign::negative);
  for (double d : taxed.welfare_delta) EXPECT_DOUBLE_EQ(d, -0.01);
  EXPECT_EQ(selection_from_string("matched_up"), Selection::matched_up);
  EXPECT_THROW(selection_from_string("best"), ValidationError);
}

TEST(Witness, SubsidyTurnsNoSearchIntoPreferredSearch) {
  const Witness w = find_subsidy_witness();
  ASSERT_TRUE(w.found);
  EXPECT_EQ(w.outcome.sign, WelfareSign::positive);
  EXPECT_EQ(w.outcome.baseline.equilibria.size(), 1u);
  EXPECT_EQ(w.outcome.baseline_trigger, 0);
  EXPECT_GT(w.outcome.treated_trigger, w.block);
  EXPECT_LE(w.bisection.hi - w.bisection.lo, w.bisection.band);
  EXPECT_GT(w.bisection.iterations, 0);
  // Both ends of the recorded bracket re-evaluate as recorded.
  ModelParams lo = w.params;
  lo.cost = CostSpec::linear(w.bisection.lo);
  EXPECT_GE(best_search_trigger(find_equilibria(lo)), 0);
  EXPECT_LT(best_search_trigger(find_equilibria(w.params)), 0);
  EXPECT_NEAR(w.outcome.tax * w.params.eta,
              w.knob_value * w.outcome.treated.find(w.outcome.treated_trigger)->state.c_bar, 1e-12);
}

TEST(Witness, EducationRemovesSearchAndLowersWelfare) {
  const Witness w = find_education_witness();
  ASSERT_TRUE(w.found);
  EXPECT_EQ(w.outcome.sign, WelfareSign::negative);
  EXPECT_EQ(w.outcome.treated.equilibria.size(), 1u);
  EXPECT_EQ(w.outcome.treated_trigger, 0);
  EXPECT_GT(w.outcome.baseline_trigger, w.block);
  EXPECT_LE(std::abs(w.bisection.hi - w.bisection.lo), w.bisection.band);
  ModelParams hi = w.params;
  hi.rho = w.bisection.hi;
  EXPECT_LT(best_search_trigger(find_equilibria(hi)), 0);
}

}  // namespace
}  // namespace percolate
