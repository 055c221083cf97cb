#pragma once

#include <string>
#include <vector>

#include "percolate/equilibrium.hpp"
#include "percolate/model.hpp"

namespace percolate {

enum class Selection {
  pareto_best,   ///< highest trigger in each report
  pareto_worst,  ///< lowest trigger in each report
  matched_up,    ///< best baseline; lowest treated trigger at or above it
  matched_down,  ///< best baseline; highest treated trigger at or below it
};
std::string to_string(Selection s);
Selection selection_from_string(const std::string& s);

enum class WelfareSign { zero, positive, negative, ambiguous };
std::string to_string(WelfareSign s);

struct InterventionOutcome {
  EquilibriumReport baseline;
  EquilibriumReport treated;
  int baseline_trigger = 0;
  int treated_trigger = 0;
  double tax = 0.0;
  /// V_treated(n) - V_baseline(n) - tax for every precision in the window.
  std::vector<double> welfare_delta;
  /// Judged on the precisions at which agents enter.
  WelfareSign sign = WelfareSign::zero;
  Selection selection = Selection::pareto_best;
  /// The selected treated trigger moves in the direction the intervention predicts.
  bool trigger_monotone = true;
};

/// Cost slope lowered by delta on top of any existing subsidy.  Requires a
/// linear cost and 0 <= delta < effective slope.
ModelParams apply_subsidy(const ModelParams& params, double delta);

/// Entry tax that balances the budget: tax * eta = delta * C̄.
double subsidy_tax(double delta, const MarketState& treated, const ModelParams& params);

/// Adds m public signals at entry; exit utility becomes u(n + M).
ModelParams apply_education(const ModelParams& params, int m);

/// Selects one equilibrium per report and compares values at entry.
InterventionOutcome welfare_compare(const EquilibriumReport& baseline, const EquilibriumReport& treated, double tax,
                                    Selection selection, const PrecisionMeasure& entry);

/// Solves both economies; the tax is read off the selected treated equilibrium.
InterventionOutcome evaluate_subsidy(const ModelParams& params, double delta,
                                     Selection selection = Selection::pareto_best,
                                     const EquilibriumOptions& options = {});
InterventionOutcome evaluate_education(const ModelParams& params, int m,
                                       Selection selection = Selection::pareto_best,
                                       const EquilibriumOptions& options = {});

/// One bisection on a scalar knob for a monotone predicate.
struct BisectionRecord {
  std::string knob;
  std::string predicate;
  double lo = 0.0;  ///< endpoint where the predicate holds
  double hi = 0.0;  ///< endpoint where it fails
  double band = 0.0;
  int iterations = 0;
  std::vector<std::pair<double, bool>> evaluations;
};

struct WitnessSearchConfig {
  std::vector<int> blocks = {2, 3, 4, 6, 8};
  std::vector<double> rhos = {0.5, 0.3};                             ///< subsidy search
  std::vector<double> kappas = {0.05, 0.02, 0.01, 0.005, 0.002};     ///< education search
  double band = 1e-4;
  int n_max = 128;
  double eta = 1.0;
  double eta_prime = 1.0;
  double r = 0.1;
  double c_hi = 1.0;
  EquilibriumOptions options;
};

/// Scenario with half the entrants holding no signal and half holding `block`.
ModelParams two_point_scenario(int block, double rho, double kappa, const WitnessSearchConfig& cfg);

/// kappa - eta' (u(2B) - u(B)) c_hi pi_B / (r + eta'): the no-search margin of a
/// block-B agent when nobody searches.
double block_no_search_margin(const ModelParams& params, int block);

struct Witness {
  bool found = false;
  int block = 0;
  ModelParams params;          ///< baseline economy
  BisectionRecord bisection;
  double knob_value = 0.0;     ///< delta (subsidy) or number of public signals (education)
  double no_search_margin = 0.0;
  InterventionOutcome outcome;
  std::vector<std::string> log;
};

/// Baseline with only the no-search equilibrium whose subsidised twin has a
/// search equilibrium that every entrant prefers net of the tax.
Witness find_subsidy_witness(const WitnessSearchConfig& cfg = {});

/// Baseline with a search equilibrium such that one public signal at entry
/// leaves only no-search, lowering every entrant's value.
Witness find_education_witness(const WitnessSearchConfig& cfg = {});

/// Highest-trigger equilibrium above the entry precision, or -1.
int best_search_trigger(const EquilibriumReport& report);

}  // namespace percolate
