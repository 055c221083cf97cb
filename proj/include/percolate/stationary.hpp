#pragma once

#include <optional>
#include <vector>

#include "percolate/model.hpp"

namespace percolate {

/// Tolerances shared by the solvers.
struct SolverConfig {
  double root_tol = 1e-12;        ///< |g(C̄)| at the accepted average effort
  double residual_tol = 1e-10;    ///< sup-norm of the stationarity residual
  double mass_tol = 1e-8;         ///< |total mass - 1| of a solved measure
  double value_tol = 1e-10;       ///< guaranteed sup-norm error of a value function
  double indifference_tol = 1e-9; ///< |marginal gain - K'| treated as indifference
  double ode_atol = 1e-10;
  double ode_rtol = 1e-8;
  int max_root_iterations = 400;
};

/// A stationary measure, the policy that generated it, and its average effort.
struct MarketState {
  PrecisionMeasure mu;
  Policy policy;
  double c_bar = 0.0;
  double residual = 0.0;  ///< sup-norm of the stationarity residual
  /// False when the no-mass-loss condition fails and mass escapes to infinite
  /// precision; tail_mass then carries the escaped effort, not a probability.
  bool mass_conserved = true;
};

/// Z_k = C_k / (eta + C_k * s), with s the effort mass of agents holding at
/// least one signal net of the precision-0 effort mass.  Reduces to
/// C_k / (eta + C_k C̄) when nobody enters uninformed.
struct ZSequence {
  std::vector<double> z;
};

/// Full self-convolution (nu * nu)_k = sum_{l=0}^{k} nu_l nu_{k-l} on 0..n_max.
/// `tail_mass` of the result is the flow sum_{l+m > n_max} nu_l nu_m that leaves
/// the window.
PrecisionMeasure self_convolution(const PrecisionMeasure& nu);

/// Candidate measure for a conjectured informed effort mass.
///
/// `informed_effort` is s = sum_{k>=1} C_k mu_k, agents beyond n_max included.
/// Precision-0 agents leave at rate C_0 s; informed agents are destroyed only
/// by meetings with informed agents and are cloned by meetings with uninformed
/// ones.  With pi_0 = 0 this is exactly the recursion
/// mu_k = (eta pi_k + sum_l C_l C_{k-l} mu_l mu_{k-l}) / (eta + C_k C̄).
/// The mass beyond n_max is the stationary balance of overshooting meetings
/// against replacement.  Returns nullopt when a denominator is not positive,
/// which only happens below the true root.
std::optional<PrecisionMeasure> candidate_measure(double informed_effort, const Policy& policy,
                                                  const ModelParams& params);

/// sup_n |eta (pi_n - mu_n) + (mu^C * mu^C)_n - mu^C_n mu^C(N)| over 0..n_max.
double stationary_residual(const PrecisionMeasure& mu, const Policy& policy, const ModelParams& params);

/// Unique stationary measure of `policy`.  `bracket_hint`, when given, seeds
/// the root search on the informed effort mass; it is widened until it brackets.
MarketState solve_stationary(const Policy& policy, const ModelParams& params, const SolverConfig& config = {},
                             std::optional<std::pair<double, double>> bracket_hint = std::nullopt);

ZSequence z_sequence(const MarketState& state, const ModelParams& params);

struct MgfComparison {
  double x;
  double closed_form;
  double direct_series;
};

/// Compares the square-root closed form of m(x) = sum_{k>=1} nu_k x^k with the
/// direct power series of the solved nu_k = C_k mu_k.
std::vector<MgfComparison> mgf_oracle(const MarketState& state, const ModelParams& params,
                                      const std::vector<double>& x_points);

enum class FosdRelation { kEqual, kFirstDominates, kSecondDominates, kCrossing };

struct FosdReport {
  FosdRelation relation = FosdRelation::kEqual;
  /// First index k where the tail sum of `a` falls below that of `b` (-1 if none).
  int first_violation_a_over_b = -1;
  /// First index k where the tail sum of `b` falls below that of `a` (-1 if none).
  int first_violation_b_over_a = -1;
  double max_shortfall_a = 0.0;
  double max_shortfall_b = 0.0;

  bool a_dominates() const {
    return relation == FosdRelation::kFirstDominates || relation == FosdRelation::kEqual;
  }
};

/// Tail-sum comparison sum_{i>=k} a_i vs sum_{i>=k} b_i for every k.
FosdReport fosd_compare(const PrecisionMeasure& a, const PrecisionMeasure& b, double tol = 1e-12);

/// Rescales a measure to unit total mass (jump-size law nu / C̄ for effort-weighted input).
PrecisionMeasure normalized(const PrecisionMeasure& m);

struct EffortMonotonicityReport {
  std::vector<double> c_bar;
  bool nondecreasing = true;
  int first_violation = -1;
};

/// Average effort along pointwise-ordered policies.
EffortMonotonicityReport average_effort_monotonicity_check(const std::vector<Policy>& c_grid,
                                                           const ModelParams& params,
                                                           const SolverConfig& config = {});

/// Policy with C_0 = C_1 = c1, C_2 = c2 and no search from precision 3 on.
Policy two_level_policy(double c1, double c2, int n_max);

struct CounterexampleReport {
  double c2 = 1.0;
  double epsilon = 0.0;
  double flow = 0.0;        ///< C_2 mu_2 at C_1 = C_2
  double derivative = 0.0;  ///< d(C_2 mu_2)/dC_1 at C_1 = C_2
  double c_bar = 0.0;
  double c_bar_reduced = 0.0;
  /// Effort-weighted measure with C_1 = C_2 - epsilon against the one with C_1 = C_2.
  FosdReport raw;
  /// The same comparison between the normalized jump-size laws.
  FosdReport jump_law;
};

/// Lowering the search effort at precision 1 can raise the flow of precision-2
/// information when pi_2 > 2 pi_1.
CounterexampleReport effort_counterexample(const ModelParams& params, double c2 = 1.0, double epsilon = 1e-3,
                                           const SolverConfig& config = {});

}  // namespace percolate
