#pragma once

#include <optional>
#include <vector>

#include "percolate/best_response.hpp"
#include "percolate/model.hpp"
#include "percolate/stationary.hpp"

namespace percolate {

struct EquilibriumOptions {
  SolverConfig solver;
  /// Permit a trigger-restricted search under a non-linear cost.  Trigger
  /// optimality is only guaranteed for linear costs, so this logs a warning.
  bool allow_nonlinear_cost = false;
  /// Pointwise slack allowed in the Pareto check.
  double pareto_tol = 1e-10;
};

/// One row of the correspondence table: the market built on trigger N and the
/// optimal triggers against it.
struct CorrespondenceEntry {
  int n = 0;
  MarketState state;
  BestResponse response;
  /// Optimal triggers; empty when the best response is not trigger-shaped
  /// (possible only under a non-linear cost).
  std::optional<TriggerInterval> optimal;
  bool is_fixed_point() const { return optimal && optimal->contains(n); }
};

struct Equilibrium {
  int n = 0;
  MarketState state;
  ValueFunction value;
  TriggerInterval optimal;
};

struct EquilibriumReport {
  std::vector<Equilibrium> equilibria;  ///< sorted by trigger
  int n_bar = 0;
  int descent_start = 0;
  /// Triggers at or below this precision induce the same market as trigger 0.
  int first_precision = 0;
  std::vector<CorrespondenceEntry> table;  ///< ascending in N
  double minimal_search_benefit = 0.0;
  double minimal_search_marginal_cost = 0.0;
  bool minimal_search_equilibrium = true;
  /// max and min of the correspondence are nondecreasing along the table.
  bool correspondence_monotone = true;
  /// Every optimal trigger lies in [0, N̄].
  bool correspondence_bounded = true;
  /// Triggers ordered best first; empty when the Pareto check fails.
  std::vector<int> pareto_order;
  /// Largest shortfall V^{N'}_n - V^N_n below zero over pairs N' > N.
  double max_pareto_violation = 0.0;
  bool pareto_consistent = true;

  const Equilibrium* find(int n) const;
};

/// Optimal triggers against the stationary market of trigger n.
CorrespondenceEntry correspondence(int n, const ModelParams& params, const EquilibriumOptions& options = {});

/// Scans N from descent_start down to 0 and keeps every N with N in 𝒩(N).
EquilibriumReport find_equilibria(const ModelParams& params, const EquilibriumOptions& options = {});

/// Checks the pointwise ranking of the report's equilibria and fills
/// pareto_order, max_pareto_violation and pareto_consistent.  Returns the order.
std::vector<int> pareto_rank(EquilibriumReport& report, double tol = 1e-10);

/// eta' (u(2) - u(1)) c_hi mu_1 / (r + eta') with mu the stationary measure of
/// trigger 1.  With c_lo = 0 and pi_1 > 0, a slope below this admits an
/// equilibrium with search alongside the no-search one.
double search_equilibrium_threshold(const ModelParams& params, const SolverConfig& config = {});

}  // namespace percolate
