#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "percolate/model.hpp"
#include "percolate/stationary.hpp"

namespace percolate {

struct TriggerInterval {
  int lo = 0;  ///< smallest optimal trigger N1
  int hi = 0;  ///< largest optimal trigger N2
  bool contains(int n) const { return lo <= n && n <= hi; }
};

struct BestResponse {
  ValueFunction value;
  Policy policy;
  /// Smallest optimal trigger; present when the cost is linear.
  std::optional<int> trigger;
  /// All optimal triggers (indifference widens the interval); linear cost only.
  std::optional<TriggerInterval> trigger_interval;
  /// Marginal gain from search G_n = sum_m (V_{n+m} - V_n) mu^C_m.
  std::vector<double> gains;
  int iterations = 0;
  double final_sup_change = 0.0;
  double contraction_factor = 0.0;        ///< c_hi C̄ / (c_hi C̄ + r + eta')
  double max_contraction_ratio = 0.0;     ///< largest observed ratio of successive sup changes
  bool value_monotone = true;             ///< V_n nondecreasing
  bool decreasing_difference = true;      ///< V_n - eta' u_n / (r + eta') nonincreasing
  bool bang_bang = true;                  ///< every chosen effort is c_lo or c_hi
  bool policy_nonincreasing = true;
  double bellman_residual = 0.0;          ///< sup |M V - V| at the returned V
};

/// Value of staying forever at c_lo with exit utility lim u.  Partners already
/// beyond the window are worth this; a meeting that carries the agent past
/// n_max to precision k is worth (eta' u_k - K(c_lo)) / (r + eta').
double tail_value(const ModelParams& params);

/// One application of the HJB operator
/// (MV)_n = max_c [eta' u_n - K(c) + c sum_m V_{n+m} mu^C_m] / (c C̄ + r + eta').
/// When `chosen` is given it receives the maximizing effort per precision.
ValueFunction bellman_operator(const ValueFunction& v, const MarketState& state, const ModelParams& params,
                               std::vector<double>* chosen = nullptr);

/// Value iteration to the fixed point with guaranteed sup-norm error config.value_tol.
BestResponse solve_value(const MarketState& state, const ModelParams& params, const SolverConfig& config = {});

/// max{n >= 1 : c_hi eta' (r + eta') (u_bar - u(n)) >= K'(c_lo)}, 0 when empty,
/// capped at n_max (also returned, with a warning, when K'(c_lo) = 0).
int n_bar(const ModelParams& params);

/// max{n >= 0 : c_hi eta' (u_bar - u(n)) / (r + eta') >= K'(c_lo)}, or -1 when
/// empty.  Beyond it the marginal gain from search is provably below K'(c_lo).
int n_bar_sufficient(const ModelParams& params);

/// Highest trigger the equilibrium descent must examine.
int descent_start(const ModelParams& params);

struct MinimalSearchResult {
  double benefit = 0.0;         ///< B
  double marginal_cost = 0.0;   ///< K'(c_lo)
  bool is_equilibrium = true;   ///< K'(c_lo) >= B
  MarketState market;           ///< stationary state under C = c_lo
  ValueFunction value;          ///< value of staying at c_lo forever
  int series_terms = 0;
};

/// Checks whether everybody searching at c_lo is self-confirming.
MinimalSearchResult minimal_search_test(const ModelParams& params, const SolverConfig& config = {});

}  // namespace percolate
