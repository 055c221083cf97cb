#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "percolate/model.hpp"

namespace percolate {

struct SimConfig {
  int population = 10000;
  double horizon = 50.0;
  std::uint64_t seed = 1;
  double record_grid = 1.0;
  /// Realized Y; drawn standard normal from the seed when absent.
  std::optional<double> y_realization;
};

/// Moments of posterior means within one precision bin.  Standard errors are
/// cluster-robust: agents who just met hold identical means and are grouped.
struct BinStats {
  int n = 0;
  long count = 0;
  double mean_x = 0.0;
  double var_x = 0.0;
  double skew = 0.0;
  double excess_kurtosis = 0.0;
  double mean_se = 0.0;
  double var_se = 0.0;
};

struct Snapshot {
  double t = 0.0;
  std::vector<BinStats> bins;  ///< one per precision 0..n_max
  long beyond_window = 0;      ///< agents with precision above n_max

  /// Empirical precision measure (fractions of the population).
  PrecisionMeasure histogram(int population) const;
};

/// Discounted lifetime utility realizations grouped by precision at entry.
struct LifetimeStats {
  int entry_precision = 0;
  long count = 0;
  double mean = 0.0;
  double half_width = 0.0;  ///< 95%
};

struct SimOutput {
  double y = 0.0;
  std::vector<Snapshot> snapshots;
  std::vector<LifetimeStats> lifetimes;
  long resets = 0;
  long exits = 0;
  long meetings = 0;
  long rejected_candidates = 0;
  long precision_decreases = 0;  ///< outside resets; always 0
};

/// Finite-population event simulation.  Each agent is reset to a fresh entry
/// draw at rate eta, each unordered pair meets at rate C_i C_j / P and pools
/// posteriors, and exits at rate eta' end a recorded lifetime without
/// changing the agent's state.  Lifetimes cut short by a reset are dropped.
SimOutput run(const Policy& policy, const ModelParams& params, const SimConfig& cfg);

struct ValueEstimate {
  double mean = 0.0;
  double half_width = 0.0;  ///< 95%
  long lifetimes = 0;
};

/// Monte Carlo lifetime utility of one agent entering at `entry_precision`
/// who follows `own` against the stationary market of `market_policy`.
/// `cfg.population` is the number of simulated lifetimes.
ValueEstimate estimate_value(const Policy& own, const Policy& market_policy, const ModelParams& params,
                             const SimConfig& cfg, int entry_precision);

/// Same, with the agent following the market policy.
ValueEstimate estimate_value(const Policy& policy, const ModelParams& params, const SimConfig& cfg,
                             int entry_precision);

/// splitmix64 step, used to derive independent stream seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace percolate
