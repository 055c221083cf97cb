#pragma once

#include <vector>

#include "percolate/model.hpp"
#include "percolate/stationary.hpp"

namespace percolate {

struct Trajectory {
  std::vector<double> times;
  std::vector<PrecisionMeasure> measures;
  std::vector<double> mass_series;   ///< window mass plus tail at each snapshot
  double max_mass_deviation = 0.0;
  double max_clip = 0.0;             ///< largest negative undershoot that was clipped to 0
  int clip_count = 0;
  int accepted_steps = 0;
  int rejected_steps = 0;
};

/// Time derivative of the cross-sectional measure.  The returned tail_mass is
/// the derivative of the mass held beyond n_max, whose agents search at
/// C_{n_max}; window plus tail sums to eta (1 - total mass).
PrecisionMeasure rhs(const PrecisionMeasure& mu, const Policy& policy, const ModelParams& params);

/// Adaptive Dormand-Prince integration with snapshots at multiples of dt_out
/// (plus t_end).  Throws SolverError on step-size underflow or on a negative
/// undershoot below -1e-12.
Trajectory integrate(const PrecisionMeasure& mu0, const Policy& policy, const ModelParams& params, double t_end,
                     double dt_out, const SolverConfig& config = {});

struct MassLossReport {
  bool condition_holds = true;  ///< eta >= C_N c_hi
  double tail_effort = 0.0;     ///< C_N
  double stationary_c_bar = 0.0;
  /// 1 + (eta - C_N C̄)/C_N^2; only meaningful when the condition fails.
  double predicted_limit_mass = 1.0;
  /// Window mass (tail excluded) at the end of the integration from pi.
  double observed_window_mass = 1.0;
  double horizon = 0.0;
};

/// Checks the no-mass-loss condition and, when it fails, integrates from pi to
/// `t_end` to observe how much mass stays inside the window.
MassLossReport mass_loss_check(const Policy& policy, const ModelParams& params, double t_end = 200.0,
                               const SolverConfig& config = {});

double l1_distance(const PrecisionMeasure& a, const PrecisionMeasure& b);

}  // namespace percolate
