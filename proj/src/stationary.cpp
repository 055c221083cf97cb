#include "percolate/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

namespace percolate {

namespace {

std::vector<int> support_of(const std::vector<double>& v) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

// Outflow sum_{l+m > n_max} nu_l nu_m via suffix sums.
double window_outflow(const std::vector<double>& nu) {
  const int n_max = static_cast<int>(nu.size()) - 1;
  std::vector<double> suffix(nu.size() + 1, 0.0);
  for (int k = n_max; k >= 0; --k) suffix[static_cast<std::size_t>(k)] = suffix[static_cast<std::size_t>(k) + 1] + nu[static_cast<std::size_t>(k)];
  double out = 0.0;
  for (int l = 0; l <= n_max; ++l) {
    const int first = n_max - l + 1;
    if (first <= n_max) out += nu[static_cast<std::size_t>(l)] * suffix[static_cast<std::size_t>(std::max(first, 0))];
  }
  return out;
}

}  // namespace

PrecisionMeasure self_convolution(const PrecisionMeasure& nu) {
  const int n_max = nu.n_max();
  PrecisionMeasure out(n_max);
  const std::vector<int> supp = support_of(nu.weights);
  for (int k = 0; k <= n_max; ++k) {
    double acc = 0.0;
    for (int l : supp) {
      if (l > k) break;
      acc += nu[l] * nu[k - l];
    }
    out[k] = acc;
  }
  out.tail_mass = window_outflow(nu.weights);
  return out;
}

std::optional<PrecisionMeasure> candidate_measure(double informed_effort, const Policy& policy,
                                                  const ModelParams& params) {
  if (!(informed_effort >= 0.0)) throw ValidationError("informed effort must be nonnegative");
  const int n_max = params.n_max;
  if (policy.n_max() != n_max) throw ValidationError("policy and scenario n_max differ");
  const double eta = params.eta;
  const double s = informed_effort;

  PrecisionMeasure mu(n_max);
  std::vector<double> nu(static_cast<std::size_t>(n_max) + 1, 0.0);
  std::vector<int> supp;

  mu[0] = eta * params.pi[0] / (eta + policy[0] * s);
  nu[0] = policy[0] * mu[0];
  const double net = s - nu[0];

  for (int k = 1; k <= n_max; ++k) {
    double gain = eta * params.pi[k];
    for (int l : supp) {
      if (l >= k) break;
      gain += nu[static_cast<std::size_t>(l)] * nu[static_cast<std::size_t>(k - l)];
    }
    const double denom = eta + policy[k] * net;
    double value = 0.0;
    if (gain > 0.0) {
      if (!(denom > 0.0)) return std::nullopt;
      value = gain / denom;
      if (!std::isfinite(value)) return std::nullopt;
    }
    mu[k] = value;
    nu[static_cast<std::size_t>(k)] = policy[k] * value;
    if (nu[static_cast<std::size_t>(k)] != 0.0) supp.push_back(k);
  }

  // Beyond the window: inflow from window pairs overshooting n_max and from
  // window agents meeting tail agents, outflow by replacement.
  double window_effort = 0.0;
  for (double x : nu) window_effort += x;
  const double tail_rate = eta - policy[n_max] * window_effort;
  const double crossing = window_outflow(nu);
  if (crossing > 0.0) {
    if (!(tail_rate > 0.0)) return std::nullopt;
    mu.tail_mass = crossing / tail_rate;
  }
  if (!std::isfinite(mu.tail_mass)) return std::nullopt;
  return mu;
}

double stationary_residual(const PrecisionMeasure& mu, const Policy& policy, const ModelParams& params) {
  const PrecisionMeasure nu = effort_weighted(mu, policy);
  const PrecisionMeasure conv = self_convolution(nu);
  const double c_bar = nu.total_mass();
  double worst = 0.0;
  for (int n = 0; n <= mu.n_max(); ++n) {
    const double r = params.eta * (params.pi[n] - mu[n]) + conv[n] - nu[n] * c_bar;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

namespace {

// g(s) = s - sum_{k>=1} C_k mu_k(s), tail included; -inf where the candidate does not exist.
double root_function(double s, const Policy& policy, const ModelParams& params) {
  const auto mu = candidate_measure(s, policy, params);
  if (!mu) return -std::numeric_limits<double>::infinity();
  double informed = policy[params.n_max] * mu->tail_mass;
  for (int k = 1; k <= params.n_max; ++k) informed += policy[k] * (*mu)[k];
  if (!std::isfinite(informed)) return -std::numeric_limits<double>::infinity();
  return s - informed;
}

}  // namespace

MarketState solve_stationary(const Policy& policy, const ModelParams& params, const SolverConfig& config,
                             std::optional<std::pair<double, double>> bracket_hint) {
  validate(params);
  if (policy.n_max() != params.n_max) throw ValidationError("policy and scenario n_max differ");
  if (policy.min_effort() < 0.0) throw ValidationError("policy efforts must be nonnegative");

  auto g = [&](double s) { return root_function(s, policy, params); };

  double lo = 0.0;
  double hi = std::max(policy.max_effort(), 1e-300);
  if (bracket_hint) {
    lo = std::max(0.0, std::min(bracket_hint->first, bracket_hint->second));
    hi = std::max(bracket_hint->first, bracket_hint->second);
    if (hi <= lo) hi = lo + 1e-3;
  }
  double g_lo = g(lo);
  double g_hi = g(hi);
  for (int i = 0; i < 200 && g_lo > 0.0; ++i) {
    if (lo == 0.0) break;
    const double width = hi - lo;
    hi = lo;
    g_hi = g_lo;
    lo = std::max(0.0, lo - 2.0 * width);
    g_lo = g(lo);
  }
  for (int i = 0; i < 200 && g_hi < 0.0; ++i) {
    const double width = hi - lo;
    lo = hi;
    g_lo = g_hi;
    hi = hi + 2.0 * std::max(width, 1e-3);
    g_hi = g(hi);
  }
  if (g_lo > 0.0 || g_hi < 0.0) {
    std::ostringstream msg;
    msg << "stationary root not bracketed: g(" << lo << ") = " << g_lo << ", g(" << hi << ") = " << g_hi;
    throw SolverError(msg.str());
  }

  double root = g_lo == 0.0 ? lo : hi;
  double g_root = g_lo == 0.0 ? g_lo : g_hi;
  bool use_secant = true;
  for (int it = 0; it < config.max_root_iterations && std::abs(g_root) > config.root_tol; ++it) {
    double x = 0.5 * (lo + hi);
    if (use_secant && std::isfinite(g_lo) && g_hi > g_lo) {
      const double candidate = lo - g_lo * (hi - lo) / (g_hi - g_lo);
      if (candidate > lo && candidate < hi) x = candidate;
    }
    use_secant = !use_secant;
    const double gx = g(x);
    if (gx < 0.0) {
      lo = x;
      g_lo = gx;
    } else {
      hi = x;
      g_hi = gx;
    }
    root = x;
    g_root = gx;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) break;
  }
  bool escapes = false;
  if (!(std::abs(g_root) <= config.root_tol)) {
    const bool collapsed = hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi);
    if (collapsed && std::isinf(g_lo) && policy[params.n_max] > 0.0) {
      // g jumps from -inf to a positive value: the tail cannot absorb the
      // overshooting flow and mass escapes beyond every precision level.
      escapes = true;
      root = hi;
      g_root = 0.0;
    } else if (std::isfinite(g_lo) && std::abs(g_lo) < std::abs(g_hi)) {
      root = lo;
      g_root = g_lo;
    } else {
      root = hi;
      g_root = g_hi;
    }
  }
  if (!(std::abs(g_root) <= std::max(config.root_tol, 1e-3 * config.residual_tol))) {
    std::ostringstream msg;
    msg << "stationary root search stalled with |g| = " << std::abs(g_root);
    throw SolverError(msg.str());
  }

  auto mu = candidate_measure(root, policy, params);
  if (!mu) throw SolverError("stationary candidate undefined at the computed root");
  if (escapes) {
    // Whatever effort the window does not carry sits with the escaped mass.
    double window_informed = 0.0;
    for (int k = 1; k <= params.n_max; ++k) window_informed += policy[k] * (*mu)[k];
    mu->tail_mass = std::max(0.0, root - window_informed) / policy[params.n_max];
    spdlog::warn("solve_stationary: mass escapes beyond the window (eta {} < C_N c_hi); total mass {:.6f}", params.eta,
                 mu->total_mass());
  }
  MarketState state{*mu, policy, 0.0, 0.0, !escapes};
  state.c_bar = effort_weighted(state.mu, policy).total_mass();
  state.residual = stationary_residual(state.mu, policy, params);
  if (state.residual > config.residual_tol) {
    std::ostringstream msg;
    msg << "stationary residual " << state.residual << " exceeds tolerance " << config.residual_tol;
    throw SolverError(msg.str());
  }
  const double mass_err = std::abs(state.mu.total_mass() - 1.0);
  if (!escapes && mass_err > std::max(config.mass_tol, 2.0 * state.mu.tail_mass)) {
    std::ostringstream msg;
    msg << "stationary mass off by " << mass_err << " (tail " << state.mu.tail_mass << ")";
    throw SolverError(msg.str());
  }
  return state;
}

ZSequence z_sequence(const MarketState& state, const ModelParams& params) {
  const int n_max = state.mu.n_max();
  const double nu0 = state.policy[0] * state.mu[0];
  const double net = state.c_bar - 2.0 * nu0;
  ZSequence z;
  z.z.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (int k = 0; k <= n_max; ++k) {
    const double c = state.policy[k];
    z.z[static_cast<std::size_t>(k)] = c / (params.eta + c * net);
  }
  return z;
}

std::vector<MgfComparison> mgf_oracle(const MarketState& state, const ModelParams& params,
                                      const std::vector<double>& x_points) {
  const int n_max = state.mu.n_max();
  const PrecisionMeasure nu = effort_weighted(state.mu, state.policy);
  const int flat = std::max(1, state.policy.flat_tail_index());
  const ZSequence z = z_sequence(state, params);
  const double z_flat = z.z[static_cast<std::size_t>(flat)];

  // Informed-only convolution: sum_{l=1}^{k-1} nu_l nu_{k-l}.
  std::vector<double> conv(static_cast<std::size_t>(flat), 0.0);
  for (int k = 1; k < flat; ++k) {
    for (int l = 1; l < k; ++l) conv[static_cast<std::size_t>(k)] += nu[l] * nu[k - l];
  }

  std::vector<MgfComparison> out;
  out.reserve(x_points.size());
  for (double x : x_points) {
    if (!(x >= 0.0 && x < 1.0)) throw ValidationError("mgf points must lie in [0, 1)");
    double direct = 0.0;
    double power = 1.0;
    for (int k = 1; k <= n_max; ++k) {
      power *= x;
      direct += nu[k] * power;
    }
    MgfComparison row{x, direct, direct};
    if (z_flat > 0.0) {
      double entry = 0.0;
      power = 1.0;
      for (int k = 1; k <= n_max; ++k) {
        power *= x;
        entry += params.pi[k] * power;
      }
      double m_of_x = z_flat * params.eta * entry;
      power = 1.0;
      for (int i = 1; i < flat; ++i) {
        power *= x;
        m_of_x += power * (z.z[static_cast<std::size_t>(i)] - z_flat) * (params.eta * params.pi[i] + conv[static_cast<std::size_t>(i)]);
      }
      const double disc = std::max(0.0, 1.0 - 4.0 * z_flat * m_of_x);
      row.closed_form = (1.0 - std::sqrt(disc)) / (2.0 * z_flat);
    }
    out.push_back(row);
  }
  return out;
}

FosdReport fosd_compare(const PrecisionMeasure& a, const PrecisionMeasure& b, double tol) {
  if (a.n_max() != b.n_max()) throw ValidationError("fosd_compare needs a shared n_max");
  FosdReport report;
  double tail_a = a.tail_mass;
  double tail_b = b.tail_mass;
  bool a_ge = true;
  bool b_ge = true;
  for (int k = a.n_max(); k >= 0; --k) {
    tail_a += a[k];
    tail_b += b[k];
    const double diff = tail_a - tail_b;
    if (diff < -tol) {
      a_ge = false;
      report.first_violation_a_over_b = k;
      report.max_shortfall_a = std::max(report.max_shortfall_a, -diff);
    }
    if (diff > tol) {
      b_ge = false;
      report.first_violation_b_over_a = k;
      report.max_shortfall_b = std::max(report.max_shortfall_b, diff);
    }
  }
  if (a_ge && b_ge) {
    report.relation = FosdRelation::kEqual;
  } else if (a_ge) {
    report.relation = FosdRelation::kFirstDominates;
  } else if (b_ge) {
    report.relation = FosdRelation::kSecondDominates;
  } else {
    report.relation = FosdRelation::kCrossing;
  }
  return report;
}

PrecisionMeasure normalized(const PrecisionMeasure& m) {
  const double total = m.total_mass();
  if (!(total > 0.0)) throw ValidationError("cannot normalize a measure with zero mass");
  PrecisionMeasure out = m;
  for (double& w : out.weights) w /= total;
  out.tail_mass /= total;
  return out;
}

EffortMonotonicityReport average_effort_monotonicity_check(const std::vector<Policy>& c_grid,
                                                           const ModelParams& params,
                                                           const SolverConfig& config) {
  EffortMonotonicityReport report;
  for (std::size_t i = 0; i < c_grid.size(); ++i) {
    if (i > 0) {
      const Policy& prev = c_grid[i - 1];
      for (int n = 0; n <= params.n_max; ++n) {
        if (c_grid[i][n] < prev[n]) throw ValidationError("policy grid is not pointwise ordered");
      }
    }
    report.c_bar.push_back(solve_stationary(c_grid[i], params, config).c_bar);
    if (i > 0 && report.c_bar[i] < report.c_bar[i - 1] - config.root_tol * 10.0 && report.nondecreasing) {
      report.nondecreasing = false;
      report.first_violation = static_cast<int>(i);
    }
  }
  return report;
}

Policy two_level_policy(double c1, double c2, int n_max) {
  if (n_max < 3) throw ValidationError("two-level policy needs n_max >= 3");
  std::vector<double> e(static_cast<std::size_t>(n_max) + 1, 0.0);
  e[0] = c1;
  e[1] = c1;
  e[2] = c2;
  return Policy::from_efforts(std::move(e));
}

CounterexampleReport effort_counterexample(const ModelParams& params, double c2, double epsilon,
                                           const SolverConfig& config) {
  validate(params);
  CounterexampleReport out;
  out.c2 = c2;
  out.epsilon = epsilon;
  auto flow = [&](double c1) { return c2 * solve_stationary(two_level_policy(c1, c2, params.n_max), params, config).mu[2]; };
  // Second-order one-sided difference keeps C_1 inside [c_lo, c_hi].
  const double h = 1e-5 * std::max(c2, 1e-3);
  const double f0 = flow(c2);
  out.flow = f0;
  out.derivative = (3.0 * f0 - 4.0 * flow(c2 - h) + flow(c2 - 2.0 * h)) / (2.0 * h);
  const MarketState base = solve_stationary(two_level_policy(c2, c2, params.n_max), params, config);
  const MarketState reduced = solve_stationary(two_level_policy(c2 - epsilon, c2, params.n_max), params, config);
  const PrecisionMeasure wb = effort_weighted(base.mu, base.policy);
  const PrecisionMeasure wr = effort_weighted(reduced.mu, reduced.policy);
  out.c_bar = base.c_bar;
  out.c_bar_reduced = reduced.c_bar;
  out.raw = fosd_compare(wr, wb);
  out.jump_law = fosd_compare(normalized(wr), normalized(wb));
  return out;
}

}  // namespace percolate
