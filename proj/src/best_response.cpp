#include "percolate/best_response.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace percolate {

namespace {

struct Market {
  std::vector<double> nu;   // effort-weighted measure on the window
  std::vector<int> supp;
  double nu_tail = 0.0;     // effort carried by agents beyond the window
  double c_bar = 0.0;
};

Market market_of(const MarketState& state) {
  Market m;
  const PrecisionMeasure nu = effort_weighted(state.mu, state.policy);
  m.nu = nu.weights;
  m.nu_tail = nu.tail_mass;
  m.c_bar = nu.total_mass();
  for (std::size_t i = 0; i < m.nu.size(); ++i) {
    if (m.nu[i] != 0.0) m.supp.push_back(static_cast<int>(i));
  }
  return m;
}

// Value just beyond the window: exit utility at the true precision with c_lo
// search, V_k = (eta' u_k - K(c_lo)) / (r + eta').
std::vector<double> beyond_window(const ModelParams& params) {
  const int n_max = params.n_max;
  const double b = params.r + params.eta_prime;
  const double k_lo = effective_cost(params)(params.c_lo);
  std::vector<double> ext(static_cast<std::size_t>(n_max) + 1);
  for (int j = 1; j <= n_max; ++j) {
    ext[static_cast<std::size_t>(j)] = (params.eta_prime * exit_utility(n_max + j, params) - k_lo) / b;
  }
  return ext;
}

// S_n = sum_m V_{n+m} nu_m; partners already beyond the window carry the limit value.
std::vector<double> continuation(const ValueFunction& v, const Market& m, const std::vector<double>& ext) {
  const int n_max = v.n_max();
  std::vector<double> s(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (int n = 0; n <= n_max; ++n) {
    double acc = m.nu_tail * v.tail_value;
    for (int j : m.supp) {
      const int k = n + j;
      acc += (k <= n_max ? v.values[static_cast<std::size_t>(k)] : ext[static_cast<std::size_t>(k - n_max)]) *
             m.nu[static_cast<std::size_t>(j)];
    }
    s[static_cast<std::size_t>(n)] = acc;
  }
  return s;
}

struct Choice {
  double effort;
  double value;
};

// argmax_c (a - K(c) + c S) / (b + c C̄); ties resolve to the larger effort.
Choice maximize(double a, double s, double b, double c_bar, const CostSpec& cost, double c_lo, double c_hi) {
  auto objective = [&](double c) { return (a - cost(c) + c * s) / (b + c * c_bar); };
  if (cost.is_linear()) {
    const double kappa = cost.kappa();
    const double sign = b * (s - kappa) - c_bar * a;
    const double c = sign >= 0.0 ? c_hi : c_lo;
    return {c, objective(c)};
  }
  // The sign of dF/dc is that of h(c) = C̄(K - K'c) - b K' + (S b - C̄ a), which
  // is nonincreasing; on a table it is constant along each segment.
  std::vector<double> candidates = {c_lo};
  for (const auto& node : cost.nodes()) {
    if (node.effort > c_lo && node.effort < c_hi) candidates.push_back(node.effort);
  }
  candidates.push_back(c_hi);
  auto h = [&](double c) { return c_bar * (cost(c) - cost.right_slope(c) * c) - b * cost.right_slope(c) + (s * b - c_bar * a); };
  // First segment [candidates[j], candidates[j+1]) on which F strictly falls.
  std::size_t lo = 0;
  std::size_t hi = candidates.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (h(candidates[mid]) < 0.0) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  Choice best{candidates[lo], objective(candidates[lo])};
  for (double c : {c_lo, c_hi}) {
    const double f = objective(c);
    if (f > best.value + 1e-15) best = {c, f};
  }
  return best;
}

}  // namespace

double tail_value(const ModelParams& params) {
  const CostSpec cost = effective_cost(params);
  return (params.eta_prime * exit_utility_limit(params) - cost(params.c_lo)) / (params.r + params.eta_prime);
}

ValueFunction bellman_operator(const ValueFunction& v, const MarketState& state, const ModelParams& params,
                               std::vector<double>* chosen) {
  const int n_max = params.n_max;
  if (v.n_max() != n_max || state.mu.n_max() != n_max) throw ValidationError("value and market n_max differ");
  const Market m = market_of(state);
  const CostSpec cost = effective_cost(params);
  const double b = params.r + params.eta_prime;
  const std::vector<double> s = continuation(v, m, beyond_window(params));
  ValueFunction out;
  out.values.resize(static_cast<std::size_t>(n_max) + 1);
  out.tail_value = v.tail_value;
  if (chosen) chosen->assign(static_cast<std::size_t>(n_max) + 1, params.c_lo);
  for (int n = 0; n <= n_max; ++n) {
    const double a = params.eta_prime * exit_utility(n, params);
    const Choice c = maximize(a, s[static_cast<std::size_t>(n)], b, m.c_bar, cost, params.c_lo, params.c_hi);
    out.values[static_cast<std::size_t>(n)] = c.value;
    if (chosen) (*chosen)[static_cast<std::size_t>(n)] = c.effort;
  }
  return out;
}

BestResponse solve_value(const MarketState& state, const ModelParams& params, const SolverConfig& config) {
  validate(params);
  const int n_max = params.n_max;
  const double b = params.r + params.eta_prime;
  const Market m = market_of(state);
  const double q = params.c_hi * m.c_bar / (params.c_hi * m.c_bar + b);

  ValueFunction v;
  v.values.resize(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) v.values[static_cast<std::size_t>(n)] = params.eta_prime * exit_utility(n, params) / b;
  v.tail_value = tail_value(params);

  BestResponse br;
  br.contraction_factor = q;
  const double threshold = q > 0.0 ? config.value_tol * (1.0 - q) / q : std::numeric_limits<double>::infinity();
  const int cap = q > 0.0 ? 200 + static_cast<int>(std::ceil(std::log(config.value_tol * (1.0 - q)) / std::log(q))) * 4 : 1;

  std::vector<double> chosen;
  double previous_change = -1.0;
  for (int it = 1;; ++it) {
    ValueFunction next = bellman_operator(v, state, params, &chosen);
    double change = 0.0;
    for (int n = 0; n <= n_max; ++n) change = std::max(change, std::abs(next[n] - v[n]));
    if (previous_change > 1e-13 && change > 0.0) {
      br.max_contraction_ratio = std::max(br.max_contraction_ratio, change / previous_change);
    }
    previous_change = change;
    v = std::move(next);
    br.iterations = it;
    br.final_sup_change = change;
    if (change < threshold || change == 0.0) break;
    if (it >= cap) {
      std::ostringstream msg;
      msg << "value iteration did not converge in " << cap << " steps (sup change " << change << ", q " << q << ")";
      throw SolverError(msg.str());
    }
  }

  // Policy and residual at the returned V.
  const ValueFunction check = bellman_operator(v, state, params, &chosen);
  for (int n = 0; n <= n_max; ++n) br.bellman_residual = std::max(br.bellman_residual, std::abs(check[n] - v[n]));
  br.policy = Policy::from_efforts(chosen);
  br.value = v;

  const std::vector<double> s = continuation(v, m, beyond_window(params));
  br.gains.resize(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) br.gains[static_cast<std::size_t>(n)] = s[static_cast<std::size_t>(n)] - m.c_bar * v[n];

  const double scale = 1e-12 * std::max(1.0, std::abs(v.tail_value));
  for (int n = 0; n < n_max; ++n) {
    if (v[n + 1] < v[n] - scale) br.value_monotone = false;
    const double d0 = v[n] - params.eta_prime * exit_utility(n, params) / b;
    const double d1 = v[n + 1] - params.eta_prime * exit_utility(n + 1, params) / b;
    if (d1 > d0 + scale) br.decreasing_difference = false;
    if (chosen[static_cast<std::size_t>(n) + 1] > chosen[static_cast<std::size_t>(n)]) br.policy_nonincreasing = false;
  }
  for (double c : chosen) {
    if (c != params.c_lo && c != params.c_hi) br.bang_bang = false;
  }

  const CostSpec cost = effective_cost(params);
  if (cost.is_linear()) {
    const double kappa = cost.kappa();
    const int n_min = first_precision(params);
    const double tol = config.indifference_tol;
    int lo = n_max + 1;
    int hi = n_max + 1;
    for (int n = n_min; n <= n_max; ++n) {
      if (lo > n_max && br.gains[static_cast<std::size_t>(n)] <= kappa + tol) lo = n;
      if (br.gains[static_cast<std::size_t>(n)] < kappa - tol) {
        hi = n;
        break;
      }
    }
    // Below the entry support the trigger is not observable: 0 and n_min coincide.
    if (lo == n_min) lo = 0;
    lo = std::min(lo, n_max);
    hi = std::min(std::max(hi, lo), n_max);
    br.trigger = lo;
    br.trigger_interval = TriggerInterval{lo, hi};
  }
  return br;
}

int n_bar(const ModelParams& params) {
  const double k_prime = effective_cost(params).right_slope(params.c_lo);
  if (!(k_prime > 0.0)) {
    spdlog::warn("n_bar: K'(c_lo) = 0, the bound is infinite; using n_max = {}", params.n_max);
    return params.n_max;
  }
  const double u_bar = exit_utility_limit(params);
  const double scale = params.c_hi * params.eta_prime * (params.r + params.eta_prime);
  int best = 0;
  for (int n = 1; n <= params.n_max; ++n) {
    if (scale * (u_bar - exit_utility(n, params)) >= k_prime) best = n;
  }
  return best;
}

int n_bar_sufficient(const ModelParams& params) {
  const double k_prime = effective_cost(params).right_slope(params.c_lo);
  if (!(k_prime > 0.0)) return params.n_max;
  const double u_bar = exit_utility_limit(params);
  const double scale = params.c_hi * params.eta_prime / (params.r + params.eta_prime);
  int best = -1;
  for (int n = 0; n <= params.n_max; ++n) {
    if (scale * (u_bar - exit_utility(n, params)) >= k_prime) best = n;
  }
  return best;
}

int descent_start(const ModelParams& params) {
  return std::min(params.n_max, std::max(n_bar(params), n_bar_sufficient(params) + 1));
}

MinimalSearchResult minimal_search_test(const ModelParams& params, const SolverConfig& config) {
  validate(params);
  MinimalSearchResult out;
  const CostSpec cost = effective_cost(params);
  const double c = params.c_lo;
  out.marginal_cost = cost.right_slope(c);
  out.market = solve_stationary(Policy::constant(c, params.n_max), params, config);

  const int n_max = params.n_max;
  const double b = params.r + params.eta_prime;
  const double denom = b + c * c;
  const double gain = c * c / denom;
  const PrecisionMeasure& mu0 = out.market.mu;

  // V = sum_j A^j (f + g): A g_n = gain * sum_m g_{n+m} mu0_m over the window,
  // and g collects meetings that leave the window.
  const std::vector<double> ext = beyond_window(params);
  const double limit = tail_value(params);
  std::vector<int> supp;
  for (int m = 0; m <= n_max; ++m) {
    if (mu0[m] != 0.0) supp.push_back(m);
  }
  std::vector<double> term(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    double outside = limit * mu0.tail_mass;
    for (int m : supp) {
      if (n + m > n_max) outside += ext[static_cast<std::size_t>(n + m - n_max)] * mu0[m];
    }
    term[static_cast<std::size_t>(n)] =
        (params.eta_prime * exit_utility(n, params) - cost(c)) / denom + gain * outside;
  }
  out.value.values = term;
  out.value.tail_value = limit;
  std::vector<double> next(term.size());
  for (int j = 1; gain > 0.0; ++j) {
    double sup = 0.0;
    for (int n = 0; n <= n_max; ++n) {
      double acc = 0.0;
      for (int m : supp) {
        if (n + m > n_max) break;
        acc += term[static_cast<std::size_t>(n + m)] * mu0[m];
      }
      next[static_cast<std::size_t>(n)] = gain * acc;
      sup = std::max(sup, std::abs(next[static_cast<std::size_t>(n)]));
    }
    term.swap(next);
    for (int n = 0; n <= n_max; ++n) out.value.values[static_cast<std::size_t>(n)] += term[static_cast<std::size_t>(n)];
    out.series_terms = j;
    if (sup < 1e-14) break;
    if (j > 100000) throw SolverError("minimal-search series did not converge");
  }

  const int n0 = first_precision(params);
  double acc = (limit - out.value[n0]) * mu0.tail_mass;
  for (int m : supp) {
    const int k = n0 + m;
    const double vk = k <= n_max ? out.value[k] : ext[static_cast<std::size_t>(k - n_max)];
    acc += (vk - out.value[n0]) * mu0[m];
  }
  out.benefit = c * acc;
  out.is_equilibrium = out.marginal_cost >= out.benefit;
  return out;
}

}  // namespace percolate
