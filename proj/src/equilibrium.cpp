#include "percolate/equilibrium.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace percolate {

namespace {

// Trigger level of a chosen effort sequence on the reachable precisions, or
// nullopt when it is not of the form c_hi then c_lo.
std::optional<int> trigger_shape(const Policy& policy, const ModelParams& params) {
  const int n_min = first_precision(params);
  int level = params.n_max + 1;
  for (int n = n_min; n <= params.n_max; ++n) {
    const double c = policy[n];
    if (c == params.c_lo && level > params.n_max) {
      level = n;
    } else if (c == params.c_hi && level <= params.n_max) {
      return std::nullopt;
    } else if (c != params.c_lo && c != params.c_hi) {
      return std::nullopt;
    }
  }
  if (level > params.n_max) level = params.n_max;
  return level <= n_min ? 0 : level;
}

}  // namespace

const Equilibrium* EquilibriumReport::find(int n) const {
  for (const auto& e : equilibria) {
    if (e.n == n) return &e;
  }
  return nullptr;
}

CorrespondenceEntry correspondence(int n, const ModelParams& params, const EquilibriumOptions& options) {
  validate(params);
  if (n < 0 || n > params.n_max) throw ValidationError("trigger outside [0, n_max]");
  CorrespondenceEntry entry;
  entry.n = n;
  entry.state = solve_stationary(Policy::trigger(n, params.c_lo, params.c_hi, params.n_max), params, options.solver);
  entry.response = solve_value(entry.state, params, options.solver);
  if (entry.response.trigger_interval) {
    entry.optimal = entry.response.trigger_interval;
  } else if (const auto level = trigger_shape(entry.response.policy, params)) {
    entry.optimal = TriggerInterval{*level, *level};
  }
  return entry;
}

EquilibriumReport find_equilibria(const ModelParams& params, const EquilibriumOptions& options) {
  validate(params);
  if (!effective_cost(params).is_linear()) {
    if (!options.allow_nonlinear_cost) {
      throw ValidationError("equilibrium search needs a linear cost; set allow_nonlinear_cost to restrict to triggers");
    }
    spdlog::warn("non-linear cost: searching trigger policies only, which need not exhaust the equilibria");
  }
  EquilibriumReport report;
  report.n_bar = n_bar(params);
  report.descent_start = descent_start(params);
  report.first_precision = first_precision(params);

  // Triggers 1..first_precision induce the same market as trigger 0.
  for (int n = report.descent_start; n >= 0; --n) {
    if (n > 0 && n <= report.first_precision) continue;
    report.table.push_back(correspondence(n, params, options));
  }
  std::reverse(report.table.begin(), report.table.end());

  int prev_lo = -1;
  int prev_hi = -1;
  for (const auto& entry : report.table) {
    if (!entry.optimal) continue;
    if (entry.optimal->lo < prev_lo || entry.optimal->hi < prev_hi) report.correspondence_monotone = false;
    prev_lo = entry.optimal->lo;
    prev_hi = entry.optimal->hi;
    if (entry.optimal->hi > std::max(report.n_bar, report.first_precision)) report.correspondence_bounded = false;
    if (entry.is_fixed_point()) {
      report.equilibria.push_back(Equilibrium{entry.n, entry.state, entry.response.value, *entry.optimal});
    }
  }
  if (report.equilibria.empty()) spdlog::error("no trigger equilibrium found; the descent should always find one");

  const MinimalSearchResult minimal = minimal_search_test(params, options.solver);
  report.minimal_search_benefit = minimal.benefit;
  report.minimal_search_marginal_cost = minimal.marginal_cost;
  report.minimal_search_equilibrium = minimal.is_equilibrium;

  pareto_rank(report, options.pareto_tol);
  return report;
}

std::vector<int> pareto_rank(EquilibriumReport& report, double tol) {
  report.max_pareto_violation = 0.0;
  report.pareto_consistent = true;
  auto& eqs = report.equilibria;
  std::sort(eqs.begin(), eqs.end(), [](const Equilibrium& a, const Equilibrium& b) { return a.n < b.n; });
  for (std::size_t i = 0; i < eqs.size(); ++i) {
    for (std::size_t j = i + 1; j < eqs.size(); ++j) {
      for (int n = 0; n <= eqs[i].value.n_max(); ++n) {
        const double gap = eqs[j].value[n] - eqs[i].value[n];
        report.max_pareto_violation = std::max(report.max_pareto_violation, -gap);
      }
    }
  }
  report.pareto_consistent = report.max_pareto_violation <= tol;
  report.pareto_order.clear();
  if (!report.pareto_consistent) {
    spdlog::error("equilibria are not Pareto-ranked by trigger (shortfall {:.3e})", report.max_pareto_violation);
    return {};
  }
  for (auto it = eqs.rbegin(); it != eqs.rend(); ++it) report.pareto_order.push_back(it->n);
  return report.pareto_order;
}

double search_equilibrium_threshold(const ModelParams& params, const SolverConfig& config) {
  validate(params);
  const MarketState s = solve_stationary(Policy::trigger(1, params.c_lo, params.c_hi, params.n_max), params, config);
  const double du = exit_utility(2, params) - exit_utility(1, params);
  return params.eta_prime * du * params.c_hi * s.mu[1] / (params.r + params.eta_prime);
}

}  // namespace percolate
