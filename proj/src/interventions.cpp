#include "percolate/interventions.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace percolate {

namespace {

struct Picked {
  const Equilibrium* baseline = nullptr;
  const Equilibrium* treated = nullptr;
  bool matched = true;
};

Picked pick(const EquilibriumReport& a, const EquilibriumReport& b, Selection selection) {
  if (a.equilibria.empty() || b.equilibria.empty()) throw ValidationError("welfare comparison needs equilibria");
  Picked p;
  switch (selection) {
    case Selection::pareto_best:
      p.baseline = &a.equilibria.back();
      p.treated = &b.equilibria.back();
      break;
    case Selection::pareto_worst:
      p.baseline = &a.equilibria.front();
      p.treated = &b.equilibria.front();
      break;
    case Selection::matched_up:
      p.baseline = &a.equilibria.back();
      for (const auto& e : b.equilibria) {
        if (e.n >= p.baseline->n) {
          p.treated = &e;
          break;
        }
      }
      if (!p.treated) {
        p.treated = &b.equilibria.back();
        p.matched = false;
      }
      break;
    case Selection::matched_down:
      p.baseline = &a.equilibria.back();
      for (auto it = b.equilibria.rbegin(); it != b.equilibria.rend(); ++it) {
        if (it->n <= p.baseline->n) {
          p.treated = &*it;
          break;
        }
      }
      if (!p.treated) {
        p.treated = &b.equilibria.front();
        p.matched = false;
      }
      break;
  }
  return p;
}

BisectionRecord bisect(std::string knob, std::string predicate_name, double holds, double fails, double band,
                       const std::function<bool(double)>& predicate) {
  BisectionRecord rec;
  rec.knob = std::move(knob);
  rec.predicate = std::move(predicate_name);
  rec.band = band;
  while (std::abs(fails - holds) > band) {
    const double mid = 0.5 * (holds + fails);
    const bool ok = predicate(mid);
    rec.evaluations.emplace_back(mid, ok);
    (ok ? holds : fails) = mid;
    ++rec.iterations;
  }
  rec.lo = holds;
  rec.hi = fails;
  return rec;
}

bool has_search_equilibrium(const ModelParams& p, const EquilibriumOptions& options) {
  return best_search_trigger(find_equilibria(p, options)) >= 0;
}

std::string fmt_double(double x) {
  std::ostringstream s;
  s.precision(10);
  s << x;
  return s.str();
}

}  // namespace

std::string to_string(Selection s) {
  switch (s) {
    case Selection::pareto_best: return "pareto_best";
    case Selection::pareto_worst: return "pareto_worst";
    case Selection::matched_up: return "matched_up";
    case Selection::matched_down: return "matched_down";
  }
  return "?";
}

Selection selection_from_string(const std::string& s) {
  for (Selection x : {Selection::pareto_best, Selection::pareto_worst, Selection::matched_up, Selection::matched_down}) {
    if (to_string(x) == s) return x;
  }
  throw ValidationError("unknown selection rule: " + s);
}

std::string to_string(WelfareSign s) {
  switch (s) {
    case WelfareSign::zero: return "zero";
    case WelfareSign::positive: return "positive";
    case WelfareSign::negative: return "negative";
    case WelfareSign::ambiguous: return "ambiguous";
  }
  return "?";
}

ModelParams apply_subsidy(const ModelParams& params, double delta) {
  const CostSpec cost = effective_cost(params);
  if (!cost.is_linear()) throw ValidationError("subsidy needs a linear cost");
  if (!(delta >= 0.0) || !(delta < cost.kappa())) throw ValidationError("subsidy must satisfy 0 <= delta < kappa");
  ModelParams out = params;
  out.subsidy += delta;
  validate(out);
  return out;
}

double subsidy_tax(double delta, const MarketState& treated, const ModelParams& params) {
  return delta * treated.c_bar / params.eta;
}

ModelParams apply_education(const ModelParams& params, int m) {
  if (m < 0) throw ValidationError("number of public signals must be nonnegative");
  ModelParams out = params;
  out.public_signals += m;
  return out;
}

InterventionOutcome welfare_compare(const EquilibriumReport& baseline, const EquilibriumReport& treated, double tax,
                                    Selection selection, const PrecisionMeasure& entry) {
  const Picked p = pick(baseline, treated, selection);
  InterventionOutcome out;
  out.baseline = baseline;
  out.treated = treated;
  out.baseline_trigger = p.baseline->n;
  out.treated_trigger = p.treated->n;
  out.tax = tax;
  out.selection = selection;
  out.trigger_monotone = p.matched;
  const int n_max = p.baseline->value.n_max();
  out.welfare_delta.resize(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    out.welfare_delta[static_cast<std::size_t>(n)] = p.treated->value[n] - p.baseline->value[n] - tax;
  }
  constexpr double eps = 1e-12;
  bool all_zero = true, all_pos = true, all_neg = true;
  for (int n = 0; n <= std::min(n_max, entry.n_max()); ++n) {
    if (entry[n] <= 0.0) continue;
    const double d = out.welfare_delta[static_cast<std::size_t>(n)];
    if (std::abs(d) > eps) all_zero = false;
    if (!(d > eps)) all_pos = false;
    if (!(d < -eps)) all_neg = false;
  }
  out.sign = all_zero ? WelfareSign::zero
             : all_pos ? WelfareSign::positive
             : all_neg ? WelfareSign::negative
                       : WelfareSign::ambiguous;
  return out;
}

InterventionOutcome evaluate_subsidy(const ModelParams& params, double delta, Selection selection,
                                     const EquilibriumOptions& options) {
  const ModelParams treated_params = apply_subsidy(params, delta);
  const EquilibriumReport base = find_equilibria(params, options);
  const EquilibriumReport treated = find_equilibria(treated_params, options);
  const Picked p = pick(base, treated, selection);
  const double tax = subsidy_tax(delta, p.treated->state, treated_params);
  InterventionOutcome out = welfare_compare(base, treated, tax, selection, params.pi);
  out.trigger_monotone = out.trigger_monotone && out.treated_trigger >= out.baseline_trigger;
  return out;
}

InterventionOutcome evaluate_education(const ModelParams& params, int m, Selection selection,
                                       const EquilibriumOptions& options) {
  const EquilibriumReport base = find_equilibria(params, options);
  const EquilibriumReport treated = find_equilibria(apply_education(params, m), options);
  InterventionOutcome out = welfare_compare(base, treated, 0.0, selection, params.pi);
  out.trigger_monotone = out.trigger_monotone && out.treated_trigger <= out.baseline_trigger;
  return out;
}

int best_search_trigger(const EquilibriumReport& report) {
  for (auto it = report.equilibria.rbegin(); it != report.equilibria.rend(); ++it) {
    if (it->n > report.first_precision) return it->n;
  }
  return -1;
}

ModelParams two_point_scenario(int block, double rho, double kappa, const WitnessSearchConfig& cfg) {
  ModelParams p;
  p.n_max = cfg.n_max;
  p.pi = PrecisionMeasure(cfg.n_max);
  p.pi[0] = 0.5;
  p.pi[block] = 0.5;
  p.rho = rho;
  p.eta = cfg.eta;
  p.eta_prime = cfg.eta_prime;
  p.r = cfg.r;
  p.c_lo = 0.0;
  p.c_hi = cfg.c_hi;
  p.cost = CostSpec::linear(kappa);
  validate(p);
  return p;
}

double block_no_search_margin(const ModelParams& params, int block) {
  const double du = exit_utility(2 * block, params) - exit_utility(block, params);
  return effective_cost(params).kappa() -
         params.eta_prime * du * params.c_hi * params.pi[block] / (params.r + params.eta_prime);
}

Witness find_subsidy_witness(const WitnessSearchConfig& cfg) {
  Witness w;
  for (int block : cfg.blocks) {
    for (double rho : cfg.rhos) {
      ModelParams p = two_point_scenario(block, rho, 1.0, cfg);
      const double scale = -block_no_search_margin(two_point_scenario(block, rho, 0.0, cfg), block);
      auto with_kappa = [&](double k) { return two_point_scenario(block, rho, k, cfg); };
      auto pred = [&](double k) { return has_search_equilibrium(with_kappa(k), cfg.options); };
      std::ostringstream head;
      head << "block " << block << " rho " << rho;
      double holds = 1e-3 * scale;
      double fails = 4.0 * scale;
      while (pred(fails) && fails < 1e3 * scale) fails *= 2.0;
      if (!pred(holds) || pred(fails)) {
        w.log.push_back(head.str() + ": no bracket for the search-equilibrium boundary in kappa");
        continue;
      }
      BisectionRecord rec = bisect("kappa", "baseline has a search equilibrium", holds, fails, cfg.band, pred);
      p = with_kappa(rec.hi);
      const double delta = rec.hi - rec.lo + cfg.band;
      if (!(delta < rec.hi)) {
        w.log.push_back(head.str() + ": boundary too close to zero for a subsidy below kappa");
        continue;
      }
      InterventionOutcome out = evaluate_subsidy(p, delta, Selection::pareto_best, cfg.options);
      std::ostringstream line;
      line << head.str() << ": kappa " << fmt_double(rec.hi) << " delta " << fmt_double(delta) << " baseline N "
           << out.baseline_trigger << " treated N " << out.treated_trigger << " tax " << fmt_double(out.tax)
           << " welfare " << to_string(out.sign);
      w.log.push_back(line.str());
      spdlog::info("subsidy witness search: {}", line.str());
      const bool unique_no_search = out.baseline.equilibria.size() == 1 && best_search_trigger(out.baseline) < 0;
      if (unique_no_search && best_search_trigger(out.treated) >= 0 && out.sign == WelfareSign::positive) {
        w.found = true;
        w.block = block;
        w.params = p;
        w.bisection = std::move(rec);
        w.knob_value = delta;
        w.no_search_margin = block_no_search_margin(p, block);
        w.outcome = std::move(out);
        return w;
      }
    }
  }
  return w;
}

Witness find_education_witness(const WitnessSearchConfig& cfg) {
  Witness w;
  for (double kappa : cfg.kappas) {
    for (int block : cfg.blocks) {
      auto with_rho = [&](double rho) { return two_point_scenario(block, rho, kappa, cfg); };
      auto pred = [&](double rho) { return has_search_equilibrium(with_rho(rho), cfg.options); };
      std::ostringstream head;
      head << "kappa " << kappa << " block " << block;
      // The gain from one block, u(2B) - u(B), peaks at an interior rho.
      double peak = 0.01;
      double best = -1.0;
      for (int i = 1; i <= 98; ++i) {
        const double rho = 0.01 * i;
        const ModelParams q = with_rho(rho);
        const double gain = exit_utility(2 * block, q) - exit_utility(block, q);
        if (gain > best) {
          best = gain;
          peak = rho;
        }
      }
      const double low = 0.01;
      if (!pred(peak) || pred(low)) {
        w.log.push_back(head.str() + ": no bracket for the search-equilibrium boundary in rho");
        continue;
      }
      BisectionRecord rec = bisect("rho", "baseline has a search equilibrium", peak, low, cfg.band, pred);
      const ModelParams p = with_rho(rec.lo);
      InterventionOutcome out = evaluate_education(p, 1, Selection::pareto_best, cfg.options);
      std::ostringstream line;
      line << head.str() << ": rho " << fmt_double(rec.lo) << " baseline N " << out.baseline_trigger
           << " treated N " << out.treated_trigger << " welfare " << to_string(out.sign);
      w.log.push_back(line.str());
      spdlog::info("education witness search: {}", line.str());
      const bool only_no_search = out.treated.equilibria.size() == 1 && best_search_trigger(out.treated) < 0;
      if (best_search_trigger(out.baseline) >= 0 && only_no_search && out.sign == WelfareSign::negative) {
        w.found = true;
        w.block = block;
        w.params = p;
        w.bisection = std::move(rec);
        w.knob_value = 1.0;
        w.no_search_margin = block_no_search_margin(p, block);
        w.outcome = std::move(out);
        return w;
      }
    }
  }
  return w;
}

}  // namespace percolate
