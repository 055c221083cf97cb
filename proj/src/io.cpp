#include "percolate/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace percolate::io {

namespace {

// Non-finite doubles are written as null and read back as NaN.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double get_double(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw ValidationError("expected a number, got " + j.dump());
  return j.get<double>();
}

double get_double(const json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing field: ") + key);
  return get_double(j.at(key));
}

int get_int(const json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing field: ") + key);
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ValidationError(std::string("field must be an integer: ") + key);
  return v.get<int>();
}

json doubles(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::vector<double> get_doubles(const json& j) {
  if (!j.is_array()) throw ValidationError("expected an array of numbers");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(get_double(x));
  return v;
}

std::vector<double> get_doubles(const json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing field: ") + key);
  return get_doubles(j.at(key));
}

json opt_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

std::optional<int> get_opt_int(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get_int(j, key);
}

json interval(const TriggerInterval& t) { return json{{"lo", t.lo}, {"hi", t.hi}}; }

TriggerInterval interval_from(const json& j) { return TriggerInterval{get_int(j, "lo"), get_int(j, "hi")}; }

json opt_interval(const std::optional<TriggerInterval>& t) { return t ? interval(*t) : json(nullptr); }

std::optional<TriggerInterval> get_opt_interval(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return interval_from(j.at(key));
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

ModelParams scenario_from_json(const json& j) {
  return guarded([&] {
    if (!j.is_object()) throw ValidationError("scenario must be a JSON object");
    static const std::set<std::string> known = {"eta",    "eta_prime", "r",       "rho",          "c_lo",
                                                "c_hi",   "cost",      "pi",      "n_max",        "public_signals",
                                                "subsidy", "exit_utility", "name", "description"};
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) throw ValidationError("unknown scenario field: " + key);
    }
    ModelParams p;
    p.eta = get_double(j, "eta");
    p.eta_prime = get_double(j, "eta_prime");
    p.r = get_double(j, "r");
    p.rho = get_double(j, "rho");
    p.c_lo = get_double(j, "c_lo");
    p.c_hi = get_double(j, "c_hi");
    if (!j.contains("cost")) throw ValidationError("missing field: cost");
    const json& cost = j.at("cost");
    const std::string type = cost.at("type").get<std::string>();
    if (type == "linear") {
      p.cost = CostSpec::linear(get_double(cost, "kappa"));
    } else if (type == "tabulated") {
      std::vector<CostNode> nodes;
      for (const auto& node : cost.at("nodes")) {
        if (!node.is_array() || node.size() != 2) throw ValidationError("cost nodes must be [effort, cost] pairs");
        nodes.push_back(CostNode{get_double(node[0]), get_double(node[1])});
      }
      p.cost = CostSpec::tabulated(std::move(nodes));
    } else {
      throw ValidationError("unknown cost type: " + type);
    }
    const int n_max = get_int(j, "n_max");
    const std::vector<double> pi = get_doubles(j, "pi");
    if (pi.empty()) throw ValidationError("pi must not be empty");
    p.pi = PrecisionMeasure(pi, 0.0);
    p.n_max = p.pi.n_max();
    p = with_n_max(std::move(p), n_max);
    p.public_signals = j.contains("public_signals") ? get_int(j, "public_signals") : 0;
    p.subsidy = j.contains("subsidy") ? get_double(j, "subsidy") : 0.0;
    if (j.contains("exit_utility") && !j.at("exit_utility").is_null()) {
      p.exit_utility_table = get_doubles(j, "exit_utility");
    }
    validate(p);
    return p;
  });
}

json to_json(const ModelParams& p) {
  json j;
  j["eta"] = p.eta;
  j["eta_prime"] = p.eta_prime;
  j["r"] = p.r;
  j["rho"] = p.rho;
  j["c_lo"] = p.c_lo;
  j["c_hi"] = p.c_hi;
  if (p.cost.is_linear()) {
    j["cost"] = json{{"type", "linear"}, {"kappa", p.cost.kappa()}};
  } else {
    json nodes = json::array();
    for (const auto& node : p.cost.nodes()) nodes.push_back(json::array({node.effort, node.cost}));
    j["cost"] = json{{"type", "tabulated"}, {"nodes", nodes}};
  }
  // Trailing zeros of pi are implied by n_max.
  std::size_t len = p.pi.weights.size();
  while (len > 1 && p.pi.weights[len - 1] == 0.0) --len;
  j["pi"] = doubles(std::vector<double>(p.pi.weights.begin(), p.pi.weights.begin() + static_cast<long>(len)));
  j["n_max"] = p.n_max;
  j["public_signals"] = p.public_signals;
  j["subsidy"] = p.subsidy;
  if (!p.exit_utility_table.empty()) j["exit_utility"] = doubles(p.exit_utility_table);
  return j;
}

ModelParams read_scenario(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError("cannot parse " + path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

Policy parse_policy(const std::string& spec, const ModelParams& params) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ValidationError("policy must be trigger:N, const:c or list:PATH");
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  auto parse_number = [&](auto& out) {
    const char* end = arg.data() + arg.size();
    auto res = std::from_chars(arg.data(), end, out);
    if (res.ec != std::errc() || res.ptr != end) throw ValidationError("bad policy argument: " + arg);
  };
  if (kind == "trigger") {
    int n = 0;
    parse_number(n);
    return Policy::trigger(n, params.c_lo, params.c_hi, params.n_max);
  }
  if (kind == "const") {
    double c = 0.0;
    parse_number(c);
    if (!(c >= params.c_lo && c <= params.c_hi)) throw ValidationError("constant effort must lie in [c_lo, c_hi]");
    return Policy::constant(c, params.n_max);
  }
  if (kind == "list") {
    json j;
    try {
      j = json::parse(read_file(arg));
    } catch (const json::exception& e) {
      throw ValidationError("cannot parse policy list " + arg + ": " + e.what());
    }
    const std::vector<double> efforts = guarded([&] { return get_doubles(j); });
    for (double c : efforts) {
      if (!(c >= params.c_lo && c <= params.c_hi)) throw ValidationError("policy efforts must lie in [c_lo, c_hi]");
    }
    return Policy::from_list(efforts, params.n_max);
  }
  throw ValidationError("unknown policy kind: " + kind);
}

json to_json(const PrecisionMeasure& m) { return json{{"weights", doubles(m.weights)}, {"tail_mass", num(m.tail_mass)}}; }

PrecisionMeasure measure_from_json(const json& j) {
  return guarded([&] { return PrecisionMeasure(get_doubles(j, "weights"), get_double(j, "tail_mass")); });
}

json to_json(const Policy& p) { return json{{"efforts", doubles(p.efforts())}, {"trigger", opt_int(p.trigger_level())}}; }

Policy policy_from_json(const json& j) {
  return guarded([&] { return Policy::from_efforts(get_doubles(j, "efforts"), get_opt_int(j, "trigger")); });
}

json to_json(const ValueFunction& v) { return json{{"values", doubles(v.values)}, {"tail_value", num(v.tail_value)}}; }

ValueFunction value_from_json(const json& j) {
  return guarded([&] { return ValueFunction{get_doubles(j, "values"), get_double(j, "tail_value")}; });
}

json to_json(const MarketState& s) {
  return json{{"mu", to_json(s.mu)},
              {"policy", to_json(s.policy)},
              {"c_bar", num(s.c_bar)},
              {"residual", num(s.residual)},
              {"mass_conserved", s.mass_conserved}};
}

MarketState market_from_json(const json& j) {
  return guarded([&] {
    MarketState s;
    s.mu = measure_from_json(j.at("mu"));
    s.policy = policy_from_json(j.at("policy"));
    s.c_bar = get_double(j, "c_bar");
    s.residual = get_double(j, "residual");
    s.mass_conserved = j.at("mass_conserved").get<bool>();
    return s;
  });
}

json to_json(const BestResponse& br) {
  return json{{"value", to_json(br.value)},
              {"policy", to_json(br.policy)},
              {"trigger", opt_int(br.trigger)},
              {"trigger_interval", opt_interval(br.trigger_interval)},
              {"gains", doubles(br.gains)},
              {"iterations", br.iterations},
              {"final_sup_change", num(br.final_sup_change)},
              {"contraction_factor", num(br.contraction_factor)},
              {"max_contraction_ratio", num(br.max_contraction_ratio)},
              {"value_monotone", br.value_monotone},
              {"decreasing_difference", br.decreasing_difference},
              {"bang_bang", br.bang_bang},
              {"policy_nonincreasing", br.policy_nonincreasing},
              {"bellman_residual", num(br.bellman_residual)}};
}

BestResponse best_response_from_json(const json& j) {
  return guarded([&] {
    BestResponse br;
    br.value = value_from_json(j.at("value"));
    br.policy = policy_from_json(j.at("policy"));
    br.trigger = get_opt_int(j, "trigger");
    br.trigger_interval = get_opt_interval(j, "trigger_interval");
    br.gains = get_doubles(j, "gains");
    br.iterations = get_int(j, "iterations");
    br.final_sup_change = get_double(j, "final_sup_change");
    br.contraction_factor = get_double(j, "contraction_factor");
    br.max_contraction_ratio = get_double(j, "max_contraction_ratio");
    br.value_monotone = j.at("value_monotone").get<bool>();
    br.decreasing_difference = j.at("decreasing_difference").get<bool>();
    br.bang_bang = j.at("bang_bang").get<bool>();
    br.policy_nonincreasing = j.at("policy_nonincreasing").get<bool>();
    br.bellman_residual = get_double(j, "bellman_residual");
    return br;
  });
}

json to_json(const EquilibriumReport& r) {
  json eqs = json::array();
  for (const auto& e : r.equilibria) {
    eqs.push_back(json{{"n", e.n}, {"state", to_json(e.state)}, {"value", to_json(e.value)}, {"optimal", interval(e.optimal)}});
  }
  json table = json::array();
  for (const auto& row : r.table) {
    table.push_back(json{{"n", row.n},
                         {"lo", row.optimal ? json(row.optimal->lo) : json(nullptr)},
                         {"hi", row.optimal ? json(row.optimal->hi) : json(nullptr)},
                         {"c_bar", num(row.state.c_bar)},
                         {"fixed_point", row.is_fixed_point()}});
  }
  return json{{"equilibria", eqs},
              {"n_bar", r.n_bar},
              {"descent_start", r.descent_start},
              {"first_precision", r.first_precision},
              {"minimal_search",
               {{"benefit", num(r.minimal_search_benefit)},
                {"marginal_cost", num(r.minimal_search_marginal_cost)},
                {"is_equilibrium", r.minimal_search_equilibrium}}},
              {"correspondence_monotone", r.correspondence_monotone},
              {"correspondence_bounded", r.correspondence_bounded},
              {"pareto_order", r.pareto_order},
              {"max_pareto_violation", num(r.max_pareto_violation)},
              {"pareto_consistent", r.pareto_consistent},
              {"table", table}};
}

EquilibriumReport report_from_json(const json& j) {
  return guarded([&] {
    EquilibriumReport r;
    for (const auto& e : j.at("equilibria")) {
      r.equilibria.push_back(Equilibrium{get_int(e, "n"), market_from_json(e.at("state")),
                                         value_from_json(e.at("value")), interval_from(e.at("optimal"))});
    }
    r.n_bar = get_int(j, "n_bar");
    r.descent_start = get_int(j, "descent_start");
    r.first_precision = get_int(j, "first_precision");
    const json& ms = j.at("minimal_search");
    r.minimal_search_benefit = get_double(ms, "benefit");
    r.minimal_search_marginal_cost = get_double(ms, "marginal_cost");
    r.minimal_search_equilibrium = ms.at("is_equilibrium").get<bool>();
    r.correspondence_monotone = j.at("correspondence_monotone").get<bool>();
    r.correspondence_bounded = j.at("correspondence_bounded").get<bool>();
    r.pareto_order = j.at("pareto_order").get<std::vector<int>>();
    r.max_pareto_violation = get_double(j, "max_pareto_violation");
    r.pareto_consistent = j.at("pareto_consistent").get<bool>();
    for (const auto& row : j.at("table")) {
      CorrespondenceEntry entry;
      entry.n = get_int(row, "n");
      entry.state.c_bar = get_double(row, "c_bar");
      if (!row.at("lo").is_null()) entry.optimal = TriggerInterval{get_int(row, "lo"), get_int(row, "hi")};
      r.table.push_back(std::move(entry));
    }
    return r;
  });
}

WelfareSign welfare_sign_from_string(const std::string& s) {
  for (WelfareSign x : {WelfareSign::zero, WelfareSign::positive, WelfareSign::negative, WelfareSign::ambiguous}) {
    if (to_string(x) == s) return x;
  }
  throw ValidationError("unknown welfare sign: " + s);
}

json to_json(const InterventionOutcome& o) {
  return json{{"baseline", to_json(o.baseline)},
              {"treated", to_json(o.treated)},
              {"baseline_trigger", o.baseline_trigger},
              {"treated_trigger", o.treated_trigger},
              {"tax", num(o.tax)},
              {"welfare_delta", doubles(o.welfare_delta)},
              {"sign", to_string(o.sign)},
              {"selection", to_string(o.selection)},
              {"trigger_monotone", o.trigger_monotone}};
}

InterventionOutcome outcome_from_json(const json& j) {
  return guarded([&] {
    InterventionOutcome o;
    o.baseline = report_from_json(j.at("baseline"));
    o.treated = report_from_json(j.at("treated"));
    o.baseline_trigger = get_int(j, "baseline_trigger");
    o.treated_trigger = get_int(j, "treated_trigger");
    o.tax = get_double(j, "tax");
    o.welfare_delta = get_doubles(j, "welfare_delta");
    o.sign = welfare_sign_from_string(j.at("sign").get<std::string>());
    o.selection = selection_from_string(j.at("selection").get<std::string>());
    o.trigger_monotone = j.at("trigger_monotone").get<bool>();
    return o;
  });
}

json to_json(const BisectionRecord& b) {
  json evals = json::array();
  for (const auto& [x, ok] : b.evaluations) evals.push_back(json::array({num(x), ok}));
  return json{{"knob", b.knob},           {"predicate", b.predicate}, {"lo", num(b.lo)},
              {"hi", num(b.hi)},          {"band", num(b.band)},      {"iterations", b.iterations},
              {"evaluations", evals}};
}

BisectionRecord bisection_from_json(const json& j) {
  return guarded([&] {
    BisectionRecord b;
    b.knob = j.at("knob").get<std::string>();
    b.predicate = j.at("predicate").get<std::string>();
    b.lo = get_double(j, "lo");
    b.hi = get_double(j, "hi");
    b.band = get_double(j, "band");
    b.iterations = get_int(j, "iterations");
    for (const auto& e : j.at("evaluations")) b.evaluations.emplace_back(get_double(e.at(0)), e.at(1).get<bool>());
    return b;
  });
}

json to_json(const Witness& w) {
  json j{{"found", w.found}, {"log", w.log}};
  if (!w.found) return j;
  j["block"] = w.block;
  j["params"] = to_json(w.params);
  j["bisection"] = to_json(w.bisection);
  j["knob_value"] = num(w.knob_value);
  j["no_search_margin"] = num(w.no_search_margin);
  j["outcome"] = to_json(w.outcome);
  return j;
}

Witness witness_from_json(const json& j) {
  return guarded([&] {
    Witness w;
    w.found = j.at("found").get<bool>();
    w.log = j.at("log").get<std::vector<std::string>>();
    if (!w.found) return w;
    w.block = get_int(j, "block");
    w.params = scenario_from_json(j.at("params"));
    w.bisection = bisection_from_json(j.at("bisection"));
    w.knob_value = get_double(j, "knob_value");
    w.no_search_margin = get_double(j, "no_search_margin");
    w.outcome = outcome_from_json(j.at("outcome"));
    return w;
  });
}

std::string to_string(FosdRelation r) {
  switch (r) {
    case FosdRelation::kEqual: return "equal";
    case FosdRelation::kFirstDominates: return "first_dominates";
    case FosdRelation::kSecondDominates: return "second_dominates";
    case FosdRelation::kCrossing: return "crossing";
  }
  return "?";
}

FosdRelation fosd_relation_from_string(const std::string& s) {
  for (FosdRelation x : {FosdRelation::kEqual, FosdRelation::kFirstDominates, FosdRelation::kSecondDominates,
                         FosdRelation::kCrossing}) {
    if (to_string(x) == s) return x;
  }
  throw ValidationError("unknown dominance relation: " + s);
}

json to_json(const FosdReport& r) {
  return json{{"relation", to_string(r.relation)},
              {"first_violation_a_over_b", r.first_violation_a_over_b},
              {"first_violation_b_over_a", r.first_violation_b_over_a},
              {"max_shortfall_a", num(r.max_shortfall_a)},
              {"max_shortfall_b", num(r.max_shortfall_b)}};
}

FosdReport fosd_from_json(const json& j) {
  return guarded([&] {
    FosdReport r;
    r.relation = fosd_relation_from_string(j.at("relation").get<std::string>());
    r.first_violation_a_over_b = get_int(j, "first_violation_a_over_b");
    r.first_violation_b_over_a = get_int(j, "first_violation_b_over_a");
    r.max_shortfall_a = get_double(j, "max_shortfall_a");
    r.max_shortfall_b = get_double(j, "max_shortfall_b");
    return r;
  });
}

json to_json(const CounterexampleReport& r) {
  return json{{"c2", num(r.c2)},
              {"epsilon", num(r.epsilon)},
              {"flow", num(r.flow)},
              {"derivative", num(r.derivative)},
              {"c_bar", num(r.c_bar)},
              {"c_bar_reduced", num(r.c_bar_reduced)},
              {"raw", to_json(r.raw)},
              {"jump_law", to_json(r.jump_law)}};
}

CounterexampleReport counterexample_from_json(const json& j) {
  return guarded([&] {
    CounterexampleReport r;
    r.c2 = get_double(j, "c2");
    r.epsilon = get_double(j, "epsilon");
    r.flow = get_double(j, "flow");
    r.derivative = get_double(j, "derivative");
    r.c_bar = get_double(j, "c_bar");
    r.c_bar_reduced = get_double(j, "c_bar_reduced");
    r.raw = fosd_from_json(j.at("raw"));
    r.jump_law = fosd_from_json(j.at("jump_law"));
    return r;
  });
}

SimConfig sim_config_from_json(const json& j) {
  return guarded([&] {
    if (!j.is_object()) throw ValidationError("simulation config must be a JSON object");
    static const std::set<std::string> known = {"population", "horizon", "seed", "record_grid", "y"};
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) throw ValidationError("unknown simulation field: " + key);
    }
    SimConfig c;
    if (j.contains("population")) c.population = get_int(j, "population");
    if (j.contains("horizon")) c.horizon = get_double(j, "horizon");
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw ValidationError("seed must be a nonnegative integer");
      c.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("record_grid")) c.record_grid = get_double(j, "record_grid");
    if (j.contains("y") && !j.at("y").is_null()) c.y_realization = get_double(j, "y");
    return c;
  });
}

json to_json(const SimConfig& c) {
  return json{{"population", c.population},
              {"horizon", c.horizon},
              {"seed", c.seed},
              {"record_grid", c.record_grid},
              {"y", c.y_realization ? json(*c.y_realization) : json(nullptr)}};
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
  os << "t,n,mu_n,mass\n";
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    const PrecisionMeasure& m = t.measures[i];
    const std::string ts = format_double(t.times[i]);
    const std::string mass = format_double(t.mass_series[i]);
    for (int n = 0; n <= m.n_max(); ++n) os << ts << ',' << n << ',' << format_double(m[n]) << ',' << mass << '\n';
  }
}

void write_snapshots_csv(std::ostream& os, const SimOutput& out) {
  os << "t,n,count,mean_x,var_x\n";
  for (const auto& snap : out.snapshots) {
    const std::string ts = format_double(snap.t);
    for (const auto& b : snap.bins) {
      if (b.count == 0) continue;
      os << ts << ',' << b.n << ',' << b.count << ',' << format_double(b.mean_x) << ',' << format_double(b.var_x)
         << '\n';
    }
  }
}

void write_value_csv(std::ostream& os, int entry_precision, const ValueEstimate& v) {
  os << "entry_precision,mean,half_width,lifetimes\n";
  os << entry_precision << ',' << format_double(v.mean) << ',' << format_double(v.half_width) << ',' << v.lifetimes
     << '\n';
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

json to_json(const RunManifest& m) {
  return json{{"command_line", m.command_line},
              {"config_hash", m.config_hash},
              {"seed", m.seed ? json(*m.seed) : json(nullptr)},
              {"version", m.version},
              {"wall_time_seconds", num(m.wall_time_seconds)},
              {"outputs", m.outputs}};
}

RunManifest manifest_from_json(const json& j) {
  return guarded([&] {
    RunManifest m;
    m.command_line = j.at("command_line").get<std::vector<std::string>>();
    m.config_hash = j.at("config_hash").get<std::string>();
    if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
    m.version = j.at("version").get<std::string>();
    m.wall_time_seconds = get_double(j, "wall_time_seconds");
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    return m;
  });
}

std::filesystem::path manifest_path(const std::filesystem::path& out) {
  std::filesystem::path p = out;
  p += ".manifest.json";
  return p;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace percolate::io
