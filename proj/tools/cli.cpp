#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "percolate/best_response.hpp"
#include "percolate/dynamics.hpp"
#include "percolate/equilibrium.hpp"
#include "percolate/interventions.hpp"
#include "percolate/io.hpp"
#include "percolate/simulator.hpp"
#include "percolate/stationary.hpp"

#ifndef PERCOLATE_VERSION
#define PERCOLATE_VERSION "0.0.0"
#endif

namespace percolate::cli {

namespace {

using io::json;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_max;
  std::optional<double> tol;
  std::string policy;
};

void add_common(CLI::App* sub, Common& c, bool config_required = true, bool with_policy = false) {
  auto* opt = sub->add_option("--config", c.config, "scenario JSON file");
  if (config_required) opt->required();
  sub->add_option("--out", c.out, "output file (stdout when omitted)");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--n-max", c.n_max, "override the precision window")->check(CLI::PositiveNumber);
  sub->add_option("--tol", c.tol, "override the residual and value tolerances")->check(CLI::PositiveNumber);
  if (with_policy) sub->add_option("--policy", c.policy, "trigger:N, const:c or list:PATH")->required();
}

ModelParams load_params(const Common& c) {
  ModelParams p = io::read_scenario(c.config);
  if (c.n_max) {
    p = with_n_max(std::move(p), *c.n_max);
    validate(p);
  }
  return p;
}

SolverConfig solver_config(const Common& c) {
  SolverConfig s;
  if (c.tol) {
    s.residual_tol = *c.tol;
    s.value_tol = *c.tol;
  }
  return s;
}

class Run {
 public:
  Run(std::vector<std::string> argv, const Common& common) : argv_(std::move(argv)), common_(common) {}

  void set_config_hash(const ModelParams& p) { hash_ = io::fnv1a_hex(io::to_json(p).dump()); }

  // JSON outputs carry the name of their manifest sidecar.
  void emit_json(json result) {
    if (common_.out.empty()) {
      std::cout << result.dump(2) << '\n';
      return;
    }
    result["manifest"] = io::manifest_path(common_.out).filename().string();
    io::write_file(common_.out, result.dump(2) + "\n");
    finish();
  }

  void emit_text(const std::string& text) {
    if (common_.out.empty()) {
      std::cout << text;
      return;
    }
    io::write_file(common_.out, text);
    finish();
  }

 private:
  void finish() {
    io::RunManifest m;
    m.command_line = argv_;
    m.config_hash = hash_;
    m.seed = common_.seed;
    m.version = PERCOLATE_VERSION;
    m.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m.outputs = {common_.out};
    io::write_file(io::manifest_path(common_.out), io::to_json(m).dump(2) + "\n");
  }

  std::vector<std::string> argv_;
  const Common& common_;
  std::string hash_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json parse_json_file(const std::string& path) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("cannot parse " + path + ": " + e.what());
  }
}

PrecisionMeasure initial_measure(const std::string& spec, const ModelParams& p) {
  if (spec == "pi") return p.pi;
  if (spec.rfind("point:", 0) == 0) {
    int k = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(spec.substr(6), &used);
      if (used != spec.size() - 6) throw std::invalid_argument(spec);
    } catch (const std::exception&) {
      throw ValidationError("bad initial point mass: " + spec);
    }
    if (k < 0 || k > p.n_max) throw ValidationError("initial point mass must lie in 0..n_max");
    PrecisionMeasure m(p.n_max);
    m[k] = 1.0;
    return m;
  }
  if (spec.rfind("state:", 0) == 0) {
    PrecisionMeasure m = io::market_from_json(parse_json_file(spec.substr(6))).mu;
    if (m.n_max() != p.n_max) throw ValidationError("initial state and scenario n_max differ");
    return m;
  }
  throw ValidationError("initial measure must be pi, point:K or state:PATH");
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

// Scalar scenario fields a sweep may vary.
void set_axis(ModelParams& p, const std::string& key, double v) {
  if (key == "eta") p.eta = v;
  else if (key == "eta_prime") p.eta_prime = v;
  else if (key == "r") p.r = v;
  else if (key == "rho") p.rho = v;
  else if (key == "c_lo") p.c_lo = v;
  else if (key == "c_hi") p.c_hi = v;
  else if (key == "kappa") p.cost = CostSpec::linear(v);
  else if (key == "subsidy") p.subsidy = v;
  else if (key == "public_signals") {
    if (v != static_cast<int>(v)) throw ValidationError("public_signals must be an integer");
    p.public_signals = static_cast<int>(v);
  } else {
    throw ValidationError("unknown sweep axis: " + key);
  }
}

unsigned worker_count(std::size_t tasks) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PERCOLATE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ValidationError("PERCOLATE_THREADS must be a positive integer");
    n = std::min(n, static_cast<unsigned>(v));
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(tasks, 1)));
}

std::string sweep_csv(const ModelParams& base, const json& grid, const SolverConfig& solver) {
  const std::string task = grid.value("task", "equilibrium");
  if (task != "equilibrium" && task != "stationary") throw ValidationError("sweep task must be equilibrium or stationary");
  if (!grid.contains("axes") || !grid.at("axes").is_object() || grid.at("axes").empty()) {
    throw ValidationError("sweep grid needs a non-empty axes object");
  }
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  for (const auto& [key, arr] : grid.at("axes").items()) {
    names.push_back(key);
    if (!arr.is_array() || arr.empty()) throw ValidationError("sweep axis must be a non-empty array: " + key);
    std::vector<double> v;
    for (const auto& x : arr) {
      if (!x.is_number()) throw ValidationError("sweep axis values must be numbers: " + key);
      v.push_back(x.get<double>());
    }
    ModelParams probe = base;
    set_axis(probe, key, v.front());
    values.push_back(std::move(v));
  }
  std::optional<std::string> policy_spec;
  if (task == "stationary") {
    if (!grid.contains("policy")) throw ValidationError("stationary sweep needs a policy");
    policy_spec = grid.at("policy").get<std::string>();
  }

  std::vector<std::vector<double>> points{{}};
  for (const auto& axis : values) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : points) {
      for (double x : axis) {
        auto row = prefix;
        row.push_back(x);
        next.push_back(std::move(row));
      }
    }
    points = std::move(next);
  }

  auto run_point = [&](std::size_t idx) {
    std::ostringstream rows;
    std::ostringstream prefix;
    prefix << idx;
    for (double x : points[idx]) prefix << ',' << io::format_double(x);
    try {
      ModelParams p = base;
      for (std::size_t a = 0; a < names.size(); ++a) set_axis(p, names[a], points[idx][a]);
      validate(p);
      if (task == "stationary") {
        const MarketState s = solve_stationary(io::parse_policy(*policy_spec, p), p, solver);
        rows << prefix.str() << ',' << io::format_double(s.c_bar) << ',' << io::format_double(s.residual) << ','
             << io::format_double(s.mu.window_mass()) << ',' << io::format_double(s.mu.tail_mass) << ",ok\n";
      } else {
        EquilibriumOptions options;
        options.solver = solver;
        const EquilibriumReport r = find_equilibria(p, options);
        for (const auto& e : r.equilibria) {
          double entry_value = 0.0;
          for (int n = 0; n <= p.n_max; ++n) entry_value += p.pi[n] * e.value[n];
          int rank = -1;
          for (std::size_t k = 0; k < r.pareto_order.size(); ++k) {
            if (r.pareto_order[k] == e.n) rank = static_cast<int>(k);
          }
          rows << prefix.str() << ',' << r.n_bar << ',' << e.n << ',' << io::format_double(e.state.c_bar) << ','
               << (rank < 0 ? std::string() : std::to_string(rank)) << ',' << io::format_double(entry_value)
               << ",ok\n";
        }
      }
    } catch (const std::exception& ex) {
      const int blanks = task == "stationary" ? 4 : 5;
      rows << prefix.str() << std::string(static_cast<std::size_t>(blanks), ',') << ',' << csv_quote(ex.what())
           << '\n';
    }
    return rows.str();
  };

  std::vector<std::string> results(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) results[i] = run_point(i);
  };
  const unsigned threads = worker_count(points.size());
  spdlog::info("sweep: {} scenarios on {} workers", points.size(), threads);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::ostringstream csv;
  csv << "scenario";
  for (const auto& n : names) csv << ',' << n;
  if (task == "stationary") {
    csv << ",c_bar,residual,window_mass,tail_mass,status\n";
  } else {
    csv << ",n_bar,equilibrium,c_bar,pareto_rank,entry_value,status\n";
  }
  for (const auto& r : results) csv << r;
  return csv.str();
}

ModelParams counterexample_scenario() {
  ModelParams p;
  p.n_max = 16;
  p.pi = PrecisionMeasure(p.n_max);
  p.pi[1] = 0.2;
  p.pi[2] = 0.6;
  p.pi[3] = 0.2;
  validate(p);
  return p;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Information percolation in a search market: stationary measures, best responses, equilibria"};
  app.set_version_flag("--version", std::string(PERCOLATE_VERSION));
  app.require_subcommand(1);

  Common c;

  auto* stationary = app.add_subcommand("solve-stationary", "stationary cross-section of a policy");
  add_common(stationary, c, true, true);

  double t_end = 0.0;
  double dt_out = 1.0;
  std::string init = "pi";
  auto* dynamics = app.add_subcommand("simulate-dynamics", "integrate the cross-section forward in time (CSV)");
  add_common(dynamics, c, true, true);
  dynamics->add_option("--t-end", t_end, "horizon (default 50/eta)")->check(CLI::PositiveNumber);
  dynamics->add_option("--dt-out", dt_out, "snapshot spacing")->check(CLI::PositiveNumber);
  dynamics->add_option("--init", init, "pi, point:K or state:PATH");

  std::string market_path;
  auto* best = app.add_subcommand("best-response", "optimal search policy against a market");
  add_common(best, c);
  auto* market_opt = best->add_option("--market", market_path, "market JSON written by solve-stationary");
  best->add_option("--policy", c.policy, "solve the market of this policy instead")->excludes(market_opt);

  bool allow_nonlinear = false;
  auto* equilibrium = app.add_subcommand("solve-equilibrium", "all symmetric trigger equilibria");
  add_common(equilibrium, c);
  equilibrium->add_flag("--allow-nonlinear-cost", allow_nonlinear, "search trigger equilibria under a tabulated cost");

  auto* intervention = app.add_subcommand("intervention", "search subsidies and public education");
  intervention->require_subcommand(1);
  double delta = 0.0;
  int signals = 1;
  std::string selection = "pareto_best";
  auto* subsidy = intervention->add_subcommand("subsidy", "subsidise search by delta, financed by an entry tax");
  add_common(subsidy, c);
  subsidy->add_option("--delta", delta, "subsidy per unit of effort")->required();
  subsidy->add_option("--selection", selection, "pareto_best, pareto_worst, matched_up or matched_down");
  auto* educate = intervention->add_subcommand("educate", "give every entrant public signals");
  add_common(educate, c);
  educate->add_option("--signals", signals, "number of public signals")->check(CLI::NonNegativeNumber);
  educate->add_option("--selection", selection, "pareto_best, pareto_worst, matched_up or matched_down");
  std::string witness_kind;
  auto* witness = intervention->add_subcommand("witness", "search for a scenario where the intervention bites");
  add_common(witness, c, false);
  witness->add_option("kind", witness_kind, "subsidy or education")
      ->required()
      ->check(CLI::IsMember({"subsidy", "education"}));

  auto* montecarlo = app.add_subcommand("montecarlo", "finite-population simulation");
  montecarlo->require_subcommand(1);
  std::string sim_path;
  std::string market_policy;
  int entry = 1;
  auto* mc_run = montecarlo->add_subcommand("run", "simulate the population; CSV of per-bin snapshots");
  add_common(mc_run, c, true, true);
  mc_run->add_option("--sim", sim_path, "simulation config JSON");
  auto* mc_value = montecarlo->add_subcommand("value", "Monte Carlo lifetime utility of one agent");
  add_common(mc_value, c, true, true);
  mc_value->add_option("--sim", sim_path, "simulation config JSON");
  mc_value->add_option("--market-policy", market_policy, "policy of everybody else (default: --policy)");
  mc_value->add_option("--entry", entry, "precision at entry")->check(CLI::NonNegativeNumber);

  double c2 = 1.0;
  double epsilon = 1e-3;
  auto* counter = app.add_subcommand("counterexample", "lower effort at precision 1 and watch precision-2 flow rise");
  add_common(counter, c, false);
  counter->add_option("--c2", c2, "effort at precision 2")->check(CLI::PositiveNumber);
  counter->add_option("--epsilon", epsilon, "effort reduction at precision 1")->check(CLI::PositiveNumber);

  std::string grid_path;
  auto* sweep = app.add_subcommand("sweep", "solve a parameter grid concurrently (CSV)");
  add_common(sweep, c);
  sweep->add_option("--grid", grid_path, "grid JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  Run run(args, c);
  try {
    const SolverConfig solver = solver_config(c);
    if (*stationary) {
      const ModelParams p = load_params(c);
      run.set_config_hash(p);
      run.emit_json(io::to_json(solve_stationary(io::parse_policy(c.policy, p), p, solver)));
    } else if (*dynamics) {
      const ModelParams p = load_params(c);
      run.set_config_hash(p);
      const double horizon = t_end > 0.0 ? t_end : 50.0 / p.eta;
      const Trajectory t = integrate(initial_measure(init, p), io::parse_policy(c.policy, p), p, horizon, dt_out, solver);
      std::ostringstream csv;
      io::write_trajectory_csv(csv, t);
      run.emit_text(csv.str());
    } else if (*best) {
      const ModelParams p = load_params(c);
      run.set_config_hash(p);
      MarketState market;
      if (!market_path.empty()) {
        market = io::market_from_json(parse_json_file(market_path));
        if (market.mu.n_max() != p.n_max) throw ValidationError("market and scenario n_max differ");
      } else if (!c.policy.empty()) {
        market = solve_stationary(io::parse_policy(c.policy, p), p, solver);
      } else {
        throw ValidationError("best-response needs --market or --policy");
      }
      const BestResponse br = solve_value(market, p, solver);
      const MinimalSearchResult ms = minimal_search_test(p, solver);
      run.emit_json(json{{"best_response", io::to_json(br)},
                         {"n_bar", n_bar(p)},
                         {"minimal_search",
                          {{"benefit", ms.benefit},
                           {"marginal_cost", ms.marginal_cost},
                           {"is_equilibrium", ms.is_equilibrium}}}});
    } else if (*equilibrium) {
      const ModelParams p = load_params(c);
      run.set_config_hash(p);
      EquilibriumOptions options;
      options.solver = solver;
      options.allow_nonlinear_cost = allow_nonlinear;
      const EquilibriumReport r = find_equilibria(p, options);
      for (const auto& e : r.equilibria) {
        std::cerr << "equilibrium N=" << e.n << " C_bar=" << io::format_double(e.state.c_bar) << '\n';
      }
      std::cerr << "pareto order:";
      for (int n : r.pareto_order) std::cerr << ' ' << n;
      std::cerr << (r.pareto_consistent ? "\n" : " (inconsistent)\n");
      run.emit_json(io::to_json(r));
    } else if (*subsidy || *educate) {
      const ModelParams p = load_params(c);
      run.set_config_hash(p);
      EquilibriumOptions options;
      options.solver = solver;
      const Selection sel = selection_from_string(selection);
      const InterventionOutcome o =
          *subsidy ? evaluate_subsidy(p, delta, sel, options) : evaluate_education(p, signals, sel, options);
      std::cerr << "trigger " << o.baseline_trigger << " -> " << o.treated_trigger << ", welfare "
                << to_string(o.sign) << '\n';
      run.emit_json(io::to_json(o));
    } else if (*witness) {
      WitnessSearchConfig cfg;
      cfg.options.solver = solver;
      if (c.n_max) cfg.n_max = *c.n_max;
      const Witness w = witness_kind == "subsidy" ? find_subsidy_witness(cfg) : find_education_witness(cfg);
      if (w.found) run.set_config_hash(w.params);
      std::cerr << (w.found ? "witness found" : "no witness found") << '\n';
      run.emit_json(io::to_json(w));
      if (!w.found) return 3;
    } else if (*mc_run || *mc_value) {
      const ModelParams p = load_params(c);
      run.set_config_hash(p);
      SimConfig sim = sim_path.empty() ? SimConfig{} : io::sim_config_from_json(parse_json_file(sim_path));
      if (c.seed) sim.seed = *c.seed;
      const Policy policy = io::parse_policy(c.policy, p);
      std::ostringstream csv;
      if (*mc_run) {
        io::write_snapshots_csv(csv, percolate::run(policy, p, sim));
      } else {
        const Policy market = market_policy.empty() ? policy : io::parse_policy(market_policy, p);
        io::write_value_csv(csv, entry, estimate_value(policy, market, p, sim, entry));
      }
      run.emit_text(csv.str());
    } else if (*counter) {
      const ModelParams p = c.config.empty() ? counterexample_scenario() : load_params(c);
      run.set_config_hash(p);
      const CounterexampleReport r = effort_counterexample(p, c2, epsilon, solver);
      std::cout << "d(C2 mu2)/dC1 = " << io::format_double(r.derivative) << " ("
                << (r.derivative < 0.0 ? "negative" : r.derivative > 0.0 ? "positive" : "zero") << ")\n";
      if (!c.out.empty()) run.emit_json(io::to_json(r));
    } else if (*sweep) {
      const ModelParams p = load_params(c);
      run.set_config_hash(p);
      run.emit_text(sweep_csv(p, parse_json_file(grid_path), solver));
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << '\n';
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace percolate::cli
