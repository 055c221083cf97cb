#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "percolate/best_response.hpp"
#include "percolate/dynamics.hpp"
#include "percolate/equilibrium.hpp"
#include "percolate/interventions.hpp"
#include "percolate/model.hpp"
#include "percolate/simulator.hpp"
#include "percolate/stationary.hpp"

namespace percolate::io {

using json = nlohmann::json;

// Scenario files mirror ModelParams field for field.  pi lists weights from
// precision 0; cost is {"type": "linear", "kappa": k} or
// {"type": "tabulated", "nodes": [[c, K(c)], ...]}; exit_utility is optional.
ModelParams scenario_from_json(const json& j);
json to_json(const ModelParams& p);
ModelParams read_scenario(const std::filesystem::path& path);

/// trigger:N, const:c or list:PATH (a JSON array of efforts from precision 1).
Policy parse_policy(const std::string& spec, const ModelParams& params);

json to_json(const PrecisionMeasure& m);
PrecisionMeasure measure_from_json(const json& j);
json to_json(const Policy& p);
Policy policy_from_json(const json& j);
json to_json(const ValueFunction& v);
ValueFunction value_from_json(const json& j);

json to_json(const MarketState& s);
MarketState market_from_json(const json& j);

json to_json(const BestResponse& br);
BestResponse best_response_from_json(const json& j);

/// Equilibria in full; correspondence rows as {n, lo, hi, c_bar}.
json to_json(const EquilibriumReport& r);
EquilibriumReport report_from_json(const json& j);

json to_json(const InterventionOutcome& o);
InterventionOutcome outcome_from_json(const json& j);

json to_json(const BisectionRecord& b);
BisectionRecord bisection_from_json(const json& j);
json to_json(const Witness& w);
Witness witness_from_json(const json& j);

json to_json(const FosdReport& r);
FosdReport fosd_from_json(const json& j);
json to_json(const CounterexampleReport& r);
CounterexampleReport counterexample_from_json(const json& j);

SimConfig sim_config_from_json(const json& j);
json to_json(const SimConfig& c);

std::string to_string(FosdRelation r);
FosdRelation fosd_relation_from_string(const std::string& s);
WelfareSign welfare_sign_from_string(const std::string& s);

// CSV writers (RFC 4180, header row, '\n' line ends, shortest round-trip doubles).
void write_trajectory_csv(std::ostream& os, const Trajectory& t);
void write_snapshots_csv(std::ostream& os, const SimOutput& out);
void write_value_csv(std::ostream& os, int entry_precision, const ValueEstimate& v);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

/// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

struct RunManifest {
  std::vector<std::string> command_line;
  std::string config_hash;  ///< FNV-1a of the canonical scenario JSON
  std::optional<std::uint64_t> seed;
  std::string version;
  double wall_time_seconds = 0.0;
  std::vector<std::string> outputs;
};
json to_json(const RunManifest& m);
RunManifest manifest_from_json(const json& j);
/// Sidecar path of an output file: "<out>.manifest.json".
std::filesystem::path manifest_path(const std::filesystem::path& out);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace percolate::io
