#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "cli.hpp"
#include "percolate/io.hpp"
#include "support/oracles.hpp"

namespace percolate {
namespace {

namespace fs = std::filesystem;
using io::json;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("percolate_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ModelParams p = testing::make_params({0.0, 0.25, 0.25, 0.25, 0.25}, 64);
    p.cost = CostSpec::linear(0.02);
    scenario_ = write("scenario.json", io::to_json(p).dump());
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    io::write_file(path(name), text);
    return path(name);
  }

  static int call(std::vector<std::string> args) {
    args.insert(args.begin(), "percolate");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::dispatch(static_cast<int>(argv.size()), argv.data());
  }

  fs::path dir_;
  std::string scenario_;
};

TEST_F(Cli, UsageAndValidationErrorsExitTwo) {
  EXPECT_EQ(call({}), 2);
  EXPECT_EQ(call({"frobnicate"}), 2);
  EXPECT_EQ(call({"solve-stationary", "--config", scenario_, "--policy", "trigger:2", "--bogus"}), 2);
  EXPECT_EQ(call({"solve-stationary", "--policy", "trigger:2"}), 2);
  EXPECT_EQ(call({"solve-stationary", "--config", path("missing.json"), "--policy", "trigger:2"}), 2);
  EXPECT_EQ(call({"solve-stationary", "--config", scenario_, "--policy", "trigger:two"}), 2);
  EXPECT_EQ(call({"solve-equilibrium", "--config", write("bad.json", "{\"eta\": 1")}), 2);
  EXPECT_EQ(call({"intervention", "subsidy", "--config", scenario_, "--delta", "0.5"}), 2);
  EXPECT_EQ(call({"sweep", "--config", scenario_, "--grid", write("g.json", "{\"axes\": {\"mu\": [1]}}")}), 2);
  EXPECT_EQ(call({"best-response", "--config", scenario_}), 2);
}

TEST_F(Cli, SolverFailureExitsThree) {
  EXPECT_EQ(call({"solve-stationary", "--config", scenario_, "--policy", "trigger:3", "--tol", "1e-300"}), 3);
}

TEST_F(Cli, NoSearchEchoesEntryDistribution) {
  ASSERT_EQ(call({"solve-stationary", "--config", scenario_, "--policy", "const:0", "--out", path("s.json")}), 0);
  const json j = json::parse(io::read_file(path("s.json")));
  const ModelParams p = io::read_scenario(scenario_);
  const MarketState s = io::market_from_json(j);
  for (int n = 0; n <= p.n_max; ++n) EXPECT_NEAR(s.mu[n], p.pi[n], 1e-15) << n;
  EXPECT_EQ(s.c_bar, 0.0);
  EXPECT_EQ(j["manifest"], "s.json.manifest.json");
  const io::RunManifest m = io::manifest_from_json(json::parse(io::read_file(path("s.json.manifest.json"))));
  EXPECT_EQ(m.outputs, std::vector<std::string>{path("s.json")});
  EXPECT_EQ(m.config_hash, io::fnv1a_hex(io::to_json(p).dump()));
}

TEST_F(Cli, CounterexampleReportsNegativeDerivative) {
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(call({"counterexample", "--out", path("ce.json")}), 0);
  const std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("(negative)"), std::string::npos) << out;
  EXPECT_LT(json::parse(io::read_file(path("ce.json")))["derivative"].get<double>(), 0.0);
}

TEST_F(Cli, PipelineFromStationaryToBestResponse) {
  ASSERT_EQ(call({"solve-stationary", "--config", scenario_, "--policy", "trigger:5", "--out", path("m.json")}), 0);
  ASSERT_EQ(call({"best-response", "--config", scenario_, "--market", path("m.json"), "--out", path("br.json")}), 0);
  const json j = json::parse(io::read_file(path("br.json")));
  EXPECT_TRUE(j["best_response"]["trigger"].is_number_integer());
  EXPECT_TRUE(j["n_bar"].is_number_integer());
  EXPECT_TRUE(j["minimal_search"]["benefit"].is_number());
  ASSERT_EQ(call({"solve-equilibrium", "--config", scenario_, "--n-max", "48", "--out", path("eq.json")}), 0);
  const EquilibriumReport r = io::report_from_json(json::parse(io::read_file(path("eq.json"))));
  EXPECT_FALSE(r.equilibria.empty());
  EXPECT_EQ(r.equilibria.front().value.n_max(), 48);
}

TEST_F(Cli, RepeatedRunsAreBitIdentical) {
  const std::string sim = write("sim.json", R"({"population": 2000, "horizon": 5, "seed": 9, "record_grid": 1})");
  const std::string grid = write("grid.json", R"({"task": "equilibrium", "axes": {"rho": [0.3, 0.6], "kappa": [0.01, 0.05]}})");
  const std::vector<std::vector<std::string>> commands = {
      {"solve-equilibrium", "--config", scenario_},
      {"simulate-dynamics", "--config", scenario_, "--policy", "trigger:4", "--t-end", "3"},
      {"montecarlo", "run", "--config", scenario_, "--policy", "trigger:4", "--sim", sim},
      {"montecarlo", "value", "--config", scenario_, "--policy", "trigger:4", "--sim", sim, "--seed", "3"},
      {"intervention", "educate", "--config", scenario_, "--signals", "1"},
      {"sweep", "--config", scenario_, "--grid", grid},
  };
  for (std::size_t i = 0; i < commands.size(); ++i) {
    std::vector<std::string> first = commands[i];
    std::vector<std::string> second = commands[i];
    first.insert(first.end(), {"--out", path("a" + std::to_string(i))});
    second.insert(second.end(), {"--out", path("b" + std::to_string(i))});
    ASSERT_EQ(call(first), 0) << commands[i][0];
    ASSERT_EQ(call(second), 0) << commands[i][0];
    std::string a = io::read_file(path("a" + std::to_string(i)));
    std::string b = io::read_file(path("b" + std::to_string(i)));
    // JSON outputs name their own manifest, which differs only by the output name.
    const std::string ma = "a" + std::to_string(i) + ".manifest.json";
    const std::string mb = "b" + std::to_string(i) + ".manifest.json";
    if (const auto at = a.find(ma); at != std::string::npos) a.replace(at, ma.size(), mb);
    EXPECT_EQ(a, b) << commands[i][0];
    EXPECT_FALSE(a.empty());
  }
}

TEST_F(Cli, SweepMergeIsIndependentOfWorkerCount) {
  const std::string grid = write("grid.json", R"({"task": "stationary", "policy": "trigger:3", "axes": {"eta": [0.5, 1, 2], "rho": [0.3, 0.8]}})");
  ::setenv("PERCOLATE_THREADS", "1", 1);
  ASSERT_EQ(call({"sweep", "--config", scenario_, "--grid", grid, "--out", path("one.csv")}), 0);
  ::setenv("PERCOLATE_THREADS", "4", 1);
  ASSERT_EQ(call({"sweep", "--config", scenario_, "--grid", grid, "--out", path("four.csv")}), 0);
  ::setenv("PERCOLATE_THREADS", "zero", 1);
  EXPECT_EQ(call({"sweep", "--config", scenario_, "--grid", grid}), 2);
  ::unsetenv("PERCOLATE_THREADS");
  const std::string one = io::read_file(path("one.csv"));
  EXPECT_EQ(one, io::read_file(path("four.csv")));
  EXPECT_EQ(one.substr(0, one.find('\n')), "scenario,eta,rho,c_bar,residual,window_mass,tail_mass,status");
  EXPECT_EQ(std::count(one.begin(), one.end(), '\n'), 7);
}

}  // namespace
}  // namespace percolate
