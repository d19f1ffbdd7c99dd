// Apache License, Version 2.0, refer to LICENSE.txt
#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "stickflow/cli.hpp"

using namespace stickflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("stickflow-test-" + std::to_string(::getpid()) + "-" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

fs::path write_config(const TempDir& dir, const std::string& name, const json& j) {
  const fs::path p = dir.path / name;
  std::ofstream out(p);
  out << j.dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json simulate_config() {
  return json{{"command", "simulate"},
              {"params",
               {{"G", {{-1.0, 1.0}, {2.0, -2.0}}}, {"M", 2}, {"pi", {1.0, 0.0}}, {"n", 200}}},
              {"seed", 7},
              {"out_dir", "unused"}};
}

}  // namespace

TEST_CASE("minimal simulate config loads") {
  TempDir dir;
  const auto path = write_config(dir, "cfg.json", simulate_config());
  const auto cfg = load_config(path);
  CHECK(cfg.command == Command::Simulate);
  CHECK(cfg.seed == 7);
  CHECK(cfg.seed_from_config);
  CHECK(cfg.out_dir == "unused");
}

TEST_CASE("missing required field reports its path") {
  TempDir dir;
  json j = simulate_config();
  j["params"].erase("G");
  const auto path = write_config(dir, "cfg.json", j);
  try {
    load_config(path);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field_path() == "params.G");
  }
}

TEST_CASE("unknown keys are rejected everywhere") {
  TempDir dir;
  json top = simulate_config();
  top["Q_matrix"] = 1;
  CHECK_THROWS_AS(load_config(write_config(dir, "a.json", top)), ConfigError);

  json nested = simulate_config();
  nested["params"]["Q_matrix"] = 1;
  try {
    load_config(write_config(dir, "b.json", nested));
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field_path() == "params.Q_matrix");
  }
}

TEST_CASE("malformed json reports a parse error") {
  TempDir dir;
  const fs::path p = dir.path / "broken.json";
  std::ofstream(p) << "{ \"command\": ";
  try {
    load_config(p);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("parse error") != std::string::npos);
  }
}

TEST_CASE("invalid generator entries point at params.G") {
  TempDir dir;
  json j = simulate_config();
  j["params"]["G"] = {{-1.0, 2.0}, {-1.0, 1.0}};
  const auto cfg = load_config(write_config(dir, "cfg.json", j));
  RunOptions opt;
  std::ostringstream log;
  TempDir out;
  RunConfig patched = cfg;
  patched.out_dir = (out.path / "run").string();
  CHECK_THROWS_AS(run_command(patched, opt, log), ConfigError);
}

TEST_CASE("moments run writes the expected row") {
  TempDir dir;
  json j{{"command", "moments"},
         {"params", {{"G", {{-1.0, 1.0}, {2.0, -2.0}}}, {"max_order", 3}}},
         {"seed", 1}};
  auto cfg = load_config(write_config(dir, "cfg.json", j));
  TempDir out;
  cfg.out_dir = (out.path / "run").string();
  std::ostringstream log;
  CHECK(run_command(cfg, RunOptions{}, log) == 0);

  const std::string csv = slurp(fs::path(cfg.out_dir) / "moments.csv");
  CHECK(csv.find("m_1,m_2,value") != std::string::npos);
  CHECK(csv.find("1,0,0.66666666666666") != std::string::npos);
  // orders 1..3 over two coordinates: 2 + 3 + 4 data rows
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2 + 9);

  const json summary = json::parse(slurp(fs::path(cfg.out_dir) / "summary.json"));
  CHECK(summary.at("version").get<std::string>() == kVersion);
  CHECK(summary.at("seed").get<std::uint64_t>() == 1);
  CHECK(summary.at("config_hash").get<std::string>().size() == 16);
}

TEST_CASE("identical configs produce identical artifacts") {
  TempDir dir;
  json j{{"command", "sample-gem"},
         {"params", {{"law", {{"type", "gem"}, {"theta", 1.5}}}, {"replicates", 5}}},
         {"seed", 99}};
  auto cfg = load_config(write_config(dir, "cfg.json", j));

  TempDir out_a, out_b;
  std::ostringstream log;
  RunConfig a = cfg, b = cfg;
  a.out_dir = (out_a.path / "run").string();
  b.out_dir = (out_b.path / "run").string();
  CHECK(run_command(a, RunOptions{}, log) == 0);
  CHECK(run_command(b, RunOptions{}, log) == 0);
  CHECK(slurp(fs::path(a.out_dir) / "sticks.csv") == slurp(fs::path(b.out_dir) / "sticks.csv"));
  CHECK(slurp(fs::path(a.out_dir) / "summary.json") ==
        slurp(fs::path(b.out_dir) / "summary.json"));
}

TEST_CASE("csv artifacts embed run metadata") {
  TempDir dir;
  json j = simulate_config();
  auto cfg = load_config(write_config(dir, "cfg.json", j));
  TempDir out;
  cfg.out_dir = (out.path / "run").string();
  std::ostringstream log;
  CHECK(run_command(cfg, RunOptions{}, log) == 0);
  const std::string csv = slurp(fs::path(cfg.out_dir) / "paths.csv");
  CHECK(csv.rfind("# stickflow ", 0) == 0);
  CHECK(csv.find("seed=7") != std::string::npos);
  CHECK(csv.find("\r") == std::string::npos);
}

TEST_CASE("format flag suppresses artifacts") {
  TempDir dir;
  auto cfg = load_config(write_config(dir, "cfg.json", simulate_config()));
  std::ostringstream log;

  TempDir json_only;
  cfg.out_dir = (json_only.path / "run").string();
  RunOptions opt;
  opt.format = OutputFormat::Json;
  CHECK(run_command(cfg, opt, log) == 0);
  CHECK(fs::exists(fs::path(cfg.out_dir) / "summary.json"));
  CHECK_FALSE(fs::exists(fs::path(cfg.out_dir) / "paths.csv"));

  TempDir csv_only;
  cfg.out_dir = (csv_only.path / "run").string();
  opt.format = OutputFormat::Csv;
  CHECK(run_command(cfg, opt, log) == 0);
  CHECK_FALSE(fs::exists(fs::path(cfg.out_dir) / "summary.json"));
  CHECK(fs::exists(fs::path(cfg.out_dir) / "paths.csv"));
}

TEST_CASE("verify covariance reports the reference value") {
  TempDir dir;
  json j{{"command", "verify"}, {"params", {{"checks", {"covariance"}}}}, {"seed", 3}};
  auto cfg = load_config(write_config(dir, "cfg.json", j));
  TempDir out;
  cfg.out_dir = (out.path / "run").string();
  std::ostringstream log;
  CHECK(run_command(cfg, RunOptions{}, log) == 0);

  const json report = json::parse(slurp(fs::path(cfg.out_dir) / "verify.json"));
  CHECK(report.at("pass").get<bool>());
  const auto& first = report.at("reports").at(0);
  CHECK(first.at("check").get<std::string>() == "covariance");
  CHECK(std::abs(first.at("statistic").get<double>() - (-0.005391)) < 1e-4);
}

TEST_CASE("verify rejects unknown check names") {
  TempDir dir;
  json j{{"command", "verify"}, {"params", {{"checks", {"nonsense"}}}}};
  CHECK_THROWS_AS(load_config(write_config(dir, "cfg.json", j)), ConfigError);
}

TEST_CASE("accept subcommand runs selected criteria") {
  TempDir dir;
  json j{{"command", "accept"}, {"params", {{"criteria", {1, 2, 3}}}}, {"seed", 20260810}};
  auto cfg = load_config(write_config(dir, "cfg.json", j));
  TempDir out;
  cfg.out_dir = (out.path / "run").string();
  std::ostringstream log;
  CHECK(run_command(cfg, RunOptions{}, log) == 0);

  const json report = json::parse(slurp(fs::path(cfg.out_dir) / "acceptance.json"));
  CHECK(report.at("pass").get<bool>());
  CHECK(report.at("criteria").size() == 3);
  CHECK(log.str().find("PASS criterion 1") != std::string::npos);
  CHECK(log.str().find("criterion 4") == std::string::npos);
}

TEST_CASE("seed precedence: flag, config, environment, default") {
  TempDir dir;
  json with_seed = simulate_config();
  json without_seed = simulate_config();
  without_seed.erase("seed");
  const auto cfg_seeded = load_config(write_config(dir, "a.json", with_seed));
  const auto cfg_bare = load_config(write_config(dir, "b.json", without_seed));

  CHECK(resolve_seed(cfg_seeded, std::uint64_t{55}) == 55);
  CHECK(resolve_seed(cfg_seeded, std::nullopt) == 7);

  ::setenv("STICKFLOW_SEED", "123", 1);
  CHECK(resolve_seed(cfg_bare, std::nullopt) == 123);
  CHECK(resolve_seed(cfg_seeded, std::nullopt) == 7);
  ::unsetenv("STICKFLOW_SEED");
  CHECK(resolve_seed(cfg_bare, std::nullopt) == 0);
}

TEST_CASE("occupation run summarizes per-state masses") {
  TempDir dir;
  json j{{"command", "occupation"},
         {"params",
          {{"G", {{-1.0, 1.0}, {2.0, -2.0}}}, {"pi", {1.0, 0.0}}, {"n", 2000}, {"replicates", 50}}},
         {"seed", 5}};
  auto cfg = load_config(write_config(dir, "cfg.json", j));
  TempDir out;
  cfg.out_dir = (out.path / "run").string();
  std::ostringstream log;
  CHECK(run_command(cfg, RunOptions{}, log) == 0);

  const json summary = json::parse(slurp(fs::path(cfg.out_dir) / "summary.json"));
  const auto& states = summary.at("per_state");
  REQUIRE(states.size() == 2);
  const double mean0 = states.at(0).at("mean").get<double>();
  CHECK(mean0 > 0.4);
  CHECK(mean0 < 0.9);

  const std::string csv = slurp(fs::path(cfg.out_dir) / "occupation.csv");
  CHECK(csv.find("seed,state,mass") != std::string::npos);
}
