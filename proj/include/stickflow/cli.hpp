// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "stickflow/acceptance.hpp"
#include "stickflow/inhom.hpp"
#include "stickflow/io.hpp"
#include "stickflow/moments.hpp"
#include "stickflow/stats.hpp"
#include "stickflow/version.hpp"

namespace stickflow {

enum class Command {
  SampleGem,
  SampleMccgem,
  Simulate,
  Occupation,
  Moments,
  Marginals,
  Verify,
  Accept,
};

inline Command parse_command(const std::string& name) {
  if (name == "sample-gem") return Command::SampleGem;
  if (name == "sample-mccgem") return Command::SampleMccgem;
  if (name == "simulate") return Command::Simulate;
  if (name == "occupation") return Command::Occupation;
  if (name == "moments") return Command::Moments;
  if (name == "marginals") return Command::Marginals;
  if (name == "verify") return Command::Verify;
  if (name == "accept") return Command::Accept;
  throw ConfigError("command", "unknown command '" + name + "'");
}

enum class OutputFormat { Json, Csv, Both };

struct RunConfig {
  Command command;
  json params;
  std::uint64_t seed = 0;
  bool seed_from_config = false;
  std::string out_dir = "out";
  bool out_dir_from_config = false;
  std::uint64_t config_hash = 0;
};

namespace cli_detail {

inline LawTag parse_law(const json& j, const std::string& path) {
  cfg::require_keys(j, {"type", "theta", "alpha", "thetas", "allow_unit"}, {"type"}, path);
  const std::string type = cfg::get_string(j, "type", path);
  if (type == "gem") {
    cfg::require_keys(j, {"type", "theta"}, {"type", "theta"}, path);
    return GemLaw{cfg::get_double(j, "theta", path)};
  }
  if (type == "disordered") {
    cfg::require_keys(j, {"type", "thetas", "allow_unit"}, {"type", "thetas"}, path);
    DisorderedLaw law;
    const Eigen::VectorXd t = cfg::get_vector(j, "thetas", path);
    law.thetas.assign(t.data(), t.data() + t.size());
    law.allow_unit = j.value("allow_unit", false);
    return law;
  }
  if (type == "two_param") {
    cfg::require_keys(j, {"type", "alpha", "theta"}, {"type", "alpha", "theta"}, path);
    return TwoParamLaw{cfg::get_double(j, "alpha", path), cfg::get_double(j, "theta", path)};
  }
  throw ConfigError(path + ".type", "unknown law type '" + type + "'");
}

inline void validate_params(Command command, const json& params) {
  const std::string p = "params";
  switch (command) {
    case Command::SampleGem:
      cfg::require_keys(params, {"law", "eps", "replicates"}, {"law"}, p);
      parse_law(params.at("law"), p + ".law");
      break;
    case Command::SampleMccgem:
      cfg::require_keys(params, {"G", "init", "eps", "replicates"}, {"G", "init"}, p);
      break;
    case Command::Simulate:
      cfg::require_keys(params, {"G", "M", "pi", "n", "replicates"}, {"G", "pi", "n"}, p);
      break;
    case Command::Occupation:
      cfg::require_keys(params, {"G", "M", "pi", "n", "replicates"}, {"G", "pi", "n"}, p);
      break;
    case Command::Moments:
      cfg::require_keys(params, {"G", "max_order"}, {"G", "max_order"}, p);
      break;
    case Command::Marginals:
      cfg::require_keys(params, {"G", "max_order", "state"}, {"G", "max_order"}, p);
      break;
    case Command::Verify:
      cfg::require_keys(params, {"checks", "replicates"}, {"checks"}, p);
      if (!params.at("checks").is_array() || params.at("checks").empty())
        throw ConfigError(p + ".checks", "expected a nonempty array of check names");
      for (const auto& c : params.at("checks")) {
        if (!c.is_string()) throw ConfigError(p + ".checks", "check names must be strings");
        const std::string name = c.get<std::string>();
        if (name != "covariance" && name != "clump-beta" && name != "self-similarity")
          throw ConfigError(p + ".checks", "unknown check '" + name + "'");
      }
      break;
    case Command::Accept:
      cfg::require_keys(params, {"criteria"}, {}, p);
      if (params.contains("criteria")) {
        for (const auto& c : params.at("criteria")) {
          if (!c.is_number_integer() || c.get<int>() < 1 || c.get<int>() > 13)
            throw ConfigError(p + ".criteria", "criteria must be integers in 1..13");
        }
      }
      break;
  }
}

}  // namespace cli_detail

/// Parse and validate a config file; unknown keys anywhere are rejected.
inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("config parse error: ") + e.what());
  }

  cfg::require_keys(j, {"command", "params", "seed", "out_dir"}, {"command", "params"}, "");
  RunConfig cfg;
  cfg.command = parse_command(cfg::get_string(j, "command", ""));
  cfg.params = j.at("params");
  cli_detail::validate_params(cfg.command, cfg.params);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
      throw ConfigError("seed", "expected an integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.seed_from_config = true;
  }
  if (j.contains("out_dir")) {
    cfg.out_dir = cfg::get_string(j, "out_dir", "");
    cfg.out_dir_from_config = true;
  }
  cfg.config_hash = fnv1a_hash(j.dump());
  return cfg;
}

struct RunOptions {
  OutputFormat format = OutputFormat::Both;
  int jobs = 1;
  bool quiet = false;
};

/// Seed precedence: --seed flag, then the config value, then STICKFLOW_SEED,
/// then the logged default 0.
inline std::uint64_t resolve_seed(const RunConfig& cfg, const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (cfg.seed_from_config) return cfg.seed;
  if (const char* env = std::getenv("STICKFLOW_SEED")) return std::strtoull(env, nullptr, 10);
  return 0;
}

namespace cli_detail {

struct RunContext {
  const RunConfig& cfg;
  const RunOptions& opt;
  std::filesystem::path out;

  std::string metadata() const {
    return std::string("stickflow ") + kVersion + " seed=" + std::to_string(cfg.seed) +
           " config=" + hash_hex(cfg.config_hash);
  }

  json base_summary() const {
    json j;
    j["version"] = kVersion;
    j["seed"] = cfg.seed;
    j["config_hash"] = hash_hex(cfg.config_hash);
    return j;
  }

  bool want_csv() const { return opt.format != OutputFormat::Json; }
  bool want_json() const { return opt.format != OutputFormat::Csv; }

  void write_summary(const json& summary) const {
    if (want_json()) write_text_file(out / "summary.json", summary.dump(2) + "\n");
  }
};

inline GeneratorMatrix generator_from(const json& params) {
  try {
    return GeneratorMatrix(cfg::get_matrix(params, "G", "params"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("params.G", e.what());
  }
}

inline int run_sample_gem(const RunContext& ctx) {
  const auto& params = ctx.cfg.params;
  const LawTag law = parse_law(params.at("law"), "params.law");
  const double eps = params.value("eps", 1e-12);
  const std::int64_t replicates = params.value("replicates", std::int64_t{1});

  std::optional<CsvWriter> csv;
  if (ctx.want_csv()) csv.emplace(ctx.out / "sticks.csv", ctx.metadata(),
                              std::vector<std::string>{"replicate", "index", "weight"});
  json tails = json::array();
  for (std::int64_t r = 0; r < replicates; ++r) {
    const auto stick = sample_stick(law, mix_seed(ctx.cfg.seed, static_cast<std::uint64_t>(r)), eps);
    if (csv) {
      for (std::size_t i = 0; i < stick.size(); ++i)
        csv->row({std::to_string(r), std::to_string(i + 1), format_double(stick[i])});
    }
    tails.push_back(stick.tail_mass());
  }
  json summary = ctx.base_summary();
  summary["command"] = "sample-gem";
  summary["replicates"] = replicates;
  summary["eps"] = eps;
  summary["tail_mass"] = tails;
  ctx.write_summary(summary);
  return 0;
}

inline int run_sample_mccgem(const RunContext& ctx) {
  const auto& params = ctx.cfg.params;
  const auto g = generator_from(params);
  const Eigen::VectorXd init = cfg::get_vector(params, "init", "params");
  const double eps = params.value("eps", 1e-12);
  const std::int64_t replicates = params.value("replicates", std::int64_t{1});

  std::optional<CsvWriter> csv;
  if (ctx.want_csv())
    csv.emplace(ctx.out / "mccgem.csv", ctx.metadata(),
                std::vector<std::string>{"replicate", "index", "weight", "label"});
  Eigen::VectorXd mean_mass = Eigen::VectorXd::Zero(g.dim());
  for (std::int64_t r = 0; r < replicates; ++r) {
    const auto sample = sample_mccgem(g, init, eps, mix_seed(ctx.cfg.seed, static_cast<std::uint64_t>(r)));
    if (csv) {
      for (std::size_t i = 0; i < sample.weights.size(); ++i)
        csv->row({std::to_string(r), std::to_string(i + 1), format_double(sample.weights[i]),
                  std::to_string(sample.labels[i])});
    }
    mean_mass += assemble_measure(sample.weights, sample.labels, g.dim()).masses;
  }
  mean_mass /= static_cast<double>(replicates);

  json summary = ctx.base_summary();
  summary["command"] = "sample-mccgem";
  summary["replicates"] = replicates;
  summary["mean_masses"] = to_json(mean_mass);
  ctx.write_summary(summary);
  return 0;
}

inline InhomSpec spec_from(const json& params) {
  const auto g = generator_from(params);
  const Eigen::VectorXd pi = cfg::get_vector(params, "pi", "params");
  const std::int64_t n = cfg::get_int(params, "n", "params");
  const std::int64_t m =
      params.contains("M") ? cfg::get_int(params, "M", "params") : InhomSpec::default_cutoff(g);
  try {
    return InhomSpec(g, m, pi, n);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("params", e.what());
  }
}

inline int run_simulate(const RunContext& ctx) {
  const InhomSpec spec = spec_from(ctx.cfg.params);
  const std::int64_t replicates = ctx.cfg.params.value("replicates", std::int64_t{1});

  std::optional<CsvWriter> csv;
  if (ctx.want_csv()) csv.emplace(ctx.out / "paths.csv", ctx.metadata(),
                                  std::vector<std::string>{"replicate", "step", "state"});
  json occupations = json::array();
  for (std::int64_t r = 0; r < replicates; ++r) {
    const auto path = simulate_inhom(spec, mix_seed(ctx.cfg.seed, static_cast<std::uint64_t>(r)));
    if (csv) {
      for (std::int64_t t = 1; t <= path.length(); ++t)
        csv->row({std::to_string(r), std::to_string(t), std::to_string(path.at_time(t))});
    }
    occupations.push_back(to_json(occupation_measure(path, spec.horizon).masses));
  }
  json summary = ctx.base_summary();
  summary["command"] = "simulate";
  summary["replicates"] = replicates;
  summary["cutoff"] = spec.cutoff;
  summary["occupations"] = occupations;
  ctx.write_summary(summary);
  return 0;
}

inline int run_occupation(const RunContext& ctx) {
  const InhomSpec spec = spec_from(ctx.cfg.params);
  const std::int64_t replicates = ctx.cfg.params.value("replicates", std::int64_t{100});

  std::vector<Eigen::VectorXd> masses(static_cast<std::size_t>(replicates));
  const auto seeds_of = [&](std::int64_t r) { return mix_seed(ctx.cfg.seed, static_cast<std::uint64_t>(r)); };
  for (std::int64_t r = 0; r < replicates; ++r)
    masses[static_cast<std::size_t>(r)] =
        occupation_measure(simulate_inhom(spec, seeds_of(r)), spec.horizon).masses;

  std::optional<CsvWriter> csv;
  if (ctx.want_csv()) csv.emplace(ctx.out / "occupation.csv", ctx.metadata(),
                                  std::vector<std::string>{"seed", "state", "mass"});
  if (csv) {
    for (std::int64_t r = 0; r < replicates; ++r) {
      for (int l = 0; l < spec.g.dim(); ++l)
        csv->row({std::to_string(seeds_of(r)), std::to_string(l),
                  format_double(masses[static_cast<std::size_t>(r)](l))});
    }
  }

  json per_state = json::array();
  for (int l = 0; l < spec.g.dim(); ++l) {
    std::vector<double> column(static_cast<std::size_t>(replicates));
    for (std::int64_t r = 0; r < replicates; ++r) column[static_cast<std::size_t>(r)] = masses[static_cast<std::size_t>(r)](l);
    const auto est = summarize(column, ctx.cfg.seed);
    per_state.push_back({{"state", l}, {"mean", est.value}, {"std_error", est.std_error}});
  }
  json summary = ctx.base_summary();
  summary["command"] = "occupation";
  summary["replicates"] = replicates;
  summary["per_state"] = per_state;
  ctx.write_summary(summary);
  return 0;
}

inline int run_moments(const RunContext& ctx) {
  const auto g = generator_from(ctx.cfg.params);
  const std::int64_t max_order = cfg::get_int(ctx.cfg.params, "max_order", "params");
  if (max_order < 1) throw ConfigError("params.max_order", "must be >= 1");
  const auto poly = minimal_and_q(g);

  std::optional<CsvWriter> csv;
  if (ctx.want_csv()) {
    std::vector<std::string> header;
    for (int i = 1; i <= g.dim(); ++i) header.push_back("m_" + std::to_string(i));
    header.push_back("value");
    csv.emplace(ctx.out / "moments.csv", ctx.metadata(), header);
  }
  json rows = json::array();
  for (int n = 1; n <= max_order; ++n) {
    acceptance_detail::for_each_multi_index(g.dim(), n, [&](const std::vector<int>& m) {
      const double value = joint_moment(g, poly, m);
      if (csv) {
        std::vector<std::string> cells;
        for (int mi : m) cells.push_back(std::to_string(mi));
        cells.push_back(format_double(value));
        csv->row(cells);
      }
      rows.push_back({{"m", m}, {"value", value}});
    });
  }

  json summary = ctx.base_summary();
  summary["command"] = "moments";
  summary["stationary"] = to_json(stationary_distribution(g));
  summary["q_coefficients"] = poly.q_coeffs;
  summary["char_fallback"] = poly.char_fallback;
  summary["moments"] = rows;
  ctx.write_summary(summary);
  return 0;
}

inline int run_marginals(const RunContext& ctx) {
  const auto g = generator_from(ctx.cfg.params);
  const std::int64_t max_order = cfg::get_int(ctx.cfg.params, "max_order", "params");
  if (max_order < 1) throw ConfigError("params.max_order", "must be >= 1");
  const auto poly = minimal_and_q(g);

  std::vector<int> states;
  if (ctx.cfg.params.contains("state")) {
    const std::int64_t s = cfg::get_int(ctx.cfg.params, "state", "params");
    if (s < 0 || s >= g.dim()) throw ConfigError("params.state", "state out of range");
    states.push_back(static_cast<int>(s));
  } else {
    for (int s = 0; s < g.dim(); ++s) states.push_back(s);
  }

  std::optional<CsvWriter> csv;
  if (ctx.want_csv()) csv.emplace(ctx.out / "marginals.csv", ctx.metadata(),
                                  std::vector<std::string>{"state", "order", "value"});
  json rows = json::array();
  for (int s : states) {
    for (std::int64_t n = 1; n <= max_order; ++n) {
      const double value = marginal_moment(g, poly, s, static_cast<int>(n));
      if (csv) csv->row({std::to_string(s), std::to_string(n), format_double(value)});
      rows.push_back({{"state", s}, {"order", n}, {"value", value}});
    }
  }
  json summary = ctx.base_summary();
  summary["command"] = "marginals";
  summary["marginals"] = rows;
  ctx.write_summary(summary);
  return 0;
}

inline json report_to_json(const CheckReport& r) {
  json j;
  j["check"] = r.check;
  j["params"] = r.params;
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["pass"] = r.pass;
  j["seed"] = r.seed;
  return j;
}

inline int run_verify(const RunContext& ctx) {
  const auto& params = ctx.cfg.params;
  const std::int64_t replicates = params.value("replicates", std::int64_t{10'000});
  json reports = json::array();
  bool all_pass = true;

  for (const auto& c : params.at("checks")) {
    const std::string name = c.get<std::string>();
    if (name == "covariance") {
      const auto series = gem2_clump_covariance(0.5, 200);
      CheckReport r;
      r.check = "covariance";
      r.params = {{"p_stay", 0.5}, {"terms", 200}, {"truncation_bound", series.truncation_bound}};
      r.statistic = series.cov;
      r.p_value = 1.0;
      r.pass = std::abs(series.cov - (-0.005391)) < 1e-4;
      r.seed = ctx.cfg.seed;
      reports.push_back(report_to_json(r));
      all_pass = all_pass && r.pass;
    } else if (name == "clump-beta") {
      Eigen::MatrixXd coin(2, 2);
      coin << 0.5, 0.5, 0.5, 0.5;
      const auto r = clumped_fraction_beta_check(2.0, StochasticKernel(coin), 0, replicates,
                                                 mix_seed(ctx.cfg.seed, 61));
      reports.push_back(report_to_json(r));
      all_pass = all_pass && r.pass;
    } else if (name == "self-similarity") {
      Eigen::MatrixXd skew(2, 2);
      skew << 0.5, 0.5, 0.25, 0.75;
      const auto rep = self_similarity_check(
          SelfSimSpec{GemLaw{2.0}, StochasticKernel(skew), 0, 1e-12, replicates},
          mix_seed(ctx.cfg.seed, 62));
      reports.push_back(report_to_json(rep.to_check_report(0.01)));
      all_pass = all_pass && rep.pass;
    }
  }

  json summary = ctx.base_summary();
  summary["command"] = "verify";
  summary["reports"] = reports;
  summary["pass"] = all_pass;
  if (ctx.want_json()) write_text_file(ctx.out / "verify.json", summary.dump(2) + "\n");
  ctx.write_summary(summary);
  return all_pass ? 0 : 2;
}

inline int run_accept(const RunContext& ctx, std::ostream& log) {
  AcceptanceOptions options;
  options.seed = ctx.cfg.seed == 0 ? AcceptanceOptions{}.seed : ctx.cfg.seed;
  options.jobs = ctx.opt.jobs;
  if (ctx.cfg.params.contains("criteria")) {
    for (const auto& c : ctx.cfg.params.at("criteria")) options.criteria.push_back(c.get<int>());
  }

  json lines = json::array();
  bool all_pass = true;
  const auto results = run_acceptance(options, [&](const CriterionResult& r) {
    if (!ctx.opt.quiet) print_result_line(r, log);
    all_pass = all_pass && r.pass;
    lines.push_back({{"id", r.id},
                     {"name", r.name},
                     {"pass", r.pass},
                     {"detail", r.detail},
                     {"seconds", r.seconds}});
  });
  (void)results;

  json summary = ctx.base_summary();
  summary["command"] = "accept";
  summary["criteria"] = lines;
  summary["pass"] = all_pass;
  if (ctx.want_json()) write_text_file(ctx.out / "acceptance.json", summary.dump(2) + "\n");
  ctx.write_summary(summary);
  return all_pass ? 0 : 2;
}

}  // namespace cli_detail

/// Execute a validated config; artifacts land in cfg.out_dir.  Returns the
/// process exit code: 0 ok, 1 error, 2 statistical check failure.
inline int run_command(const RunConfig& cfg, const RunOptions& opt, std::ostream& log) {
  namespace fs = std::filesystem;
  cli_detail::RunContext ctx{cfg, opt, fs::path(cfg.out_dir)};
  fs::create_directories(ctx.out);
  switch (cfg.command) {
    case Command::SampleGem:
      return cli_detail::run_sample_gem(ctx);
    case Command::SampleMccgem:
      return cli_detail::run_sample_mccgem(ctx);
    case Command::Simulate:
      return cli_detail::run_simulate(ctx);
    case Command::Occupation:
      return cli_detail::run_occupation(ctx);
    case Command::Moments:
      return cli_detail::run_moments(ctx);
    case Command::Marginals:
      return cli_detail::run_marginals(ctx);
    case Command::Verify:
      return cli_detail::run_verify(ctx);
    case Command::Accept:
      return cli_detail::run_accept(ctx, log);
  }
  return 1;
}

}  // namespace stickflow
