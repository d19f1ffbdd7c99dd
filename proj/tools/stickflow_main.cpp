// Apache License, Version 2.0, refer to LICENSE.txt
#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "stickflow/cli.hpp"
#include "stickflow/version.hpp"

namespace {

void write_error_artifact(const std::string& out_dir, const std::string& message,
                          const std::string& field) {
  try {
    std::filesystem::create_directories(out_dir);
    stickflow::json err;
    err["version"] = stickflow::kVersion;
    err["error"] = message;
    if (!field.empty()) err["field"] = field;
    stickflow::write_text_file(std::filesystem::path(out_dir) / "error.json",
                               err.dump(2) + "\n");
  } catch (...) {
    // stderr already carries the message
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stickflow: stick-breaking measures, clumped sticks, and occupation laws"};
  app.set_version_flag("--version", stickflow::kVersion);

  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::string> out_flag;
  int jobs = 1;
  std::string format = "both";

  app.add_option("--config", config_path, "path to the run config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed_flag, "seed override (highest precedence)");
  app.add_option("--out", out_flag, "output directory override");
  app.add_option("--jobs", jobs, "worker threads for replicate fan-out")
      ->check(CLI::PositiveNumber);
  app.add_option("--format", format, "artifact formats to write")
      ->check(CLI::IsMember({"json", "csv", "both"}));

  CLI11_PARSE(app, argc, argv);

  std::string out_dir = out_flag.value_or("out");
  try {
    stickflow::RunConfig cfg = stickflow::load_config(config_path);
    cfg.seed = stickflow::resolve_seed(cfg, seed_flag);
    if (out_flag) cfg.out_dir = *out_flag;
    out_dir = cfg.out_dir;

    stickflow::RunOptions opt;
    opt.jobs = jobs;
    opt.format = format == "json"  ? stickflow::OutputFormat::Json
                 : format == "csv" ? stickflow::OutputFormat::Csv
                                   : stickflow::OutputFormat::Both;
    return stickflow::run_command(cfg, opt, std::cout);
  } catch (const stickflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    write_error_artifact(out_dir, e.what(), e.field_path());
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    write_error_artifact(out_dir, e.what(), "");
    return 1;
  }
}
