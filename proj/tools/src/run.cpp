#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tremor/cli.hpp"

namespace tremor::cli {

namespace {

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("tremor");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("TREMOR_LOG")) {
    const std::string level(env);
    if (level == "error" || level == "warn" || level == "info" || level == "debug") {
      spdlog::set_level(spdlog::level::from_str(level));
    } else {
      spdlog::warn("TREMOR_LOG='{}' is not one of error, warn, info, debug; using warn", level);
    }
  }
}

}  // namespace

int run(int argc, char** argv) {
  if (!spdlog::get("tremor")) configure_logging();

  CLI::App app{"Footstep vibration localization and privacy experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, output, window_sizes, classifiers, zone, layout, manifest, scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> synthesize;
  app.add_option("--config", config_path, "Experiment config JSON");
  app.add_option("--output", output, "Output directory");
  app.add_option("--seed", seed, "Root seed");
  app.add_option("--window-sizes", window_sizes, "Comma-separated window sizes in seconds; 'raw' for raw samples");
  app.add_option("--classifiers", classifiers, "Comma-separated classifiers: knn,gnb,logistic,tree,mlp");
  app.add_option("--zone", zone, "Sensor zone used for localization");
  app.add_option("--layout", layout, "Sensor layout CSV");
  app.add_option("--manifest", manifest, "Trial manifest JSON");
  app.add_option("--scenario", scenario, "Dataset scenario JSON (simulate)");
  app.add_option("--synthesize", synthesize, "Rows per class for the synthetic scale-up sweep (privacy)");

  auto* simulate = app.add_subcommand("simulate", "Generate a labeled synthetic walking dataset");
  auto* localize = app.add_subcommand("localize", "Localize footsteps and report RMSE against window size");
  auto* privacy = app.add_subcommand("privacy", "Classification accuracy against window size");
  auto* report = app.add_subcommand("report", "Merge command outputs into report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }

  ExperimentConfig config;
  try {
    config = config_path.empty() ? default_config() : load_config(config_path);
    if (!output.empty()) config.output_dir = output;
    if (seed) config.seed = *seed;
    if (!window_sizes.empty()) config.window_sizes = parse_window_list(window_sizes);
    if (!classifiers.empty()) config.classifiers = parse_classifier_list(classifiers);
    if (!zone.empty()) config.zone = zone;
    if (!layout.empty()) config.layout_path = layout;
    if (!manifest.empty()) config.manifest_path = manifest;
    if (!scenario.empty()) config.scenario_path = scenario;
    if (synthesize) config.privacy.synthesize = *synthesize;
    config.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigFailure;
  }

  if (simulate->parsed()) return cmd_simulate(config);
  if (localize->parsed()) return cmd_localize(config);
  if (privacy->parsed()) return cmd_privacy(config);
  if (report->parsed()) return cmd_report(config);
  return kConfigFailure;
}

}  // namespace tremor::cli
