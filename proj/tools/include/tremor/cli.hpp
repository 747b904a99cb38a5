#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tremor/energy.hpp"
#include "tremor/localize.hpp"
#include "tremor/privacy.hpp"

namespace tremor::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kConfigFailure = 2 };

struct PrivacySettings {
  CvUnit cv_unit = CvUnit::kParticipant;
  std::size_t folds = 0;  // 0 = leave-one-out
  FootstepExtraction extraction;
  std::size_t synthesize = 0;  // rows per class; 0 skips the scale-up sweep
  std::size_t synthesis_folds = 5;
  SynthesisOptions synthesis;
};

/// Resolved experiment settings. Paths from a config file are relative to the
/// file; paths from flags are relative to the working directory.
struct ExperimentConfig {
  std::filesystem::path layout_path;
  std::filesystem::path manifest_path;  // empty = <output>/dataset/manifest.json
  std::filesystem::path scenario_path;
  std::filesystem::path output_dir = "tremor-out";
  std::vector<std::optional<double>> window_sizes;  // nullopt = raw samples
  std::string zone;  // empty = first zone of the layout
  EventDetectorConfig detector;
  FitConfig fit;
  double event_duration = kDefaultEventDuration;
  std::vector<ClassifierSpec> classifiers;
  PrivacySettings privacy;
  std::uint64_t seed = 7;

  std::filesystem::path dataset_manifest() const;
  void validate() const;
};

ExperimentConfig default_config();
/// Throws kParse / kValidation / kNotFound.
ExperimentConfig load_config(const std::filesystem::path& path);
/// Ordered JSON text of the effective config, for provenance.
std::string config_to_json(const ExperimentConfig& config);

/// "raw,0.125,0.25" -> {nullopt, 0.125, 0.25}
std::vector<std::optional<double>> parse_window_list(const std::string& text);
std::vector<ClassifierSpec> parse_classifier_list(const std::string& text);

int cmd_simulate(const ExperimentConfig& config);
int cmd_localize(const ExperimentConfig& config);
int cmd_privacy(const ExperimentConfig& config);
int cmd_report(const ExperimentConfig& config);

/// Full command line: `tremor <simulate|localize|privacy|report> [flags]`.
int run(int argc, char** argv);

}  // namespace tremor::cli
