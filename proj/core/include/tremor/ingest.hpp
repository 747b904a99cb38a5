#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tremor/core.hpp"

namespace tremor {

/// Sensor layout CSV: header `id,x,y,zone,noisy`, noisy in {0,1}.
SensorArray load_layout(const std::filesystem::path& path);
void save_layout(const std::filesystem::path& path, const SensorArray& layout);

/// Record CSV: header `t,<id1>,<id2>,...`, one row per sample, times strictly
/// increasing and uniform. Channels are returned in layout order.
///
/// The sample rate is estimated from the first and last timestamps and snapped
/// to the nearest integer Hz when it lies within 1 ppm of one.
VibrationRecord load_record(const std::filesystem::path& path, const SensorArray& layout);
void save_record(const std::filesystem::path& path, const VibrationRecord& record);

/// Keeps the samples with t0 <= t < t1.
VibrationRecord clip_record(const VibrationRecord& record, double t0, double t1);

struct Waypoint {
  double time = 0.0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

/// Timestamped ground-truth positions, linearly interpolated between waypoints.
class GroundTruthPath {
 public:
  explicit GroundTruthPath(std::vector<Waypoint> waypoints);

  const std::vector<Waypoint>& waypoints() const noexcept { return waypoints_; }
  double start_time() const { return waypoints_.front().time; }
  double end_time() const { return waypoints_.back().time; }

  /// Position at time t; clamps to the end points outside the covered span.
  Point position_at(double t) const;

  friend bool operator==(const GroundTruthPath&, const GroundTruthPath&) = default;

 private:
  std::vector<Waypoint> waypoints_;
};

GroundTruthPath load_truth(const std::filesystem::path& path);
void save_truth(const std::filesystem::path& path, const GroundTruthPath& truth);

struct Trial {
  std::string trial_id;
  std::string participant_id;
  SexLabel sex_label = SexLabel::kFemale;
  std::string record_path;
  std::optional<std::string> truth_path;

  friend bool operator==(const Trial&, const Trial&) = default;
};

/// Labeled trials. Relative paths resolve against base_dir (the directory the
/// manifest was loaded from).
class TrialManifest {
 public:
  TrialManifest(std::vector<Trial> trials, std::filesystem::path base_dir = {});

  const std::vector<Trial>& trials() const noexcept { return trials_; }
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

  std::vector<std::string> participants() const;
  std::map<SexLabel, std::size_t> participants_per_label() const;

  std::filesystem::path record_path(const Trial& trial) const;
  std::optional<std::filesystem::path> truth_path(const Trial& trial) const;

  friend bool operator==(const TrialManifest& a, const TrialManifest& b) { return a.trials_ == b.trials_; }

 private:
  std::vector<Trial> trials_;
  std::filesystem::path base_dir_;
};

/// Loads and validates a manifest JSON; every referenced file must exist.
TrialManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const TrialManifest& manifest);

}  // namespace tremor
