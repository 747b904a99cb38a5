#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tremor/error.hpp"
#include "tremor/matrix.hpp"

namespace tremor {

/// Planar position in meters. Floors are modeled independently, so there is no z.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Euclidean distance between a source and a sensor. Throws kInvalidArgument
/// on non-finite coordinates.
double distance(Point source, Point sensor);

struct BoundingBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  BoundingBox inflated(double margin) const;
  bool contains(Point p) const;
  Point clamp(Point p) const;
  Point center() const;
};

enum class SexLabel { kFemale = 0, kMale = 1 };

std::string_view to_string(SexLabel label);
SexLabel parse_sex_label(std::string_view text);

struct Sensor {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  std::string zone;
  bool noisy = false;

  Point position() const { return {x, y}; }

  friend bool operator==(const Sensor&, const Sensor&) = default;
};

/// Ordered set of sensors with zone membership. Immutable once built; the
/// constructor rejects duplicate or empty ids, non-finite coordinates and
/// sensors without a zone.
class SensorArray {
 public:
  explicit SensorArray(std::vector<Sensor> sensors);

  std::span<const Sensor> sensors() const noexcept { return sensors_; }
  std::size_t size() const noexcept { return sensors_.size(); }
  const Sensor& operator[](std::size_t i) const { return sensors_[i]; }

  std::optional<std::size_t> index_of(std::string_view id) const;
  const Sensor& at(std::string_view id) const;

  /// Zone names in order of first appearance.
  const std::vector<std::string>& zones() const noexcept { return zones_; }
  bool has_zone(std::string_view zone) const;

  BoundingBox bounding_box() const;
  Point centroid() const;

  friend bool operator==(const SensorArray& a, const SensorArray& b) { return a.sensors_ == b.sensors_; }

 private:
  std::vector<Sensor> sensors_;
  std::vector<std::string> zones_;
};

/// Non-noisy sensors of one zone, in layout order. kNotFound for unknown zones.
SensorArray zone_sensors(const SensorArray& array, std::string_view zone);

/// Uniformly sampled multi-channel acceleration (m/s^2), one row per channel.
class VibrationRecord {
 public:
  VibrationRecord(std::vector<std::string> channels, Matrix samples, double sample_rate,
                  double start_time);

  const std::vector<std::string>& channels() const noexcept { return channels_; }
  const Matrix& samples() const noexcept { return samples_; }
  double sample_rate() const noexcept { return sample_rate_; }
  double start_time() const noexcept { return start_time_; }

  std::size_t channel_count() const noexcept { return channels_.size(); }
  std::size_t sample_count() const noexcept { return samples_.cols(); }
  double duration() const { return static_cast<double>(sample_count()) / sample_rate_; }
  double end_time() const { return start_time_ + duration(); }

  std::optional<std::size_t> channel_index(std::string_view id) const;
  std::span<const double> channel(std::size_t i) const { return samples_.row(i); }

  /// Throws kValidation if any channel id is absent from the layout.
  void check_layout(const SensorArray& layout) const;

  friend bool operator==(const VibrationRecord&, const VibrationRecord&) = default;

 private:
  std::vector<std::string> channels_;
  Matrix samples_;
  double sample_rate_;
  double start_time_;
};

/// Windowed RMS energy per channel. Window k covers samples
/// [k * window_len, (k + 1) * window_len) of the source record.
class EnergySeries {
 public:
  EnergySeries(std::vector<std::string> channels, Matrix energies, std::size_t window_len,
               double sample_rate, double start_time = 0.0);

  const std::vector<std::string>& channels() const noexcept { return channels_; }
  const Matrix& energies() const noexcept { return energies_; }
  std::size_t window_len() const noexcept { return window_len_; }
  double sample_rate() const noexcept { return sample_rate_; }
  double start_time() const noexcept { return start_time_; }

  std::size_t channel_count() const noexcept { return channels_.size(); }
  std::size_t window_count() const noexcept { return energies_.cols(); }
  double window_seconds() const { return static_cast<double>(window_len_) / sample_rate_; }
  double window_time(std::size_t k) const { return start_time_ + static_cast<double>(k) * window_seconds(); }

 private:
  std::vector<std::string> channels_;
  Matrix energies_;
  std::size_t window_len_;
  double sample_rate_;
  double start_time_;
};

/// A detected (or planted) footstep with the energy each sensor saw.
struct FootstepEvent {
  std::size_t window_index = 0;
  double time = 0.0;
  std::map<std::string, double> per_sensor_energy;
  std::optional<Point> truth_location;
  std::optional<std::string> participant_id;
  std::optional<SexLabel> sex_label;

  /// Throws kValidation when energies are empty, negative or non-finite.
  void validate() const;
};

struct LocationEstimate {
  double x = 0.0;
  double y = 0.0;
  double source_energy = 0.0;
  double beta = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  // Converged, but the relative residual exceeds the configured plausibility
  // bound (typically a fit against the wrong zone).
  bool implausible = false;

  Point position() const { return {x, y}; }
};

/// Seconds to a sample count, rounding half away from zero.
std::size_t seconds_to_samples(double seconds, double sample_rate);

}  // namespace tremor
