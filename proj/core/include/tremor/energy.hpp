#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tremor/core.hpp"

namespace tremor {

/// RMS over consecutive windows of `window_len` samples:
///   E[k] = sqrt((1/w) * sum_{j<w} x[k*w + j]^2)
/// The trailing partial window is dropped.
std::vector<double> window_rms(std::span<const double> x, std::size_t window_len);

/// Per-channel window_rms(). Throws kRange unless 1 <= window_len <= sample count.
EnergySeries windowed_energy(const VibrationRecord& record, std::size_t window_len);

struct EventDetectorConfig {
  double threshold_factor = 4.0;
  double min_separation = 0.25;  // seconds
  // Peaks below this fraction of the strongest summed-energy peak are ignored.
  // Keeps decaying tails from registering as events when the noise floor is ~0.
  double min_relative_peak = 0.02;
  // Per-channel noise floors; estimated as the median window energy when empty.
  std::vector<double> noise_floor;

  void validate() const;
};

/// Median energy per channel.
std::vector<double> estimate_noise_floor(const EnergySeries& series);

/// Peaks of the channel-summed energy. A window qualifies when at least one
/// channel exceeds threshold_factor times its own noise floor and it is a local
/// maximum of the summed series. Peaks closer than min_separation are resolved
/// greedily in favour of the larger one. Output is sorted by time.
std::vector<FootstepEvent> detect_events(const EnergySeries& series, const EventDetectorConfig& config);

struct EventEnergy {
  std::map<std::string, double> per_sensor;
  std::size_t windows_used = 0;
  bool truncated = false;  // the requested duration ran past the series end
};

inline constexpr double kDefaultEventDuration = 0.5;  // seconds

/// Combines the windows covering [start, start + duration) by root mean square,
/// which equals the single-window energy of the concatenated span.
EventEnergy event_energy(const EnergySeries& series, std::size_t event_window, double duration);

struct IntervalCounts {
  std::string zone;
  std::vector<double> interval_start;
  std::vector<std::size_t> counts;
};

/// Histogram of event times over half-open bins [t_start + k*interval, ...)
/// per zone. Each event is attributed to the zone of its highest-energy sensor;
/// events whose sensors are not in the layout are grouped under "unassigned".
std::vector<IntervalCounts> count_events_per_interval(const std::vector<FootstepEvent>& events,
                                                      const SensorArray& sensors, double interval, double t_start,
                                                      double t_end);

/// CSV `window_index,t,<id1>,...`.
void save_energy_series(const std::filesystem::path& path, const EnergySeries& series);

}  // namespace tremor
