#include "tremor/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tremor/csv.hpp"

namespace tremor {

std::vector<double> window_rms(std::span<const double> x, std::size_t window_len) {
  require(window_len >= 1 && window_len <= x.size(), ErrorCode::kRange,
          "window_rms: window length must be in [1, sample count]");
  const std::size_t windows = x.size() / window_len;
  std::vector<double> out(windows);
  for (std::size_t k = 0; k < windows; ++k) {
    double sum = 0.0;
    for (std::size_t j = 0; j < window_len; ++j) {
      const double v = x[k * window_len + j];
      sum += v * v;
    }
    out[k] = std::sqrt(sum / static_cast<double>(window_len));
  }
  return out;
}

EnergySeries windowed_energy(const VibrationRecord& record, std::size_t window_len) {
  require(window_len >= 1 && window_len <= record.sample_count(), ErrorCode::kRange,
          "windowed_energy: window length must be in [1, sample count]");
  const std::size_t windows = record.sample_count() / window_len;
  Matrix energies(record.channel_count(), windows);
  for (std::size_t c = 0; c < record.channel_count(); ++c) {
    const auto rms = window_rms(record.channel(c), window_len);
    std::copy(rms.begin(), rms.end(), energies.row(c).begin());
  }
  return EnergySeries(record.channels(), std::move(energies), window_len, record.sample_rate(),
                      record.start_time());
}

void EventDetectorConfig::validate() const {
  require(std::isfinite(threshold_factor) && threshold_factor > 1.0, ErrorCode::kInvalidArgument,
          "detector: threshold_factor must be > 1");
  require(std::isfinite(min_separation) && min_separation >= 0.0, ErrorCode::kInvalidArgument,
          "detector: min_separation must be >= 0");
  require(std::isfinite(min_relative_peak) && min_relative_peak >= 0.0 && min_relative_peak < 1.0,
          ErrorCode::kInvalidArgument, "detector: min_relative_peak must be in [0, 1)");
  for (double f : noise_floor) {
    require(std::isfinite(f) && f >= 0.0, ErrorCode::kInvalidArgument, "detector: noise floors must be >= 0");
  }
}

std::vector<double> estimate_noise_floor(const EnergySeries& series) {
  std::vector<double> floors(series.channel_count(), 0.0);
  std::vector<double> scratch;
  for (std::size_t c = 0; c < series.channel_count(); ++c) {
    const auto row = series.energies().row(c);
    if (row.empty()) continue;
    scratch.assign(row.begin(), row.end());
    const auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(scratch.size() / 2);
    std::nth_element(scratch.begin(), mid, scratch.end());
    double median = *mid;
    if (scratch.size() % 2 == 0) {
      median = 0.5 * (median + *std::max_element(scratch.begin(), mid));
    }
    floors[c] = median;
  }
  return floors;
}

std::vector<FootstepEvent> detect_events(const EnergySeries& series, const EventDetectorConfig& config) {
  config.validate();
  const std::size_t n_windows = series.window_count();
  const std::size_t n_channels = series.channel_count();
  if (n_windows == 0 || n_channels == 0) return {};

  const auto floors = config.noise_floor.empty() ? estimate_noise_floor(series) : config.noise_floor;
  require(floors.size() == n_channels, ErrorCode::kInvalidArgument, "detector: noise floor count != channel count");

  const auto& e = series.energies();
  std::vector<double> summed(n_windows, 0.0);
  std::vector<char> active(n_windows, 0);
  for (std::size_t c = 0; c < n_channels; ++c) {
    const double threshold = config.threshold_factor * floors[c];
    for (std::size_t k = 0; k < n_windows; ++k) {
      summed[k] += e(c, k);
      if (e(c, k) > threshold) active[k] = 1;
    }
  }

  double strongest = 0.0;
  for (std::size_t k = 0; k < n_windows; ++k) {
    if (active[k]) strongest = std::max(strongest, summed[k]);
  }
  const double floor_peak = config.min_relative_peak * strongest;

  std::vector<std::size_t> candidates;
  for (std::size_t k = 0; k < n_windows; ++k) {
    if (!active[k] || summed[k] <= 0.0 || summed[k] < floor_peak) continue;
    const bool rises = k == 0 || summed[k] >= summed[k - 1];
    const bool falls = k + 1 == n_windows || summed[k] > summed[k + 1];
    if (rises && falls) candidates.push_back(k);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return summed[a] > summed[b]; });

  // Separation is compared in windows to avoid rounding at exact multiples.
  const double sep_windows = config.min_separation / series.window_seconds();
  std::vector<std::size_t> kept;
  for (const auto k : candidates) {
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](std::size_t j) {
      const double gap = std::abs(static_cast<double>(k) - static_cast<double>(j));
      return gap >= sep_windows - 1e-9;
    });
    if (clear) kept.push_back(k);
  }
  std::sort(kept.begin(), kept.end());

  std::vector<FootstepEvent> events;
  events.reserve(kept.size());
  for (const auto k : kept) {
    FootstepEvent ev;
    ev.window_index = k;
    ev.time = series.window_time(k);
    for (std::size_t c = 0; c < n_channels; ++c) ev.per_sensor_energy[series.channels()[c]] = e(c, k);
    events.push_back(std::move(ev));
  }
  return events;
}

EventEnergy event_energy(const EnergySeries& series, std::size_t event_window, double duration) {
  require(event_window < series.window_count(), ErrorCode::kRange, "event_energy: event window out of range");
  require(std::isfinite(duration) && duration > 0.0, ErrorCode::kInvalidArgument,
          "event_energy: duration must be positive");
  const double requested = std::round(duration / series.window_seconds());
  require(requested >= 1.0, ErrorCode::kInvalidArgument, "event_energy: duration shorter than one window");

  EventEnergy out;
  const std::size_t available = series.window_count() - event_window;
  const auto wanted = static_cast<std::size_t>(requested);
  out.windows_used = std::min(wanted, available);
  out.truncated = wanted > available;

  const auto& e = series.energies();
  for (std::size_t c = 0; c < series.channel_count(); ++c) {
    double sum = 0.0;
    for (std::size_t k = event_window; k < event_window + out.windows_used; ++k) sum += e(c, k) * e(c, k);
    out.per_sensor[series.channels()[c]] = std::sqrt(sum / static_cast<double>(out.windows_used));
  }
  return out;
}

std::vector<IntervalCounts> count_events_per_interval(const std::vector<FootstepEvent>& events,
                                                      const SensorArray& sensors, double interval, double t_start,
                                                      double t_end) {
  require(std::isfinite(interval) && interval > 0.0, ErrorCode::kInvalidArgument,
          "count_events_per_interval: interval must be positive");
  require(std::isfinite(t_start) && std::isfinite(t_end) && t_start < t_end, ErrorCode::kInvalidArgument,
          "count_events_per_interval: need t_start < t_end");

  const auto bins = static_cast<std::size_t>(std::ceil((t_end - t_start) / interval));
  std::vector<IntervalCounts> out;
  const auto make_group = [&](const std::string& zone) {
    IntervalCounts g{zone, std::vector<double>(bins), std::vector<std::size_t>(bins, 0)};
    for (std::size_t b = 0; b < bins; ++b) g.interval_start[b] = t_start + static_cast<double>(b) * interval;
    return g;
  };
  for (const auto& z : sensors.zones()) out.push_back(make_group(z));

  for (const auto& ev : events) {
    if (!(ev.time >= t_start && ev.time < t_end)) continue;
    std::string zone = "unassigned";
    double best = -1.0;
    for (const auto& s : sensors.sensors()) {
      const auto it = ev.per_sensor_energy.find(s.id);
      if (it != ev.per_sensor_energy.end() && it->second > best) {
        best = it->second;
        zone = s.zone;
      }
    }
    auto group = std::find_if(out.begin(), out.end(), [&](const IntervalCounts& g) { return g.zone == zone; });
    if (group == out.end()) {
      out.push_back(make_group(zone));
      group = out.end() - 1;
    }
    const auto bin = std::min(static_cast<std::size_t>(std::floor((ev.time - t_start) / interval)), bins - 1);
    ++group->counts[bin];
  }
  return out;
}

void save_energy_series(const std::filesystem::path& path, const EnergySeries& series) {
  auto out = csv::open_for_write(path);
  out << "window_index,t";
  for (const auto& c : series.channels()) out << ',' << c;
  out << '\n';
  for (std::size_t k = 0; k < series.window_count(); ++k) {
    out << k << ',' << csv::format(series.window_time(k));
    for (std::size_t c = 0; c < series.channel_count(); ++c) out << ',' << csv::format(series.energies()(c, k));
    out << '\n';
  }
  require(out.good(), ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace tremor
