#include "tremor/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace tremor {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kRange: return "range";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kDegenerateGeometry: return "degenerate-geometry";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == m.cols(), ErrorCode::kInvalidArgument, "Matrix::from_rows: ragged rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

double distance(Point source, Point sensor) {
  require(std::isfinite(source.x) && std::isfinite(source.y) && std::isfinite(sensor.x) &&
              std::isfinite(sensor.y),
          ErrorCode::kInvalidArgument, "distance: non-finite coordinate");
  return std::hypot(source.x - sensor.x, source.y - sensor.y);
}

BoundingBox BoundingBox::inflated(double margin) const {
  return {min_x - margin, min_y - margin, max_x + margin, max_y + margin};
}

bool BoundingBox::contains(Point p) const {
  return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
}

Point BoundingBox::clamp(Point p) const {
  return {std::clamp(p.x, min_x, max_x), std::clamp(p.y, min_y, max_y)};
}

Point BoundingBox::center() const { return {0.5 * (min_x + max_x), 0.5 * (min_y + max_y)}; }

std::string_view to_string(SexLabel label) { return label == SexLabel::kFemale ? "F" : "M"; }

SexLabel parse_sex_label(std::string_view text) {
  if (text == "F") return SexLabel::kFemale;
  if (text == "M") return SexLabel::kMale;
  fail(ErrorCode::kParse, "sex label must be \"F\" or \"M\", got \"" + std::string(text) + "\"");
}

SensorArray::SensorArray(std::vector<Sensor> sensors) : sensors_(std::move(sensors)) {
  require(!sensors_.empty(), ErrorCode::kValidation, "SensorArray: no sensors");
  std::set<std::string, std::less<>> seen;
  for (const auto& s : sensors_) {
    require(!s.id.empty(), ErrorCode::kValidation, "SensorArray: empty sensor id");
    require(seen.insert(s.id).second, ErrorCode::kValidation, "SensorArray: duplicate sensor id '" + s.id + "'");
    require(std::isfinite(s.x) && std::isfinite(s.y), ErrorCode::kValidation,
            "SensorArray: non-finite coordinate for '" + s.id + "'");
    require(!s.zone.empty(), ErrorCode::kValidation, "SensorArray: sensor '" + s.id + "' has no zone");
    if (std::find(zones_.begin(), zones_.end(), s.zone) == zones_.end()) zones_.push_back(s.zone);
  }
}

std::optional<std::size_t> SensorArray::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < sensors_.size(); ++i) {
    if (sensors_[i].id == id) return i;
  }
  return std::nullopt;
}

const Sensor& SensorArray::at(std::string_view id) const {
  const auto i = index_of(id);
  require(i.has_value(), ErrorCode::kNotFound, "unknown sensor '" + std::string(id) + "'");
  return sensors_[*i];
}

bool SensorArray::has_zone(std::string_view zone) const {
  return std::find(zones_.begin(), zones_.end(), zone) != zones_.end();
}

BoundingBox SensorArray::bounding_box() const {
  BoundingBox box{sensors_[0].x, sensors_[0].y, sensors_[0].x, sensors_[0].y};
  for (const auto& s : sensors_) {
    box.min_x = std::min(box.min_x, s.x);
    box.min_y = std::min(box.min_y, s.y);
    box.max_x = std::max(box.max_x, s.x);
    box.max_y = std::max(box.max_y, s.y);
  }
  return box;
}

Point SensorArray::centroid() const {
  Point c;
  for (const auto& s : sensors_) {
    c.x += s.x;
    c.y += s.y;
  }
  const auto n = static_cast<double>(sensors_.size());
  return {c.x / n, c.y / n};
}

SensorArray zone_sensors(const SensorArray& array, std::string_view zone) {
  require(array.has_zone(zone), ErrorCode::kNotFound, "unknown zone '" + std::string(zone) + "'");
  std::vector<Sensor> subset;
  for (const auto& s : array.sensors()) {
    if (s.zone == zone && !s.noisy) subset.push_back(s);
  }
  require(!subset.empty(), ErrorCode::kInsufficientData,
          "zone '" + std::string(zone) + "' has no usable sensors");
  return SensorArray(std::move(subset));
}

VibrationRecord::VibrationRecord(std::vector<std::string> channels, Matrix samples, double sample_rate,
                                 double start_time)
    : channels_(std::move(channels)), samples_(std::move(samples)), sample_rate_(sample_rate),
      start_time_(start_time) {
  require(channels_.size() == samples_.rows(), ErrorCode::kValidation,
          "VibrationRecord: channel count does not match sample rows");
  require(std::isfinite(sample_rate_) && sample_rate_ > 0.0, ErrorCode::kValidation,
          "VibrationRecord: sample_rate must be positive");
  require(std::isfinite(start_time_), ErrorCode::kValidation, "VibrationRecord: non-finite start_time");
  std::set<std::string, std::less<>> seen;
  for (const auto& c : channels_) {
    require(seen.insert(c).second, ErrorCode::kValidation, "VibrationRecord: duplicate channel '" + c + "'");
  }
  for (std::size_t r = 0; r < samples_.rows(); ++r) {
    const auto row = samples_.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!std::isfinite(row[c])) {
        std::ostringstream msg;
        msg << "VibrationRecord: non-finite sample in channel '" << channels_[r] << "' at index " << c;
        fail(ErrorCode::kValidation, msg.str());
      }
    }
  }
}

std::optional<std::size_t> VibrationRecord::channel_index(std::string_view id) const {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i] == id) return i;
  }
  return std::nullopt;
}

void VibrationRecord::check_layout(const SensorArray& layout) const {
  for (const auto& c : channels_) {
    require(layout.index_of(c).has_value(), ErrorCode::kValidation,
            "channel '" + c + "' is not in the sensor layout");
  }
}

EnergySeries::EnergySeries(std::vector<std::string> channels, Matrix energies, std::size_t window_len,
                           double sample_rate, double start_time)
    : channels_(std::move(channels)), energies_(std::move(energies)), window_len_(window_len),
      sample_rate_(sample_rate), start_time_(start_time) {
  require(channels_.size() == energies_.rows(), ErrorCode::kValidation,
          "EnergySeries: channel count does not match energy rows");
  require(window_len_ >= 1, ErrorCode::kValidation, "EnergySeries: window_len must be >= 1");
  require(sample_rate_ > 0.0, ErrorCode::kValidation, "EnergySeries: sample_rate must be positive");
  for (double e : energies_.data()) {
    require(std::isfinite(e) && e >= 0.0, ErrorCode::kValidation, "EnergySeries: energies must be finite and >= 0");
  }
}

void FootstepEvent::validate() const {
  require(!per_sensor_energy.empty(), ErrorCode::kValidation, "FootstepEvent: no sensor energies");
  for (const auto& [id, e] : per_sensor_energy) {
    require(std::isfinite(e) && e >= 0.0, ErrorCode::kValidation,
            "FootstepEvent: energy for '" + id + "' must be finite and >= 0");
  }
}

std::size_t seconds_to_samples(double seconds, double sample_rate) {
  require(std::isfinite(seconds) && seconds >= 0.0 && sample_rate > 0.0, ErrorCode::kInvalidArgument,
          "seconds_to_samples: invalid arguments");
  // std::round rounds half away from zero.
  return static_cast<std::size_t>(std::round(seconds * sample_rate));
}

}  // namespace tremor
