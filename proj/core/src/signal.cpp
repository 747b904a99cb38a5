#include "tremor/signal.hpp"

#include <cmath>

namespace tremor {

std::vector<double> subtract_moving_average(std::span<const double> x, std::size_t radius) {
  const std::size_t n = x.size();
  // Prefix sums in long double; a 1 s kernel at 4 kHz sums thousands of terms.
  std::vector<long double> prefix(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = std::min({radius, i, n - 1 - i});
    const long double sum = prefix[i + r + 1] - prefix[i - r];
    out[i] = x[i] - static_cast<double>(sum / static_cast<long double>(2 * r + 1));
  }
  return out;
}

VibrationRecord detrend(const VibrationRecord& record, double window) {
  require(std::isfinite(window) && window > 0.0, ErrorCode::kInvalidArgument, "detrend: window must be positive");
  const std::size_t w = seconds_to_samples(window, record.sample_rate());
  require(w >= 1, ErrorCode::kInvalidArgument, "detrend: window shorter than one sample");
  require(w <= record.sample_count(), ErrorCode::kRange, "detrend: window longer than the record");

  Matrix out(record.channel_count(), record.sample_count());
  for (std::size_t c = 0; c < record.channel_count(); ++c) {
    const auto residual = subtract_moving_average(record.channel(c), w / 2);
    std::copy(residual.begin(), residual.end(), out.row(c).begin());
  }
  return VibrationRecord(record.channels(), std::move(out), record.sample_rate(), record.start_time());
}

AlignedFootstep align_footstep(const VibrationRecord& record, std::string_view sensor_id, double detect_time,
                               double pre, double post) {
  require(std::isfinite(pre) && std::isfinite(post) && pre >= 0.0 && post >= 0.0 && pre + post > 0.0,
          ErrorCode::kInvalidArgument, "align_footstep: pre and post must be non-negative with a positive sum");
  const auto channel = record.channel_index(sensor_id);
  require(channel.has_value(), ErrorCode::kNotFound, "align_footstep: unknown sensor '" + std::string(sensor_id) + "'");

  const double rate = record.sample_rate();
  const auto length = seconds_to_samples(pre + post, rate);
  const auto lead = seconds_to_samples(pre, rate);
  const double offset = std::round((detect_time - record.start_time()) * rate);
  require(std::isfinite(offset) && offset >= static_cast<double>(lead), ErrorCode::kRange,
          "align_footstep: window starts before the record");
  const auto first = static_cast<std::size_t>(offset) - lead;
  require(first + length <= record.sample_count(), ErrorCode::kRange, "align_footstep: window ends after the record");

  const auto src = record.channel(*channel).subspan(first, length);
  return AlignedFootstep{std::string(sensor_id), std::vector<double>(src.begin(), src.end()), pre, post, rate,
                         detect_time};
}

}  // namespace tremor
