#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tremor/core.hpp"

namespace tremor {

/// Fixed-length response of one sensor around a detected footstep.
struct AlignedFootstep {
  std::string sensor_id;
  std::vector<double> samples;
  double pre = 0.0;   // seconds kept before the detection instant
  double post = 0.0;  // seconds kept after it
  double sample_rate = 0.0;
  double detect_time = 0.0;
};

/// Subtracts a centered moving average from every channel.
///
/// The averaging radius is floor(w / 2) with w = round(window * sample_rate),
/// so the kernel spans 2 * floor(w / 2) + 1 samples. Near the ends the radius
/// shrinks symmetrically to the number of available neighbours, which keeps
/// straight lines exactly in the kernel's null space.
VibrationRecord detrend(const VibrationRecord& record, double window);

/// Single-channel form of detrend(); radius in samples.
std::vector<double> subtract_moving_average(std::span<const double> x, std::size_t radius);

/// Cuts round((pre + post) * sample_rate) samples from one channel, starting
/// round(pre * sample_rate) samples before the detection instant.
AlignedFootstep align_footstep(const VibrationRecord& record, std::string_view sensor_id, double detect_time,
                               double pre, double post);

}  // namespace tremor
