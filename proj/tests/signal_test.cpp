#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tremor/random.hpp"
#include "tremor/signal.hpp"

namespace tremor {
namespace {

using testing::error_code_of;

VibrationRecord one_channel(std::vector<double> x, double rate, double start = 0.0) {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.row(0).begin());
  return VibrationRecord({"S01"}, m, rate, start);
}

// Direct O(n * w) centered average with symmetric shrink at the edges.
std::vector<double> brute_detrend(const std::vector<double>& x, std::size_t w) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = w / 2;
    r = std::min(r, i);
    r = std::min(r, n - 1 - i);
    double s = 0.0;
    for (std::size_t j = i - r; j <= i + r; ++j) s += x[j];
    out[i] = x[i] - s / static_cast<double>(2 * r + 1);
  }
  return out;
}

TEST(Detrend, ConstantBecomesZero) {
  auto d = detrend(one_channel(std::vector<double>(500, 5.0), 100.0), 1.0);
  for (double v : d.channel(0)) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Detrend, LineInteriorVanishes) {
  const double rate = 100.0;
  std::vector<double> ramp(1000);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i) / 999.0;
  auto d = detrend(one_channel(ramp, rate), 1.0);
  for (std::size_t i = 50; i < 950; ++i) EXPECT_LT(std::abs(d.channel(0)[i]), 1e-9);
}

TEST(Detrend, KeepsFiftyHertz) {
  const double rate = 1000.0;
  std::vector<double> x(5000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * std::numbers::pi * 50.0 * static_cast<double>(i) / rate);
  auto d = detrend(one_channel(x, rate), 1.0);
  double peak = 0.0;
  for (std::size_t i = 1000; i < 4000; ++i) peak = std::max(peak, std::abs(d.channel(0)[i]));
  EXPECT_NEAR(peak, 1.0, 0.02);
}

TEST(Detrend, MatchesBruteForce) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 50 + rng.index(300);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal(0.0, 1.0) + 0.01 * static_cast<double>(&v - x.data());
    const double window = rng.uniform(0.02, 0.5 * static_cast<double>(n) / 100.0);
    auto d = detrend(one_channel(x, 100.0), window);
    const auto expect = brute_detrend(x, seconds_to_samples(window, 100.0));
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(d.channel(0)[i], expect[i], 1e-12);
  }
}

TEST(Detrend, IdempotentAndShapePreserving) {
  Rng rng(22);
  Matrix m(3, 2048);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < 2048; ++i) {
      m(c, i) = std::sin(2 * std::numbers::pi * 30.0 * static_cast<double>(i) / 256.0) + rng.normal(0, 0.1) +
                0.5 * static_cast<double>(i) / 2048.0 * static_cast<double>(c);
    }
  }
  VibrationRecord r({"a", "b", "c"}, m, 256.0, 0.0);
  auto once = detrend(r, 1.0);
  auto twice = detrend(once, 1.0);
  EXPECT_EQ(once.channels(), r.channels());
  EXPECT_EQ(once.sample_count(), r.sample_count());
  double scale = 0.0;
  for (double v : once.samples().data()) scale = std::max(scale, std::abs(v));
  // Interior samples: the second pass only removes the residual mean there.
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 256; i < 2048 - 256; ++i) {
      EXPECT_LT(std::abs(twice.samples()(c, i) - once.samples()(c, i)), 1e-2 * scale);
    }
  }
}

TEST(Detrend, Errors) {
  auto r = one_channel(std::vector<double>(100, 1.0), 100.0);
  EXPECT_EQ(error_code_of([&] { detrend(r, 2.0); }), ErrorCode::kRange);
  EXPECT_EQ(error_code_of([&] { detrend(r, 0.0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([&] { detrend(r, 0.001); }), ErrorCode::kInvalidArgument);
}

TEST(AlignFootstep, LengthAtFourKilohertz) {
  auto r = one_channel(std::vector<double>(4096 * 2, 0.0), 4096.0);
  auto f = align_footstep(r, "S01", 1.0, 0.1, 0.3);
  EXPECT_EQ(f.samples.size(), 1638u);
}

TEST(AlignFootstep, WindowAtOrigin) {
  std::vector<double> x(64);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  auto r = one_channel(x, 16.0, 2.0);
  auto f = align_footstep(r, "S01", 2.0, 0.0, 10.0 / 16.0);
  ASSERT_EQ(f.samples.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(f.samples[i], static_cast<double>(i));
}

TEST(AlignFootstep, DetectionSitsPreSamplesIn) {
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  auto r = one_channel(x, 100.0);
  auto f = align_footstep(r, "S01", 5.0, 0.1, 0.3);
  EXPECT_EQ(f.samples[10], 500.0);
}

TEST(AlignFootstep, EqualLengthsForAnyDetection) {
  auto r = one_channel(std::vector<double>(4096 * 3, 0.0), 4096.0);
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(align_footstep(r, "S01", rng.uniform(0.2, 2.5), 0.1, 0.3).samples.size(), 1638u);
  }
}

TEST(AlignFootstep, Errors) {
  auto r = one_channel(std::vector<double>(1000, 0.0), 100.0);
  EXPECT_EQ(error_code_of([&] { align_footstep(r, "S01", 0.05, 0.1, 0.3); }), ErrorCode::kRange);
  EXPECT_EQ(error_code_of([&] { align_footstep(r, "S01", 9.9, 0.1, 0.3); }), ErrorCode::kRange);
  EXPECT_EQ(error_code_of([&] { align_footstep(r, "S99", 5.0, 0.1, 0.3); }), ErrorCode::kNotFound);
}

}  // namespace
}  // namespace tremor
