#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tremor/energy.hpp"
#include "tremor/localize.hpp"
#include "tremor/synth.hpp"

namespace tremor {
namespace {

using testing::error_code_of;
using testing::read_file;
using testing::TempDir;

double rms(const std::vector<double>& x) { return window_rms(x, x.size()).front(); }

TEST(FootstepWaveform, NullSource) {
  Participant p;
  p.amplitude_scale = 0.0;
  for (double v : footstep_waveform(p, 0.5, 4096.0)) EXPECT_EQ(v, 0.0);
}

TEST(FootstepWaveform, PeakInFirstPeriod) {
  for (double f : {20.0, 30.0, 45.0}) {
    Participant p;
    p.fundamental = f;
    const auto w = footstep_waveform(p, 0.6, 4096.0);
    const auto peak = std::max_element(w.begin(), w.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    EXPECT_LT(static_cast<double>(peak - w.begin()) / 4096.0, 1.0 / f);
  }
}

TEST(FootstepWaveform, EnergyRatioMatchesClosedForm) {
  const auto presets = Presets::defaults();
  const auto from_preset = [&](SexLabel sex, double amplitude_factor, double decay_factor) {
    const auto& s = presets.by_sex.at(sex);
    Participant p;
    p.amplitude_scale = s.amplitude_scale.mean * amplitude_factor;
    p.fundamental = s.fundamental.mean;
    p.decay_rate = s.decay_rate.mean * decay_factor;
    p.secondary_ratio = 0.0;
    return p;
  };
  // The default presets share amplitude and decay; perturb them so the ratio is not trivially 1.
  const auto f = from_preset(SexLabel::kFemale, 0.8, 1.5);
  const auto m = from_preset(SexLabel::kMale, 1.0, 1.0);
  const double T = 0.5, rate = 4096.0;
  const double measured = rms(footstep_waveform(f, T, rate)) / rms(footstep_waveform(m, T, rate));
  const double closed = std::sqrt(damped_sine_energy_integral(f.amplitude_scale, f.decay_rate, f.fundamental, T) /
                                  damped_sine_energy_integral(m.amplitude_scale, m.decay_rate, m.fundamental, T));
  EXPECT_NEAR(measured, closed, 1e-3 * closed);
  EXPECT_NE(closed, 1.0);
}

TEST(FootstepWaveform, InvalidParameters) {
  Participant p;
  p.decay_rate = 0.0;
  EXPECT_EQ(error_code_of([&] { footstep_waveform(p, 0.5, 4096.0); }), ErrorCode::kInvalidArgument);
  p = {};
  p.fundamental = 3000.0;
  EXPECT_EQ(error_code_of([&] { footstep_waveform(p, 0.5, 4096.0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([&] { footstep_waveform({}, 0.0, 4096.0); }), ErrorCode::kInvalidArgument);
}

WalkScenario one_step_at(Point where) {
  WalkScenario s;
  s.path = GroundTruthPath({{0.0, where.x, where.y}, {0.4, where.x, where.y}});
  return s;
}

TEST(SimulateWalk, StepOnSensorDominates) {
  auto h = testing::hallway();
  auto walk = simulate_walk(one_step_at({8, 0}), h);
  ASSERT_EQ(walk.planted.size(), 1u);
  const auto series = windowed_energy(walk.record, 128);
  const auto ev = event_energy(series, walk.planted[0].window_index / 128, 0.5);
  const auto loudest = std::max_element(ev.per_sensor.begin(), ev.per_sensor.end(),
                                        [](const auto& a, const auto& b) { return a.second < b.second; });
  EXPECT_EQ(loudest->first, "S03");
}

TEST(SimulateWalk, EventEnergiesFollowForwardModel) {
  auto h = testing::hallway();
  WalkScenario s;
  s.path = GroundTruthPath({{0.0, 1, 1.0}, {4.0, 11, 2.0}});
  s.beta = 0.4;
  auto walk = simulate_walk(s, h);
  ASSERT_GE(walk.planted.size(), 6u);
  const auto len = seconds_to_samples(kDefaultEventDuration, s.sample_rate);
  const double source = walk.planted[0].per_sensor_energy.at("S01") /
                        std::exp(-s.beta * distance(*walk.planted[0].truth_location, {0, 0}));
  for (const auto& p : walk.planted) {
    const auto predicted = forward_energy({p.truth_location->x, p.truth_location->y, source, s.beta}, h);
    for (std::size_t i = 0; i < h.size(); ++i) {
      const auto x = walk.record.channel(i).subspan(p.window_index, len);
      const double measured = window_rms(x, len).front();
      EXPECT_NEAR(measured / predicted[i], 1.0, 0.01) << h[i].id << " at t=" << p.time;
    }
  }
}

TEST(SimulateWalk, Deterministic) {
  auto h = testing::hallway();
  WalkScenario s;
  s.path = GroundTruthPath({{0.0, 1, 1.5}, {3.0, 5, 1.5}});
  s.noise_rms = 1e-3;
  s.amplitude_jitter = 0.1;
  s.secondary_phase_spread = 1.0;
  s.seed = 77;
  EXPECT_EQ(simulate_walk(s, h).record, simulate_walk(s, h).record);
  auto other = s;
  other.seed = 78;
  EXPECT_FALSE(simulate_walk(other, h).record == simulate_walk(s, h).record);
}

TEST(SimulateWalk, HalvingAmplitudeHalvesEnergy) {
  auto h = testing::hallway();
  WalkScenario s;
  s.path = GroundTruthPath({{0.0, 1, 1.5}, {3.0, 5, 1.5}});
  auto half = s;
  half.participant.amplitude_scale *= 0.5;
  const auto full_e = windowed_energy(simulate_walk(s, h).record, 64).energies();
  const auto half_e = windowed_energy(simulate_walk(half, h).record, 64).energies();
  for (std::size_t i = 0; i < full_e.data().size(); ++i) EXPECT_EQ(half_e.data()[i], 0.5 * full_e.data()[i]);
}

TEST(SimulateWalk, EnergyIsLogLinearInDistance) {
  std::vector<Sensor> line;
  for (int i = 0; i < 10; ++i) line.push_back({"L" + std::to_string(i), 1.5 * i, 0.4 * (i % 2), "z", false});
  const SensorArray sensors(line);
  auto walk = simulate_walk(one_step_at({0.2, 0.1}), sensors);
  const auto len = seconds_to_samples(kDefaultEventDuration, 4096.0);
  std::vector<double> r, lne;
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    r.push_back(distance({0.2, 0.1}, sensors[i].position()));
    lne.push_back(std::log(window_rms(walk.record.channel(i).subspan(walk.planted[0].window_index, len), len).front()));
  }
  const double n = static_cast<double>(r.size());
  double mr = 0, me = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    mr += r[i] / n;
    me += lne[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    sxy += (r[i] - mr) * (lne[i] - me);
    sxx += (r[i] - mr) * (r[i] - mr);
    syy += (lne[i] - me) * (lne[i] - me);
  }
  EXPECT_GE(sxy * sxy / (sxx * syy), 0.99);
  EXPECT_NEAR(sxy / sxx, -0.3, 1e-6);
}

TEST(SimulateWalk, DetectionFidelityAtTwentyDb) {
  auto h = testing::hallway();
  WalkScenario s;
  s.path = GroundTruthPath({{0.0, 0, 1.5}, {16.0, 12, 1.5}});
  s.noise_rms = noise_rms_for_snr(s.participant, 20.0, s.sample_rate);
  s.amplitude_jitter = 0.15;
  s.secondary_phase_spread = 6.0;
  s.seed = 12;
  auto walk = simulate_walk(s, h);
  const std::size_t w = 64;
  auto events = detect_events(windowed_energy(walk.record, w), {});
  // A detection matches a plant when it falls within 0.1 s after the onset.
  std::size_t hits = 0;
  std::vector<bool> used(events.size(), false);
  for (const auto& p : walk.planted) {
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (!used[i] && events[i].time >= p.time - 0.02 && events[i].time <= p.time + 0.1) {
        used[i] = true;
        ++hits;
        break;
      }
    }
  }
  EXPECT_GE(static_cast<double>(hits) / static_cast<double>(walk.planted.size()), 0.95);
  EXPECT_GE(static_cast<double>(hits) / static_cast<double>(events.size()), 0.95);
}

TEST(SimulateWalk, PathTooShortOrOutside) {
  auto h = testing::hallway();
  WalkScenario s;
  s.path = GroundTruthPath({{0.0, 1, 1}, {0.1, 1, 1}});
  EXPECT_EQ(error_code_of([&] { simulate_walk(s, h); }), ErrorCode::kInvalidArgument);
  s.path = GroundTruthPath({{0.0, 1, 1}, {2.0, 40, 1}});
  EXPECT_EQ(error_code_of([&] { simulate_walk(s, h); }), ErrorCode::kInvalidArgument);
}

TEST(NoiseForSnr, TwentyDbIsTenfold) {
  Participant p;
  const auto w = footstep_waveform(p, 0.5, 4096.0);
  EXPECT_NEAR(noise_rms_for_snr(p, 20.0, 4096.0) * 10.0, rms(w), 1e-15);
  EXPECT_EQ(noise_rms_for_snr(p, INFINITY, 4096.0), 0.0);
  EXPECT_EQ(error_code_of([&] { noise_rms_for_snr(p, NAN, 4096.0); }), ErrorCode::kInvalidArgument);
}

TEST(Presets, JsonRoundTripAndDataFile) {
  const auto d = Presets::defaults();
  EXPECT_EQ(presets_to_json(presets_from_json(presets_to_json(d))), presets_to_json(d));
  EXPECT_EQ(presets_to_json(load_presets(testing::data_dir() / "presets.json")), presets_to_json(d));
  EXPECT_EQ(error_code_of([] { presets_from_json("{\"F\":{}}"); }), ErrorCode::kValidation);
  EXPECT_EQ(error_code_of([] { presets_from_json("{"); }), ErrorCode::kParse);
}

TEST(Presets, DrawIsDeterministicAndBounded) {
  const auto d = Presets::defaults();
  auto a = draw_participant(d, SexLabel::kMale, "P02", 5, 4096.0);
  auto b = draw_participant(d, SexLabel::kMale, "P02", 5, 4096.0);
  EXPECT_EQ(a.fundamental, b.fundamental);
  EXPECT_EQ(a.sex_label, SexLabel::kMale);
  EXPECT_NO_THROW(a.validate(4096.0));
}

TEST(LabeledDataset, SixteenBalancedParticipants) {
  TempDir dir("synth");
  DatasetSpec spec;
  spec.trials_each = 1;
  auto m = make_labeled_dataset(spec, testing::hallway(), dir.path());
  EXPECT_EQ(m.participants().size(), 16u);
  EXPECT_EQ(m.participants_per_label().at(SexLabel::kFemale), 8u);
  EXPECT_EQ(m.participants_per_label().at(SexLabel::kMale), 8u);
  EXPECT_EQ(m.trials().size(), 16u);
  for (const auto& t : m.trials()) EXPECT_TRUE(m.truth_path(t).has_value());
}

TEST(LabeledDataset, RejectsDegenerateSpecs) {
  TempDir dir("synth");
  DatasetSpec spec;
  spec.trials_each = 0;
  EXPECT_EQ(error_code_of([&] { make_labeled_dataset(spec, testing::hallway(), dir.path()); }),
            ErrorCode::kValidation);
  spec.trials_each = 1;
  spec.participants = 3;
  EXPECT_EQ(error_code_of([&] { make_labeled_dataset(spec, testing::hallway(), dir.path()); }),
            ErrorCode::kValidation);
}

TEST(LabeledDataset, ByteIdenticalRegeneration) {
  TempDir a("synth"), b("synth");
  DatasetSpec spec;
  spec.participants = 4;
  spec.trials_each = 1;
  make_labeled_dataset(spec, testing::hallway(), a.path());
  make_labeled_dataset(spec, testing::hallway(), b.path());
  std::size_t compared = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), a.path());
    EXPECT_EQ(read_file(entry.path()), read_file(b.path() / rel)) << rel;
    ++compared;
  }
  EXPECT_EQ(compared, 9u);
}

}  // namespace
}  // namespace tremor
