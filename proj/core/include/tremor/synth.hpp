#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "tremor/core.hpp"
#include "tremor/ingest.hpp"

namespace tremor {

/// Footstep source parameters of one walker.
struct Participant {
  std::string id;
  SexLabel sex_label = SexLabel::kFemale;
  double amplitude_scale = 0.02;  // m/s^2, peak of the primary impact envelope
  double decay_rate = 10.0;       // 1/s
  double fundamental = 30.0;      // Hz
  double cadence = 1.8;           // steps/s
  // Toe-roll impact after the heel strike.
  double secondary_ratio = 0.4;
  double secondary_delay = 0.06;  // s
  double secondary_phase = 0.0;   // rad, relative to the heel strike oscillation

  void validate(double sample_rate) const;
};

/// a*exp(-l*t)*sin(2*pi*f*t) plus the delayed secondary impact, sampled at
/// t = k / sample_rate for k < round(duration * sample_rate).
std::vector<double> footstep_waveform(const Participant& participant, double duration, double sample_rate);

/// Closed-form integral of (a*exp(-l*t)*sin(2*pi*f*t))^2 over [0, T].
double damped_sine_energy_integral(double amplitude, double decay_rate, double fundamental, double duration);

struct WalkScenario {
  GroundTruthPath path{{{0.0, 0.0, 0.0}}};
  Participant participant;
  double beta = 0.3;        // 1/m, energy attenuation
  double noise_rms = 0.0;   // m/s^2 per channel
  double noisy_sensor_gain = 10.0;  // noise multiplier on sensors flagged noisy
  double sample_rate = 4096.0;
  std::uint64_t seed = 0;
  double first_step_delay = 0.3;  // s after the path starts
  double tail = 0.6;              // s recorded after the path ends
  double waveform_duration = 0.6; // s simulated per step
  double path_margin = 2.0;       // m outside the sensor bounding box
  // Per-step relative jitter of amplitude and fundamental.
  double amplitude_jitter = 0.0;
  double fundamental_jitter = 0.0;
  // Per-step secondary phase drawn uniformly from [0, spread). A fixed phase
  // makes heel/toe interference, and so windowed energy, depend on frequency.
  double secondary_phase_spread = 0.0;
  // ADC resolution; samples are rounded to multiples of it when > 0.
  double quantum = 0.0;

  void validate() const;
};

struct SimulatedWalk {
  VibrationRecord record;
  /// One event per step: onset time, sample index, true location, labels, and
  /// the noiseless event energy (RMS over kDefaultEventDuration) per sensor.
  std::vector<FootstepEvent> planted;
};

/// Places steps along the path at the participant's cadence. Sensor i sees
/// each step's waveform scaled by exp(-beta * r_i), so RMS event energies
/// follow E_s * exp(-beta * r_i). Independent Gaussian noise per channel.
SimulatedWalk simulate_walk(const WalkScenario& scenario, const SensorArray& sensors);

/// Noise RMS giving the requested SNR against the unattenuated footstep's RMS
/// over `duration` seconds (the event-energy span). +inf dB gives 0.
double noise_rms_for_snr(const Participant& participant, double snr_db, double sample_rate,
                         double duration = 0.5);

struct Distribution {
  double mean = 0.0;
  double sd = 0.0;
};

struct SexPreset {
  Distribution amplitude_scale;
  Distribution fundamental;
  Distribution decay_rate;
  Distribution cadence;
};

struct Presets {
  std::map<SexLabel, SexPreset> by_sex;
  double secondary_ratio = 0.4;
  double secondary_delay = 0.06;
  double amplitude_jitter = 0.15;
  double fundamental_jitter = 0.04;
  double secondary_phase_spread = 2.0 * std::numbers::pi;
  double stride_length = 0.75;  // m per step

  static Presets defaults();
};

Presets load_presets(const std::filesystem::path& path);
Presets presets_from_json(const std::string& text);
std::string presets_to_json(const Presets& presets);

/// Draws a participant's parameters from the preset for their sex.
Participant draw_participant(const Presets& presets, SexLabel sex, std::string id, std::uint64_t seed,
                             double sample_rate);

struct DatasetSpec {
  int participants = 16;
  int trials_each = 2;
  Presets presets = Presets::defaults();
  std::uint64_t seed = 7;
  double sample_rate = 4096.0;
  double beta = 0.3;
  double snr_db = 20.0;
  Point hallway_start{0.0, 1.5};
  Point hallway_end{12.0, 1.5};
  double lateral_jitter = 0.1;  // m, per-trial offset across the hallway
  double quantum = 1e-7;

  void validate() const;
};

/// Walking trials for balanced participants (P01.. alternate F, M). Writes
/// records/<trial>.csv, truth/<trial>.csv and manifest.json under out_dir and
/// returns the manifest as loaded back from disk.
TrialManifest make_labeled_dataset(const DatasetSpec& spec, const SensorArray& sensors,
                                   const std::filesystem::path& out_dir);

/// Scenario for one trial of make_labeled_dataset; exposed so tests can rebuild
/// the exact simulation behind a file on disk.
WalkScenario dataset_trial_scenario(const DatasetSpec& spec, const Participant& participant, int trial);

}  // namespace tremor
