#include "tremor/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tremor/csv.hpp"
#include "tremor/energy.hpp"
#include "tremor/random.hpp"

namespace tremor {

namespace fs = std::filesystem;

void Participant::validate(double sample_rate) const {
  require(std::isfinite(amplitude_scale) && amplitude_scale >= 0.0, ErrorCode::kInvalidArgument,
          "participant: amplitude_scale must be >= 0");
  require(std::isfinite(decay_rate) && decay_rate > 0.0, ErrorCode::kInvalidArgument,
          "participant: decay_rate must be > 0");
  require(std::isfinite(fundamental) && fundamental > 0.0 && fundamental < 0.5 * sample_rate,
          ErrorCode::kInvalidArgument, "participant: fundamental must lie in (0, sample_rate / 2)");
  require(std::isfinite(cadence) && cadence > 0.0, ErrorCode::kInvalidArgument, "participant: cadence must be > 0");
  require(std::isfinite(secondary_ratio) && secondary_ratio >= 0.0, ErrorCode::kInvalidArgument,
          "participant: secondary_ratio must be >= 0");
  require(std::isfinite(secondary_delay) && secondary_delay >= 0.0, ErrorCode::kInvalidArgument,
          "participant: secondary_delay must be >= 0");
  require(std::isfinite(secondary_phase), ErrorCode::kInvalidArgument, "participant: secondary_phase must be finite");
}

std::vector<double> footstep_waveform(const Participant& participant, double duration, double sample_rate) {
  require(std::isfinite(sample_rate) && sample_rate > 0.0, ErrorCode::kInvalidArgument,
          "footstep_waveform: sample_rate must be > 0");
  require(std::isfinite(duration) && duration > 0.0, ErrorCode::kInvalidArgument,
          "footstep_waveform: duration must be > 0");
  participant.validate(sample_rate);

  const auto n = seconds_to_samples(duration, sample_rate);
  const double a = participant.amplitude_scale;
  const double lambda = participant.decay_rate;
  const double omega = 2.0 * std::numbers::pi * participant.fundamental;
  std::vector<double> w(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / sample_rate;
    double v = a * std::exp(-lambda * t) * std::sin(omega * t);
    const double ts = t - participant.secondary_delay;
    if (ts >= 0.0) {
      v += participant.secondary_ratio * a * std::exp(-lambda * ts) * std::sin(omega * ts + participant.secondary_phase);
    }
    w[k] = v;
  }
  return w;
}

double damped_sine_energy_integral(double amplitude, double decay_rate, double fundamental, double duration) {
  const double alpha = 2.0 * decay_rate;
  const double b = 4.0 * std::numbers::pi * fundamental;
  const double decay_part = (1.0 - std::exp(-alpha * duration)) / alpha;
  const double cos_part =
      (std::exp(-alpha * duration) * (-alpha * std::cos(b * duration) + b * std::sin(b * duration)) + alpha) /
      (alpha * alpha + b * b);
  return 0.5 * amplitude * amplitude * (decay_part - cos_part);
}

void WalkScenario::validate() const {
  participant.validate(sample_rate);
  require(std::isfinite(beta) && beta >= 0.0, ErrorCode::kInvalidArgument, "scenario: beta must be >= 0");
  require(std::isfinite(noise_rms) && noise_rms >= 0.0, ErrorCode::kInvalidArgument,
          "scenario: noise_rms must be >= 0");
  require(std::isfinite(noisy_sensor_gain) && noisy_sensor_gain >= 0.0, ErrorCode::kInvalidArgument,
          "scenario: noisy_sensor_gain must be >= 0");
  require(first_step_delay >= 0.0 && tail >= 0.0 && waveform_duration > 0.0 && path_margin >= 0.0,
          ErrorCode::kInvalidArgument, "scenario: timing and margin parameters must be non-negative");
  require(amplitude_jitter >= 0.0 && fundamental_jitter >= 0.0 && secondary_phase_spread >= 0.0 && quantum >= 0.0,
          ErrorCode::kInvalidArgument,
          "scenario: jitter and quantum must be >= 0");
}

double noise_rms_for_snr(const Participant& participant, double snr_db, double sample_rate, double duration) {
  require(!std::isnan(snr_db) && snr_db != -INFINITY, ErrorCode::kInvalidArgument, "noise_rms_for_snr: bad SNR");
  if (snr_db == INFINITY) return 0.0;
  const auto w = footstep_waveform(participant, duration, sample_rate);
  const auto rms = window_rms(w, w.size()).front();
  return rms / std::pow(10.0, snr_db / 20.0);
}

SimulatedWalk simulate_walk(const WalkScenario& scenario, const SensorArray& sensors) {
  scenario.validate();
  const auto box = sensors.bounding_box().inflated(scenario.path_margin);
  for (const auto& w : scenario.path.waypoints()) {
    require(box.contains({w.x, w.y}), ErrorCode::kInvalidArgument,
            "simulate_walk: path leaves the sensor bounding box plus margin");
  }

  const double rate = scenario.sample_rate;
  const double start = scenario.path.start_time();
  std::vector<double> step_times;
  const double period = 1.0 / scenario.participant.cadence;
  for (double t = start + scenario.first_step_delay; t <= scenario.path.end_time() + 1e-12;
       t = start + scenario.first_step_delay + period * static_cast<double>(step_times.size())) {
    step_times.push_back(t);
  }
  require(!step_times.empty(), ErrorCode::kInvalidArgument, "simulate_walk: path is too short for any step");

  const auto n = seconds_to_samples(scenario.path.end_time() - start + scenario.tail, rate);
  Matrix samples(sensors.size(), n);
  const auto event_len = seconds_to_samples(kDefaultEventDuration, rate);

  SimulatedWalk out{VibrationRecord({}, Matrix(), rate, start), {}};
  Rng step_rng(derive_seed(scenario.seed, 0x57e9));
  for (const double t_nominal : step_times) {
    Participant step = scenario.participant;
    step.amplitude_scale *= std::max(0.0, 1.0 + scenario.amplitude_jitter * step_rng.normal());
    step.fundamental *= std::max(0.1, 1.0 + scenario.fundamental_jitter * step_rng.normal());
    step.fundamental = std::min(step.fundamental, 0.45 * rate);
    if (scenario.secondary_phase_spread > 0.0) step.secondary_phase += scenario.secondary_phase_spread * step_rng.uniform();
    const auto wave = footstep_waveform(step, scenario.waveform_duration, rate);

    const auto onset = seconds_to_samples(t_nominal - start, rate);
    if (onset >= n) continue;
    const double t = start + static_cast<double>(onset) / rate;
    const Point where = scenario.path.position_at(t);

    double event_sq = 0.0;
    for (std::size_t k = 0; k < std::min(event_len, wave.size()); ++k) event_sq += wave[k] * wave[k];
    const double event_rms = std::sqrt(event_sq / static_cast<double>(event_len));

    FootstepEvent ev;
    ev.window_index = onset;
    ev.time = t;
    ev.truth_location = where;
    ev.participant_id = scenario.participant.id;
    ev.sex_label = scenario.participant.sex_label;
    for (std::size_t i = 0; i < sensors.size(); ++i) {
      const double gain = std::exp(-scenario.beta * distance(where, sensors[i].position()));
      auto row = samples.row(i);
      for (std::size_t k = 0; k < wave.size() && onset + k < n; ++k) row[onset + k] += gain * wave[k];
      ev.per_sensor_energy[sensors[i].id] = gain * event_rms;
    }
    out.planted.push_back(std::move(ev));
  }

  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const double sigma = scenario.noise_rms * (sensors[i].noisy ? scenario.noisy_sensor_gain : 1.0);
    auto row = samples.row(i);
    if (sigma > 0.0) {
      Rng noise(derive_seed(scenario.seed, 0x6e01, i));
      for (auto& v : row) v += sigma * noise.normal();
    }
    if (scenario.quantum > 0.0) {
      for (auto& v : row) v = std::round(v / scenario.quantum) * scenario.quantum;
    }
  }

  std::vector<std::string> channels;
  for (const auto& s : sensors.sensors()) channels.push_back(s.id);
  out.record = VibrationRecord(std::move(channels), std::move(samples), rate, start);
  return out;
}

namespace {

using nlohmann::json;

Distribution read_distribution(const json& j, const char* key) {
  require(j.contains(key), ErrorCode::kValidation, std::string("presets: missing '") + key + "'");
  const auto& d = j.at(key);
  Distribution out{d.at("mean").get<double>(), d.value("sd", 0.0)};
  require(std::isfinite(out.mean) && std::isfinite(out.sd) && out.sd >= 0.0, ErrorCode::kValidation,
          std::string("presets: invalid distribution '") + key + "'");
  return out;
}

json write_distribution(const Distribution& d) { return json{{"mean", d.mean}, {"sd", d.sd}}; }

double draw_positive(Rng& rng, const Distribution& d, double lo, double hi) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double v = rng.normal(d.mean, d.sd);
    if (v > lo && v < hi) return v;
  }
  return std::clamp(d.mean, lo, hi);
}

}  // namespace

Presets Presets::defaults() {
  Presets p;
  // Only the fundamental separates the sexes within a footstep; windowed
  // energies lose it once windows span a few periods.
  p.by_sex[SexLabel::kFemale] = {{0.020, 0.0005}, {36.0, 3.0}, {10.0, 0.3}, {1.85, 0.08}};
  p.by_sex[SexLabel::kMale] = {{0.020, 0.0005}, {30.0, 3.0}, {10.0, 0.3}, {1.75, 0.08}};
  return p;
}

Presets presets_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("presets: ") + e.what());
  }
  Presets p;
  try {
    for (const char* label : {"F", "M"}) {
      require(doc.contains(label), ErrorCode::kValidation, std::string("presets: missing sex '") + label + "'");
      const auto& s = doc.at(label);
      p.by_sex[parse_sex_label(label)] = {read_distribution(s, "amplitude_scale"), read_distribution(s, "fundamental"),
                                          read_distribution(s, "decay_rate"), read_distribution(s, "cadence")};
    }
    p.secondary_ratio = doc.value("secondary_ratio", p.secondary_ratio);
    p.secondary_delay = doc.value("secondary_delay", p.secondary_delay);
    p.amplitude_jitter = doc.value("amplitude_jitter", p.amplitude_jitter);
    p.fundamental_jitter = doc.value("fundamental_jitter", p.fundamental_jitter);
    p.secondary_phase_spread = doc.value("secondary_phase_spread", p.secondary_phase_spread);
    p.stride_length = doc.value("stride_length", p.stride_length);
  } catch (const json::exception& e) {
    fail(ErrorCode::kValidation, std::string("presets: ") + e.what());
  }
  require(p.stride_length > 0.0, ErrorCode::kValidation, "presets: stride_length must be > 0");
  return p;
}

std::string presets_to_json(const Presets& presets) {
  json doc;
  for (const auto& [label, s] : presets.by_sex) {
    doc[std::string(to_string(label))] = {{"amplitude_scale", write_distribution(s.amplitude_scale)},
                                          {"fundamental", write_distribution(s.fundamental)},
                                          {"decay_rate", write_distribution(s.decay_rate)},
                                          {"cadence", write_distribution(s.cadence)}};
  }
  doc["secondary_ratio"] = presets.secondary_ratio;
  doc["secondary_delay"] = presets.secondary_delay;
  doc["amplitude_jitter"] = presets.amplitude_jitter;
  doc["fundamental_jitter"] = presets.fundamental_jitter;
  doc["secondary_phase_spread"] = presets.secondary_phase_spread;
  doc["stride_length"] = presets.stride_length;
  return doc.dump(2);
}

Presets load_presets(const fs::path& path) {
  require(fs::is_regular_file(path), ErrorCode::kIo, "cannot open presets '" + path.string() + "'");
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return presets_from_json(buffer.str());
}

Participant draw_participant(const Presets& presets, SexLabel sex, std::string id, std::uint64_t seed,
                             double sample_rate) {
  const auto it = presets.by_sex.find(sex);
  require(it != presets.by_sex.end(), ErrorCode::kValidation, "presets: no entry for sex " + std::string(to_string(sex)));
  const auto& p = it->second;
  Rng rng(seed);
  Participant out;
  out.id = std::move(id);
  out.sex_label = sex;
  out.amplitude_scale = draw_positive(rng, p.amplitude_scale, 0.0, 1e9);
  out.fundamental = draw_positive(rng, p.fundamental, 1.0, 0.45 * sample_rate);
  out.decay_rate = draw_positive(rng, p.decay_rate, 1.0, 1e9);
  out.cadence = draw_positive(rng, p.cadence, 0.5, 4.0);
  out.secondary_ratio = presets.secondary_ratio;
  out.secondary_delay = presets.secondary_delay;
  return out;
}

void DatasetSpec::validate() const {
  require(participants >= 2, ErrorCode::kValidation, "dataset: need at least 2 participants");
  require(participants % 2 == 0, ErrorCode::kValidation, "dataset: participant count must be even (balanced sexes)");
  require(trials_each >= 1, ErrorCode::kValidation, "dataset: trials_each must be >= 1");
  require(sample_rate > 0.0 && beta >= 0.0 && std::isfinite(snr_db), ErrorCode::kValidation,
          "dataset: invalid sample_rate, beta or snr_db");
  require(distance(hallway_start, hallway_end) > 0.0, ErrorCode::kValidation, "dataset: hallway has zero length");
  require(lateral_jitter >= 0.0 && quantum >= 0.0, ErrorCode::kValidation, "dataset: jitter and quantum must be >= 0");
}

namespace {

std::string participant_id(int p) {
  std::ostringstream s;
  s << 'P' << (p + 1 < 10 ? "0" : "") << (p + 1);
  return s.str();
}

Participant dataset_participant(const DatasetSpec& spec, int p) {
  const auto sex = p % 2 == 0 ? SexLabel::kFemale : SexLabel::kMale;
  return draw_participant(spec.presets, sex, participant_id(p), derive_seed(spec.seed, 1, static_cast<std::uint64_t>(p)),
                          spec.sample_rate);
}

// Noise level of the building, referenced to a walker with the preset means.
double dataset_noise_rms(const DatasetSpec& spec) {
  Participant typical;
  const auto& f = spec.presets.by_sex.at(SexLabel::kFemale);
  const auto& m = spec.presets.by_sex.at(SexLabel::kMale);
  typical.amplitude_scale = 0.5 * (f.amplitude_scale.mean + m.amplitude_scale.mean);
  typical.fundamental = 0.5 * (f.fundamental.mean + m.fundamental.mean);
  typical.decay_rate = 0.5 * (f.decay_rate.mean + m.decay_rate.mean);
  typical.secondary_ratio = spec.presets.secondary_ratio;
  typical.secondary_delay = spec.presets.secondary_delay;
  return noise_rms_for_snr(typical, spec.snr_db, spec.sample_rate);
}

}  // namespace

WalkScenario dataset_trial_scenario(const DatasetSpec& spec, const Participant& participant, int trial) {
  Rng rng(derive_seed(spec.seed, 2, hash_text(participant.id) ^ static_cast<std::uint64_t>(trial)));
  const double offset = spec.lateral_jitter * (2.0 * rng.uniform() - 1.0);
  Point from = spec.hallway_start;
  Point to = spec.hallway_end;
  if (trial % 2 == 1) std::swap(from, to);
  // Offset perpendicular to the hallway axis.
  const double len = distance(from, to);
  const double nx = -(to.y - from.y) / len;
  const double ny = (to.x - from.x) / len;
  from = {from.x + offset * nx, from.y + offset * ny};
  to = {to.x + offset * nx, to.y + offset * ny};

  const double speed = participant.cadence * spec.presets.stride_length;
  WalkScenario s;
  s.path = GroundTruthPath({{0.0, from.x, from.y}, {len / speed, to.x, to.y}});
  s.participant = participant;
  s.beta = spec.beta;
  s.noise_rms = dataset_noise_rms(spec);
  s.sample_rate = spec.sample_rate;
  s.seed = derive_seed(spec.seed, 3, rng.next());
  s.amplitude_jitter = spec.presets.amplitude_jitter;
  s.fundamental_jitter = spec.presets.fundamental_jitter;
  s.secondary_phase_spread = spec.presets.secondary_phase_spread;
  s.quantum = spec.quantum;
  return s;
}

TrialManifest make_labeled_dataset(const DatasetSpec& spec, const SensorArray& sensors, const fs::path& out_dir) {
  spec.validate();
  std::vector<Trial> trials;
  for (int p = 0; p < spec.participants; ++p) {
    const auto participant = dataset_participant(spec, p);
    for (int t = 0; t < spec.trials_each; ++t) {
      const std::string trial_id = participant.id + "_T" + std::to_string(t + 1);
      const auto scenario = dataset_trial_scenario(spec, participant, t);
      const auto walk = simulate_walk(scenario, sensors);
      const std::string record_rel = "records/" + trial_id + ".csv";
      const std::string truth_rel = "truth/" + trial_id + ".csv";
      save_record(out_dir / record_rel, walk.record);
      save_truth(out_dir / truth_rel, scenario.path);
      trials.push_back({trial_id, participant.id, participant.sex_label, record_rel, truth_rel});
    }
  }
  save_manifest(out_dir / "manifest.json", TrialManifest(trials, out_dir));
  return load_manifest(out_dir / "manifest.json");
}

}  // namespace tremor
