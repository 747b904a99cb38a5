#include <benchmark/benchmark.h>

#include "tremor/energy.hpp"
#include "tremor/localize.hpp"
#include "tremor/privacy.hpp"
#include "tremor/random.hpp"
#include "tremor/synth.hpp"

namespace {

using namespace tremor;

SensorArray hallway() {
  return SensorArray({{"S01", 0, 0, "hall", false}, {"S02", 4, 0, "hall", false}, {"S03", 8, 0, "hall", false},
                      {"S04", 12, 0, "hall", false}, {"S05", 0, 3, "hall", false}, {"S06", 4, 3, "hall", false},
                      {"S07", 8, 3, "hall", false}, {"S08", 12, 3, "hall", false}});
}

VibrationRecord noise_record(std::size_t channels, std::size_t samples) {
  Rng rng(1);
  Matrix m(channels, samples);
  for (auto& v : m.data()) v = rng.normal();
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < channels; ++i) ids.push_back("C" + std::to_string(i));
  return VibrationRecord(ids, m, 4096.0, 0.0);
}

// Ten seconds of eight channels at 4096 Hz.
void BM_WindowedEnergy(benchmark::State& state) {
  const auto rec = noise_record(8, 40960);
  const auto w = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(windowed_energy(rec, w));
  state.SetItemsProcessed(state.iterations() * 8 * 40960);
}
BENCHMARK(BM_WindowedEnergy)->Arg(16)->Arg(64)->Arg(512);

void BM_FitSource(benchmark::State& state) {
  const auto sensors = hallway();
  Rng rng(2);
  std::vector<std::map<std::string, double>> events;
  for (int i = 0; i < 64; ++i) {
    const auto e = forward_energy({rng.uniform(0, 12), rng.uniform(0, 3), 1.0, 0.3}, sensors);
    std::map<std::string, double> m;
    for (std::size_t s = 0; s < sensors.size(); ++s) m[sensors[s].id] = e[s] * (1.0 + 0.05 * rng.normal());
    events.push_back(m);
  }
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(fit_source(events[i++ % events.size()], sensors, {}));
}
BENCHMARK(BM_FitSource);

void BM_DetectEvents(benchmark::State& state) {
  WalkScenario s;
  s.path = GroundTruthPath({{0.0, 0, 1.5}, {9.0, 12, 1.5}});
  s.noise_rms = noise_rms_for_snr(s.participant, 20.0, s.sample_rate);
  const auto series = windowed_energy(simulate_walk(s, hallway()).record, 64);
  for (auto _ : state) benchmark::DoNotOptimize(detect_events(series, {}));
}
BENCHMARK(BM_DetectEvents);

void BM_LoocvKnn(benchmark::State& state) {
  Rng rng(3);
  const std::size_t n = 500, d = 51;
  Matrix rows(n, d);
  std::vector<int> labels;
  std::vector<std::string> groups;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) rows(r, j) = rng.normal() + (r % 2 ? 0.3 : 0.0);
    labels.push_back(static_cast<int>(r % 2));
    groups.push_back("P" + std::to_string(r % 16));
  }
  const FeatureMatrix f(rows, labels, groups);
  for (auto _ : state) benchmark::DoNotOptimize(loocv_accuracy(parse_classifier("knn"), f, CvUnit::kParticipant));
}
BENCHMARK(BM_LoocvKnn)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
