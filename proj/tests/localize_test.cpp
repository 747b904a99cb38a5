#include <cmath>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tremor/localize.hpp"
#include "tremor/random.hpp"
#include "tremor/synth.hpp"

namespace tremor {
namespace {

using testing::error_code_of;

std::map<std::string, double> as_map(const SensorArray& sensors, const std::vector<double>& e) {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < sensors.size(); ++i) out[sensors[i].id] = e[i];
  return out;
}

SensorArray random_array(Rng& rng, std::size_t n) {
  std::vector<Sensor> s;
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back({"R" + std::to_string(i), rng.uniform(0, 12), rng.uniform(0, 8), "z", false});
  }
  return SensorArray(s);
}

TEST(ForwardEnergy, Examples) {
  auto h = testing::hallway();
  for (double e : forward_energy({3, 1, 2.5, 0.0}, h)) EXPECT_EQ(e, 2.5);
  EXPECT_EQ(forward_energy({4, 0, 1.7, 0.4}, h)[1], 1.7);
  SensorArray one({{"a", 2, 0, "z", false}});
  EXPECT_NEAR(forward_energy({0, 0, 2.0, 0.5}, one)[0], 0.7357589, 1e-7);
  EXPECT_EQ(error_code_of([&] { forward_energy({0, 0, -1.0, 0.5}, one); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([&] { forward_energy({0, 0, 1.0, -0.5}, one); }), ErrorCode::kInvalidArgument);
}

// Model value with parameters in the fitted coordinates (x, y, ln E_s, ln beta).
double model(const std::array<double, 4>& th, Point s) {
  return std::exp(th[2]) * std::exp(-std::exp(th[3]) * std::hypot(th[0] - s.x, th[1] - s.y));
}

TEST(ForwardJacobian, MatchesCentralDifferences) {
  Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    const std::array<double, 4> th{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-2, 2),
                                   std::log(rng.uniform(0.05, 1.5))};
    Point s{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    if (std::hypot(th[0] - s.x, th[1] - s.y) < 0.05) continue;
    const auto row = forward_jacobian_row({th[0], th[1], std::exp(th[2]), std::exp(th[3])}, s);
    for (int k = 0; k < 4; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(th[k]));
      auto up = th, dn = th;
      up[k] += h;
      dn[k] -= h;
      const double fd = (model(up, s) - model(dn, s)) / (2 * h);
      EXPECT_NEAR(row[k], fd, 1e-6 * std::max(std::abs(fd), 1e-3 * model(th, s)));
    }
  }
}

TEST(FitSource, RecoversNoiselessSource) {
  Rng rng(42);
  int recovered = 0;
  for (int trial = 0; trial < 40; ++trial) {
    auto sensors = random_array(rng, 6);
    // Sources inside the sensors' hull box; the fit searches that box plus a margin.
    const auto box = sensors.bounding_box();
    const SourceParams truth{rng.uniform(box.min_x, box.max_x), rng.uniform(box.min_y, box.max_y),
                             rng.uniform(0.5, 3), rng.uniform(0.1, 0.8)};
    auto est = fit_source(as_map(sensors, forward_energy(truth, sensors)), sensors, {});
    const bool exact = std::hypot(est.x - truth.x, est.y - truth.y) < 1e-6 &&
                       std::abs(est.source_energy / truth.source_energy - 1) < 1e-6 &&
                       std::abs(est.beta / truth.beta - 1) < 1e-6;
    if (exact) {
      ++recovered;
      EXPECT_TRUE(est.converged);
    } else {
      EXPECT_FALSE(est.converged) << "silently wrong fit at trial " << trial;
    }
  }
  EXPECT_GE(recovered, 39);
}

TEST(FitSource, SquareSymmetry) {
  SensorArray square({{"a", 0, 0, "z", false}, {"b", 4, 0, "z", false}, {"c", 4, 4, "z", false},
                      {"d", 0, 4, "z", false}});
  auto est = fit_source({{"a", 1.0}, {"b", 1.0}, {"c", 1.0}, {"d", 1.0}}, square, {});
  EXPECT_NEAR(est.x, 2.0, 1e-6);
  EXPECT_NEAR(est.y, 2.0, 1e-6);
}

TEST(FitSource, Errors) {
  auto h = testing::hallway();
  EXPECT_EQ(error_code_of([&] { fit_source({{"S01", 1}, {"S02", 1}, {"S05", 1}}, h, {}); }),
            ErrorCode::kInsufficientData);
  // Zero energies are unusable.
  EXPECT_EQ(error_code_of([&] { fit_source({{"S01", 1}, {"S02", 1}, {"S05", 1}, {"S06", 0}}, h, {}); }),
            ErrorCode::kInsufficientData);
  EXPECT_EQ(error_code_of([&] { fit_source({{"S01", 1}, {"S02", 0.5}, {"S03", 0.3}, {"S04", 0.2}}, h, {}); }),
            ErrorCode::kDegenerateGeometry);
  FitConfig bad;
  bad.multistart_count = 0;
  EXPECT_EQ(error_code_of([&] { fit_source({}, h, bad); }), ErrorCode::kInvalidArgument);
}

TEST(FitSource, TranslationEquivariant) {
  Rng rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    auto sensors = random_array(rng, 8);
    const SourceParams truth{rng.uniform(2, 10), rng.uniform(2, 6), 1.0, 0.35};
    // A little structured perturbation so the optimum is not an exact zero.
    auto e = forward_energy(truth, sensors);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] *= 1.0 + 0.05 * std::sin(3.0 * static_cast<double>(i));
    const auto base = fit_source(as_map(sensors, e), sensors, {});

    const double dx = rng.uniform(-30, 30), dy = rng.uniform(-30, 30);
    std::vector<Sensor> moved;
    for (const auto& s : sensors.sensors()) moved.push_back({s.id, s.x + dx, s.y + dy, s.zone, s.noisy});
    const SensorArray shifted(moved);
    const auto est = fit_source(as_map(shifted, e), shifted, {});
    EXPECT_NEAR(est.x, base.x + dx, 1e-5);
    EXPECT_NEAR(est.y, base.y + dy, 1e-5);
    EXPECT_NEAR(est.beta, base.beta, 1e-6 * base.beta);
  }
}

TEST(FitSource, EnergyScaleInvariantInPosition) {
  Rng rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    auto sensors = random_array(rng, 7);
    auto e = forward_energy({rng.uniform(2, 10), rng.uniform(2, 6), 1.0, 0.4}, sensors);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] *= 1.0 + 0.05 * std::cos(5.0 * static_cast<double>(i));
    const auto base = fit_source(as_map(sensors, e), sensors, {});
    const double c = std::exp(rng.uniform(-6, 6));
    for (auto& v : e) v *= c;
    const auto est = fit_source(as_map(sensors, e), sensors, {});
    EXPECT_NEAR(est.x, base.x, 1e-6);
    EXPECT_NEAR(est.y, base.y, 1e-6);
    EXPECT_NEAR(est.beta, base.beta, 1e-6 * base.beta);
    EXPECT_NEAR(est.source_energy, c * base.source_energy, 1e-6 * c * base.source_energy);
  }
}

TEST(FitSource, NoWorseThanCentroidStart) {
  Rng rng(45);
  for (int trial = 0; trial < 20; ++trial) {
    auto sensors = random_array(rng, 6);
    std::vector<double> e(6);
    for (auto& v : e) v = rng.uniform(0.1, 1.0);
    const auto est = fit_source(as_map(sensors, e), sensors, {});
    const double peak = *std::max_element(e.begin(), e.end());
    const auto start = forward_energy({sensors.centroid().x, sensors.centroid().y, peak, 0.3}, sensors);
    double start_res = 0.0;
    for (std::size_t i = 0; i < 6; ++i) start_res += (start[i] - e[i]) * (start[i] - e[i]);
    EXPECT_LE(est.residual_norm, std::sqrt(start_res) * (1 + 1e-12));
    EXPECT_TRUE(sensors.bounding_box().inflated(FitConfig{}.zone_margin).contains(est.position()));
  }
}

TEST(LocalizeEvent, NoisyStepAtZoneCentroid) {
  auto h = testing::hallway();
  WalkScenario s;
  s.path = GroundTruthPath({{0.0, 6, 1.5}, {0.5, 6, 1.5}});
  s.noise_rms = noise_rms_for_snr(s.participant, 20.0, s.sample_rate);
  s.seed = 5;
  auto walk = simulate_walk(s, h);
  ASSERT_EQ(walk.planted.size(), 1u);
  auto result = localize_record(walk.record, h, "hall", 16, {});
  ASSERT_EQ(result.path.points.size(), 1u);
  EXPECT_LT(distance(result.path.points[0].estimate.position(), {6, 1.5}), 1.5);
}

TEST(LocalizeEvent, ZeroEnergiesAndUnknownZone) {
  auto h = testing::hallway();
  FootstepEvent ev;
  for (const auto& s : h.sensors()) ev.per_sensor_energy[s.id] = 0.0;
  EXPECT_EQ(error_code_of([&] { localize_event(ev, h, "hall", {}); }), ErrorCode::kInsufficientData);
  EXPECT_EQ(error_code_of([&] { localize_event(ev, h, "attic", {}); }), ErrorCode::kNotFound);
}

TEST(LocalizeEvent, CrossZoneFitIsFlagged) {
  SensorArray two({{"a1", 0, 0, "A", false},  {"a2", 4, 0, "A", false},  {"a3", 0, 3, "A", false},
                   {"a4", 4, 3, "A", false},  {"b1", 20, 0, "B", false}, {"b2", 24, 0, "B", false},
                   {"b3", 20, 3, "B", false}, {"b4", 24, 3, "B", false}, {"b5", 22, 1.5, "B", false}});
  auto e = forward_energy({2, 1.5, 1.0, 0.3}, two);
  // Zone B mostly hears its own sensor noise, loud at two opposite corners;
  // no single decaying source explains that.
  const double noise[] = {0.02, 0.001, 0.0012, 0.02, 0.0005};
  for (std::size_t i = 4; i < 9; ++i) e[i] += noise[i - 4];
  FootstepEvent ev;
  ev.per_sensor_energy = as_map(two, e);

  const auto own = localize_event(ev, two, "A", {});
  EXPECT_TRUE(own.converged);
  EXPECT_FALSE(own.implausible);
  EXPECT_NEAR(own.x, 2.0, 1e-3);

  const auto other = localize_event(ev, two, "B", {});
  EXPECT_TRUE(other.converged);
  EXPECT_TRUE(other.implausible);
}

TEST(ReconstructPath, EmptyInput) {
  auto p = reconstruct_path({}, testing::hallway(), "hall", {});
  EXPECT_TRUE(p.points.empty());
  EXPECT_FALSE(p.rmse.has_value());
}

TEST(ReconstructPath, StraightWalkAndIndependentRmse) {
  auto h = testing::hallway();
  WalkScenario s;
  s.path = GroundTruthPath({{0.0, 0, 1.5}, {11.0, 12, 1.5}});
  s.participant.cadence = 1.8;
  s.noise_rms = noise_rms_for_snr(s.participant, 20.0, s.sample_rate);
  s.seed = 9;
  auto walk = simulate_walk(s, h);
  ASSERT_EQ(walk.planted.size(), 20u);

  auto result = localize_record(walk.record, h, "hall", 64, {}, &s.path);
  const auto& pts = result.path.points;
  ASSERT_GE(pts.size(), 16u);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (pts[j].truth->x - pts[i].truth->x > 2.0) EXPECT_LT(pts[i].estimate.x, pts[j].estimate.x);
    }
  }
  double sq = 0.0;
  for (const auto& p : pts) {
    const double dx = p.estimate.x - p.truth->x, dy = p.estimate.y - p.truth->y;
    sq += dx * dx + dy * dy;
  }
  ASSERT_TRUE(result.path.rmse.has_value());
  EXPECT_NEAR(*result.path.rmse, std::sqrt(sq / static_cast<double>(pts.size())), 1e-12);
}

TEST(RmseVsWindowSize, RowsPerSize) {
  auto h = testing::hallway();
  WalkScenario s;
  s.path = GroundTruthPath({{0.0, 1, 1.5}, {3.0, 5, 1.5}});
  s.noise_rms = noise_rms_for_snr(s.participant, 20.0, s.sample_rate);
  auto walk = simulate_walk(s, h);

  auto one = rmse_vs_window_size(walk.record, s.path, {1.0 / 64}, h, "hall", {});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_TRUE(one[0].rmse.has_value());
  EXPECT_GT(one[0].n_events, 0u);

  auto rows = rmse_vs_window_size(walk.record, s.path, {1.0 / 64, 3.5}, h, "hall", {});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].n_events, 0u);
  EXPECT_FALSE(rows[1].rmse.has_value());

  EXPECT_EQ(error_code_of([&] { rmse_vs_window_size(walk.record, s.path, {0.1, 0.05}, h, "hall", {}); }),
            ErrorCode::kInvalidArgument);
  auto missing = rmse_vs_window_size(walk.record, s.path, {0.1}, h, "attic", {});
  EXPECT_TRUE(missing[0].error.has_value());
}

}  // namespace
}  // namespace tremor
