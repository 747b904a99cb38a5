#include "tremor/localize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "tremor/csv.hpp"

namespace tremor {

namespace {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

struct Problem {
  std::vector<Point> positions;
  std::vector<double> observed;  // normalized so the largest is 1
  BoundingBox box;
};

struct LmRun {
  Vec4 theta;  // x, y, ln E_s, ln beta
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

double cost_at(const Problem& p, const Vec4& theta) {
  const double es = std::exp(theta[2]);
  const double beta = std::exp(theta[3]);
  double cost = 0.0;
  for (std::size_t i = 0; i < p.positions.size(); ++i) {
    const double r = std::hypot(theta[0] - p.positions[i].x, theta[1] - p.positions[i].y);
    const double res = es * std::exp(-beta * r) - p.observed[i];
    cost += res * res;
  }
  return 0.5 * cost;
}

// Normal equations J^T J and gradient J^T r at theta.
void linearize(const Problem& p, const Vec4& theta, Mat4& jtj, Vec4& grad) {
  jtj.setZero();
  grad.setZero();
  const SourceParams src{theta[0], theta[1], std::exp(theta[2]), std::exp(theta[3])};
  for (std::size_t i = 0; i < p.positions.size(); ++i) {
    const auto row = forward_jacobian_row(src, p.positions[i]);
    const Eigen::Map<const Vec4> j(row.data());
    const double r = std::hypot(theta[0] - p.positions[i].x, theta[1] - p.positions[i].y);
    const double res = src.source_energy * std::exp(-src.beta * r) - p.observed[i];
    jtj.noalias() += j * j.transpose();
    grad.noalias() += j * res;
  }
}

Vec4 project(const Problem& p, Vec4 theta) {
  const auto c = p.box.clamp({theta[0], theta[1]});
  theta[0] = c.x;
  theta[1] = c.y;
  // Keep the exponentials representable.
  theta[2] = std::clamp(theta[2], -700.0, 700.0);
  theta[3] = std::clamp(theta[3], -50.0, 50.0);
  return theta;
}

// Observed energies are scaled so the largest is 1; a cost this small is a
// round-off level fit.
constexpr double kRoundoffCost = 1e-26;

// Largest cosine between the residual vector and a Jacobian column. Unlike
// the raw gradient this does not shrink with the residual, so a flat valley
// far from the minimum is not mistaken for one.
double optimality(const Mat4& jtj, const Vec4& grad, double cost) {
  const double rnorm = std::sqrt(2.0 * cost);
  if (rnorm == 0.0) return 0.0;
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (jtj(k, k) > 0.0) worst = std::max(worst, std::abs(grad[k]) / (std::sqrt(jtj(k, k)) * rnorm));
  }
  return worst;
}

LmRun levenberg_marquardt(const Problem& p, Vec4 theta, const FitConfig& cfg) {
  LmRun t;
  theta = project(p, theta);
  double cost = cost_at(p, theta);
  double lambda = cfg.damping_init;
  Mat4 jtj;
  Vec4 grad;
  linearize(p, theta, jtj, grad);
  const auto stationary = [&](double tol) { return cost <= kRoundoffCost || optimality(jtj, grad, cost) < tol; };

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    t.iterations = it;
    if (stationary(cfg.gradient_tol)) {
      t.converged = true;
      break;
    }
    bool accepted = false;
    while (lambda < 1e20) {
      Mat4 a = jtj;
      for (int k = 0; k < 4; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      const Vec4 step = a.ldlt().solve(-grad);
      const Vec4 candidate = project(p, theta + step);
      const double candidate_cost = cost_at(p, candidate);
      if (std::isfinite(candidate_cost) && candidate_cost < cost) {
        const double moved = (candidate - theta).norm();
        theta = candidate;
        cost = candidate_cost;
        lambda = std::max(lambda / 3.0, 1e-15);
        accepted = true;
        if (moved < cfg.step_tol * (theta.norm() + cfg.step_tol)) t.converged = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      t.converged = stationary(cfg.stall_gradient_tol);
      break;
    }
    linearize(p, theta, jtj, grad);
    if (t.converged) break;
  }
  if (!t.converged && stationary(cfg.gradient_tol)) t.converged = true;
  t.theta = theta;
  t.cost = cost;
  return t;
}

// Ratio of the smallest to the largest singular value of the centered
// coordinate matrix, from the 2x2 scatter matrix.
double planar_spread_ratio(const std::vector<Point>& pts) {
  double mx = 0.0, my = 0.0;
  for (const auto& q : pts) {
    mx += q.x;
    my += q.y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& q : pts) {
    sxx += (q.x - mx) * (q.x - mx);
    syy += (q.y - my) * (q.y - my);
    sxy += (q.x - mx) * (q.y - my);
  }
  const double half_trace = 0.5 * (sxx + syy);
  const double disc = std::sqrt(std::max(0.0, 0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy));
  const double lmax = half_trace + disc;
  const double lmin = std::max(0.0, half_trace - disc);
  if (lmax <= 0.0) return 0.0;
  return std::sqrt(lmin / lmax);
}

// ln E_i = ln E_s - beta r_i is linear once the position is fixed; regress it
// for the amplitude and decay starts. Falls back to beta_start when the slope
// has the wrong sign.
Vec4 log_linear_start(const Problem& p, Point s, double beta_start) {
  const double n = static_cast<double>(p.positions.size());
  double mr = 0.0, ml = 0.0;
  std::vector<double> r(p.positions.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = distance(s, p.positions[i]);
    mr += r[i] / n;
    ml += std::log(p.observed[i]) / n;
  }
  double srr = 0.0, srl = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    srr += (r[i] - mr) * (r[i] - mr);
    srl += (r[i] - mr) * (std::log(p.observed[i]) - ml);
  }
  const double slope = srr > 0.0 ? srl / srr : 0.0;
  if (!(slope < 0.0)) return {s.x, s.y, 0.0, std::log(beta_start)};  // E_s at the max observed energy
  return {s.x, s.y, ml - slope * mr, std::log(-slope)};
}

}  // namespace

void FitConfig::validate() const {
  require(max_iterations >= 1, ErrorCode::kInvalidArgument, "fit: max_iterations must be >= 1");
  require(gradient_tol > 0.0 && step_tol > 0.0 && stall_gradient_tol > 0.0, ErrorCode::kInvalidArgument,
          "fit: tolerances must be > 0");
  require(damping_init > 0.0, ErrorCode::kInvalidArgument, "fit: damping_init must be > 0");
  require(multistart_count >= 1, ErrorCode::kInvalidArgument, "fit: multistart_count must be >= 1");
  require(std::isfinite(zone_margin) && zone_margin >= 0.0, ErrorCode::kInvalidArgument,
          "fit: zone_margin must be >= 0");
  require(max_relative_residual > 0.0, ErrorCode::kInvalidArgument, "fit: max_relative_residual must be > 0");
  require(beta_start > 0.0, ErrorCode::kInvalidArgument, "fit: beta_start must be > 0");
}

std::vector<double> forward_energy(const SourceParams& source, const SensorArray& sensors) {
  require(std::isfinite(source.source_energy) && source.source_energy >= 0.0, ErrorCode::kInvalidArgument,
          "forward_energy: source energy must be >= 0");
  require(std::isfinite(source.beta) && source.beta >= 0.0, ErrorCode::kInvalidArgument,
          "forward_energy: beta must be >= 0");
  std::vector<double> out;
  out.reserve(sensors.size());
  for (const auto& s : sensors.sensors()) {
    out.push_back(source.source_energy * std::exp(-source.beta * distance({source.x, source.y}, s.position())));
  }
  return out;
}

std::array<double, 4> forward_jacobian_row(const SourceParams& source, Point sensor) {
  const double dx = source.x - sensor.x;
  const double dy = source.y - sensor.y;
  const double r = std::hypot(dx, dy);
  const double m = source.source_energy * std::exp(-source.beta * r);
  const double radial = r > 0.0 ? -m * source.beta / r : 0.0;
  return {radial * dx, radial * dy, m, -m * source.beta * r};
}

LocationEstimate fit_source(const std::map<std::string, double>& energies, const SensorArray& sensors,
                            const FitConfig& config) {
  config.validate();
  Problem p;
  std::vector<double> raw;
  for (const auto& s : sensors.sensors()) {
    const auto it = energies.find(s.id);
    if (it == energies.end() || !std::isfinite(it->second) || it->second <= 0.0) continue;
    p.positions.push_back(s.position());
    raw.push_back(it->second);
  }
  require(p.positions.size() >= 4, ErrorCode::kInsufficientData,
          "fit_source: need at least 4 sensors with positive energy, have " + std::to_string(p.positions.size()));
  require(planar_spread_ratio(p.positions) >= 1e-9, ErrorCode::kDegenerateGeometry,
          "fit_source: sensors are collinear");

  const double scale = *std::max_element(raw.begin(), raw.end());
  double observed_norm = 0.0;
  for (double e : raw) {
    p.observed.push_back(e / scale);
    observed_norm += (e / scale) * (e / scale);
  }
  observed_norm = std::sqrt(observed_norm);
  p.box = sensors.bounding_box().inflated(config.zone_margin);

  // Start candidates: centroid, each sensor nudged 10% toward the centroid
  // (the model has a cone singularity at r = 0, where the position gradient
  // vanishes) and a grid over the box. Each gets log-linear amplitude and
  // decay starts; the lowest-cost multistart_count candidates are refined.
  Point centroid;
  for (const auto& q : p.positions) {
    centroid.x += q.x / static_cast<double>(p.positions.size());
    centroid.y += q.y / static_cast<double>(p.positions.size());
  }
  std::vector<Point> candidates{centroid};
  for (const auto& q : p.positions) candidates.push_back({q.x + 0.1 * (centroid.x - q.x), q.y + 0.1 * (centroid.y - q.y)});
  constexpr int kGrid = 12;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      candidates.push_back({p.box.min_x + (i + 0.5) * (p.box.max_x - p.box.min_x) / kGrid,
                            p.box.min_y + (j + 0.5) * (p.box.max_y - p.box.min_y) / kGrid});
    }
  }
  std::vector<std::pair<double, Vec4>> scored;
  for (const auto& c : candidates) {
    const Vec4 theta = project(p, log_linear_start(p, c, config.beta_start));
    const double cost = cost_at(p, theta);
    scored.emplace_back(std::isfinite(cost) ? cost : std::numeric_limits<double>::infinity(), theta);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  scored.resize(std::min(scored.size(), static_cast<std::size_t>(config.multistart_count)));

  std::optional<LmRun> best;
  for (const auto& [score, theta0] : scored) {
    const auto t = levenberg_marquardt(p, theta0, config);
    if (!best) {
      best = t;
      continue;
    }
    const double tie = 1e-12 * std::max(best->cost, t.cost);
    if (t.cost < best->cost - tie || (std::abs(t.cost - best->cost) <= tie && t.iterations < best->iterations)) {
      best = t;
    }
  }

  LocationEstimate est;
  est.x = best->theta[0];
  est.y = best->theta[1];
  est.source_energy = std::exp(best->theta[2]) * scale;
  est.beta = std::exp(best->theta[3]);
  const double residual = std::sqrt(2.0 * best->cost);
  est.residual_norm = residual * scale;
  est.iterations = best->iterations;
  est.converged = best->converged && std::isfinite(est.residual_norm);
  est.implausible = est.converged && residual > config.max_relative_residual * observed_norm;
  return est;
}

LocationEstimate localize_event(const FootstepEvent& event, const SensorArray& sensors, std::string_view zone,
                                const FitConfig& config) {
  const auto zone_array = zone_sensors(sensors, zone);
  std::map<std::string, double> energies;
  double peak = 0.0;
  for (const auto& s : zone_array.sensors()) {
    const auto it = event.per_sensor_energy.find(s.id);
    if (it == event.per_sensor_energy.end()) continue;
    energies.emplace(s.id, it->second);
    if (std::isfinite(it->second)) peak = std::max(peak, it->second);
  }
  require(peak > 0.0, ErrorCode::kInsufficientData, "localize_event: no sensor in the zone saw any energy");
  for (auto& [id, e] : energies) e /= peak;

  auto est = fit_source(energies, zone_array, config);
  est.source_energy *= peak;
  est.residual_norm *= peak;
  return est;
}

PathEstimate reconstruct_path(const std::vector<FootstepEvent>& events, const SensorArray& sensors,
                              std::string_view zone, const FitConfig& config) {
  PathEstimate path;
  double sq_sum = 0.0;
  std::size_t with_truth = 0;
  for (const auto& ev : events) {
    LocationEstimate est;
    try {
      est = localize_event(ev, sensors, zone, config);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNotFound) throw;
      continue;
    }
    if (!est.converged) continue;
    PathPoint pt{ev.time, est, ev.truth_location};
    if (pt.truth) {
      const double d = distance(est.position(), *pt.truth);
      sq_sum += d * d;
      ++with_truth;
    }
    path.points.push_back(std::move(pt));
  }
  if (with_truth > 0) path.rmse = std::sqrt(sq_sum / static_cast<double>(with_truth));
  return path;
}

RecordLocalization localize_record(const VibrationRecord& record, const SensorArray& sensors, std::string_view zone,
                                   std::size_t window_len, const LocalizationConfig& config,
                                   const GroundTruthPath* truth) {
  const auto zone_array = zone_sensors(sensors, zone);
  std::vector<std::string> channels;
  std::vector<std::size_t> rows;
  for (const auto& s : zone_array.sensors()) {
    if (const auto idx = record.channel_index(s.id)) {
      channels.push_back(s.id);
      rows.push_back(*idx);
    }
  }
  require(!rows.empty(), ErrorCode::kValidation, "localize_record: record has no channels in zone");
  Matrix subset(rows.size(), record.sample_count());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = record.channel(rows[r]);
    std::copy(src.begin(), src.end(), subset.row(r).begin());
  }
  const VibrationRecord zone_record(std::move(channels), std::move(subset), record.sample_rate(), record.start_time());

  const auto series = windowed_energy(zone_record, window_len);
  RecordLocalization out;
  out.events = detect_events(series, config.detector);
  for (auto& ev : out.events) {
    ev.per_sensor_energy = event_energy(series, ev.window_index, config.event_duration).per_sensor;
    if (truth) ev.truth_location = truth->position_at(ev.time);
  }
  out.path = reconstruct_path(out.events, sensors, zone, config.fit);
  return out;
}

std::vector<WindowSweepRow> rmse_vs_window_size(const VibrationRecord& record, const GroundTruthPath& truth,
                                                const std::vector<double>& window_sizes, const SensorArray& sensors,
                                                std::string_view zone, const LocalizationConfig& config) {
  require(!window_sizes.empty(), ErrorCode::kInvalidArgument, "rmse_vs_window_size: no window sizes");
  for (std::size_t i = 0; i < window_sizes.size(); ++i) {
    require(std::isfinite(window_sizes[i]) && window_sizes[i] > 0.0, ErrorCode::kInvalidArgument,
            "rmse_vs_window_size: window sizes must be positive");
    require(i == 0 || window_sizes[i] > window_sizes[i - 1], ErrorCode::kInvalidArgument,
            "rmse_vs_window_size: window sizes must be ascending");
  }
  std::vector<WindowSweepRow> rows;
  for (const double ws : window_sizes) {
    WindowSweepRow row;
    row.window_s = ws;
    try {
      row.window_len = std::max<std::size_t>(1, seconds_to_samples(ws, record.sample_rate()));
      const auto result = localize_record(record, sensors, zone, row.window_len, config, &truth);
      row.n_events = result.events.size();
      row.n_localized = result.path.points.size();
      for (const auto& pt : result.path.points) {
        if (!pt.truth) continue;
        const double d = distance(pt.estimate.position(), *pt.truth);
        row.squared_error_sum += d * d;
      }
      row.rmse = result.path.rmse;
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_path(const std::filesystem::path& path, const PathEstimate& estimate) {
  auto out = csv::open_for_write(path);
  out << "t,x,y,E_s,beta,residual,converged\n";
  for (const auto& pt : estimate.points) {
    const auto& e = pt.estimate;
    out << csv::format(pt.time) << ',' << csv::format(e.x) << ',' << csv::format(e.y) << ','
        << csv::format(e.source_energy) << ',' << csv::format(e.beta) << ',' << csv::format(e.residual_norm) << ','
        << (e.converged ? 1 : 0) << '\n';
  }
  require(out.good(), ErrorCode::kIo, "write failed: " + path.string());
}

void save_window_sweep(const std::filesystem::path& path, const std::vector<WindowSweepRow>& rows) {
  auto out = csv::open_for_write(path);
  out << "window_s,rmse_m,n_events\n";
  for (const auto& r : rows) {
    out << csv::format(r.window_s) << ',' << (r.rmse ? csv::format(*r.rmse) : std::string()) << ',' << r.n_events
        << '\n';
  }
  require(out.good(), ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace tremor
