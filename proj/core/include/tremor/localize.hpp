#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tremor/core.hpp"
#include "tremor/energy.hpp"
#include "tremor/ingest.hpp"

namespace tremor {

struct FitConfig {
  int max_iterations = 1000;
  // Largest cosine between the residual and a Jacobian column.
  double gradient_tol = 1e-10;
  double step_tol = 1e-12;      // relative to the parameter norm
  // When no damped step lowers the cost any more (round-off floor of a noisy
  // fit), the run counts as converged if that cosine is below this.
  double stall_gradient_tol = 1e-6;
  double damping_init = 1e-3;
  int multistart_count = 12;
  double zone_margin = 2.0;  // meters
  // Converged fits whose residual norm exceeds this fraction of the observed
  // energy norm are marked implausible.
  double max_relative_residual = 0.25;
  double beta_start = 0.3;  // 1/m

  void validate() const;
};

struct SourceParams {
  double x = 0.0;
  double y = 0.0;
  double source_energy = 0.0;
  double beta = 0.0;
};

/// Energy at each sensor under E_i = E_s * exp(-beta * r_i).
std::vector<double> forward_energy(const SourceParams& source, const SensorArray& sensors);

/// Jacobian row of forward_energy for one sensor with respect to
/// (x, y, ln E_s, ln beta). At r = 0 the position derivatives are taken as 0.
std::array<double, 4> forward_jacobian_row(const SourceParams& source, Point sensor);

/// Fits (x, y, E_s, beta) to observed energies by Levenberg-Marquardt over
/// (x, y, ln E_s, ln beta), from several starts, keeping the position inside
/// the sensors' bounding box inflated by zone_margin.
///
/// Sensors without a positive energy are ignored. Throws kInsufficientData with
/// fewer than four usable sensors and kDegenerateGeometry when they are
/// collinear. A fit that never meets a stopping test comes back with
/// converged = false rather than throwing.
LocationEstimate fit_source(const std::map<std::string, double>& energies, const SensorArray& sensors,
                            const FitConfig& config);

/// Restricts to the zone's usable sensors, normalizes by the largest energy and
/// fits. Energies are rescaled so source_energy is in the event's units.
LocationEstimate localize_event(const FootstepEvent& event, const SensorArray& sensors, std::string_view zone,
                                const FitConfig& config);

struct PathPoint {
  double time = 0.0;
  LocationEstimate estimate;
  std::optional<Point> truth;
};

struct PathEstimate {
  std::vector<PathPoint> points;
  std::optional<double> rmse;  // meters, over points with truth
};

/// Localizes each event, dropping failed or non-converged fits. Implausible
/// fits are kept and stay marked.
PathEstimate reconstruct_path(const std::vector<FootstepEvent>& events, const SensorArray& sensors,
                              std::string_view zone, const FitConfig& config);

struct LocalizationConfig {
  EventDetectorConfig detector;
  FitConfig fit;
  double event_duration = kDefaultEventDuration;
};

/// windowed_energy -> detect_events -> event_energy -> localize for one
/// window length, over the zone's channels. When `truth` is given each event
/// gets the interpolated true position at its time.
struct RecordLocalization {
  std::vector<FootstepEvent> events;
  PathEstimate path;
};
RecordLocalization localize_record(const VibrationRecord& record, const SensorArray& sensors, std::string_view zone,
                                   std::size_t window_len, const LocalizationConfig& config,
                                   const GroundTruthPath* truth = nullptr);

struct WindowSweepRow {
  double window_s = 0.0;
  std::size_t window_len = 0;
  std::optional<double> rmse;
  std::size_t n_events = 0;
  std::size_t n_localized = 0;
  double squared_error_sum = 0.0;  // over localized points with truth
  std::optional<std::string> error;
};

/// One row per window size. Pipeline failures are recorded in the row.
std::vector<WindowSweepRow> rmse_vs_window_size(const VibrationRecord& record, const GroundTruthPath& truth,
                                                const std::vector<double>& window_sizes, const SensorArray& sensors,
                                                std::string_view zone, const LocalizationConfig& config);

/// CSV `t,x,y,E_s,beta,residual,converged`.
void save_path(const std::filesystem::path& path, const PathEstimate& estimate);
/// CSV `window_s,rmse_m,n_events`; rmse empty when absent.
void save_window_sweep(const std::filesystem::path& path, const std::vector<WindowSweepRow>& rows);

}  // namespace tremor
