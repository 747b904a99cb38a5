#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "tremor/cli.hpp"
#include "tremor/csv.hpp"
#include "tremor/ingest.hpp"
#include "tremor/random.hpp"
#include "tremor/synth.hpp"
#include "tremor/version.hpp"

namespace tremor::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Setup problems exit 2, failures while running exit 1.
template <typename F>
bool prepare(F&& f) {
  try {
    f();
    return true;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << '\n';
    return false;
  }
}

template <typename F>
int execute(F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

SensorArray load_layout_checked(const ExperimentConfig& c) {
  require(!c.layout_path.empty(), ErrorCode::kValidation, "no sensor layout given (config 'layout' or --layout)");
  require(fs::exists(c.layout_path), ErrorCode::kNotFound, "layout not found: " + c.layout_path.string());
  return load_layout(c.layout_path);
}

TrialManifest load_manifest_checked(const ExperimentConfig& c) {
  const auto path = c.dataset_manifest();
  require(fs::exists(path), ErrorCode::kNotFound, "manifest not found: " + path.string());
  return load_manifest(path);
}

Point read_point(const json& j, const char* key, Point fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = j.at(key).get<std::vector<double>>();
  require(v.size() == 2, ErrorCode::kValidation, std::string("scenario: '") + key + "' must be [x, y]");
  return {v[0], v[1]};
}

DatasetSpec load_scenario(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kNotFound, "scenario not found: " + path.string());
  DatasetSpec spec;
  try {
    const auto doc = json::parse(in);
    spec.participants = doc.value("participants", spec.participants);
    spec.trials_each = doc.value("trials_each", spec.trials_each);
    spec.sample_rate = doc.value("sample_rate", spec.sample_rate);
    spec.beta = doc.value("beta", spec.beta);
    spec.snr_db = doc.value("snr_db", spec.snr_db);
    spec.lateral_jitter = doc.value("lateral_jitter", spec.lateral_jitter);
    spec.quantum = doc.value("quantum", spec.quantum);
    if (doc.contains("hallway")) {
      spec.hallway_start = read_point(doc.at("hallway"), "start", spec.hallway_start);
      spec.hallway_end = read_point(doc.at("hallway"), "end", spec.hallway_end);
    }
    if (doc.contains("presets")) {
      const auto& p = doc.at("presets");
      if (p.is_string()) {
        const fs::path pp(p.get<std::string>());
        spec.presets = load_presets(pp.is_absolute() ? pp : path.parent_path() / pp);
      } else {
        spec.presets = presets_from_json(p.dump());
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kValidation, path.string() + ": " + e.what());
  }
  spec.validate();
  return spec;
}

std::string fmt_cell(const std::optional<double>& v, int precision = 3) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << *v;
  return s.str();
}

std::string window_label(const std::optional<double>& w) { return w ? csv::format(*w) : "raw"; }

std::uint64_t privacy_seed(std::uint64_t root) { return derive_seed(root, hash_text("privacy")); }
std::uint64_t synthesis_seed(std::uint64_t root) { return derive_seed(root, hash_text("synthesize")); }

}  // namespace

int cmd_simulate(const ExperimentConfig& config) {
  std::optional<SensorArray> layout;
  DatasetSpec spec;
  if (!prepare([&] {
        require(!config.scenario_path.empty(), ErrorCode::kValidation, "no scenario given (config 'scenario' or --scenario)");
        layout = load_layout_checked(config);
        spec = load_scenario(config.scenario_path);
        spec.seed = config.seed;
      })) {
    return kConfigFailure;
  }
  return execute([&] {
    const auto dir = config.output_dir / "dataset";
    spdlog::info("simulating {} participants x {} trials into {}", spec.participants, spec.trials_each, dir.string());
    const auto manifest = make_labeled_dataset(spec, *layout, dir);
    std::cout << "participants=" << manifest.participants().size() << " trials=" << manifest.trials().size()
              << " seed=" << spec.seed << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_localize(const ExperimentConfig& config) {
  std::optional<SensorArray> layout;
  std::optional<TrialManifest> manifest;
  std::string zone;
  std::vector<double> windows;
  if (!prepare([&] {
        layout = load_layout_checked(config);
        manifest = load_manifest_checked(config);
        zone = config.zone.empty() ? layout->zones().front() : config.zone;
        zone_sensors(*layout, zone);
        for (const auto& w : config.window_sizes) {
          if (w) windows.push_back(*w);
        }
        require(!windows.empty(), ErrorCode::kValidation, "localize: no numeric window sizes");
      })) {
    return kConfigFailure;
  }

  return execute([&] {
    const LocalizationConfig lc{config.detector, config.fit, config.event_duration};
    const auto dir = config.output_dir / "localize";
    struct Pooled {
      std::size_t events = 0, localized = 0, truth_points = 0;
      double squared_error = 0.0;
    };
    std::vector<Pooled> pooled(windows.size());
    auto trials_out = csv::open_for_write(dir / "trials.csv");
    trials_out << "trial,window_s,n_events,n_localized,rmse_m,error\n";
    std::size_t failed = 0;

    for (const auto& trial : manifest->trials()) {
      std::optional<VibrationRecord> record;
      std::optional<GroundTruthPath> truth;
      try {
        record = load_record(manifest->record_path(trial), *layout);
        if (const auto tp = manifest->truth_path(trial)) truth = load_truth(*tp);
      } catch (const Error& e) {
        spdlog::warn("{}: {}", trial.trial_id, e.what());
        trials_out << trial.trial_id << ",,,,," << '"' << e.what() << '"' << '\n';
        ++failed;
        continue;
      }
      for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        const auto len = std::max<std::size_t>(1, seconds_to_samples(windows[wi], record->sample_rate()));
        try {
          const auto result = localize_record(*record, *layout, zone, len, lc, truth ? &*truth : nullptr);
          auto& p = pooled[wi];
          p.events += result.events.size();
          p.localized += result.path.points.size();
          for (const auto& pt : result.path.points) {
            if (!pt.truth) continue;
            const double d = distance(pt.estimate.position(), *pt.truth);
            p.squared_error += d * d;
            ++p.truth_points;
          }
          trials_out << trial.trial_id << ',' << csv::format(windows[wi]) << ',' << result.events.size() << ','
                     << result.path.points.size() << ','
                     << (result.path.rmse ? csv::format(*result.path.rmse) : std::string()) << ",\n";
          if (wi == 0) save_path(dir / "paths" / (trial.trial_id + ".csv"), result.path);
        } catch (const Error& e) {
          spdlog::warn("{} at {} s: {}", trial.trial_id, windows[wi], e.what());
          trials_out << trial.trial_id << ',' << csv::format(windows[wi]) << ",,,," << '"' << e.what() << '"' << '\n';
        }
      }
    }
    require(trials_out.good(), ErrorCode::kIo, "write failed: " + (dir / "trials.csv").string());
    require(failed < manifest->trials().size(), ErrorCode::kIo, "localize: every trial failed to load");

    std::vector<WindowSweepRow> rows;
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
      WindowSweepRow row;
      row.window_s = windows[wi];
      row.n_events = pooled[wi].events;
      row.n_localized = pooled[wi].localized;
      row.squared_error_sum = pooled[wi].squared_error;
      if (pooled[wi].truth_points > 0) {
        row.rmse = std::sqrt(pooled[wi].squared_error / static_cast<double>(pooled[wi].truth_points));
      }
      rows.push_back(row);
    }
    save_window_sweep(dir / "rmse_vs_window.csv", rows);

    std::cout << "zone=" << zone << " trials=" << manifest->trials().size() << '\n';
    std::cout << std::left << std::setw(12) << "window_s" << std::setw(10) << "rmse_m" << std::setw(10) << "events"
              << "localized\n";
    for (const auto& r : rows) {
      std::cout << std::setw(12) << csv::format(r.window_s) << std::setw(10) << fmt_cell(r.rmse) << std::setw(10)
                << r.n_events << r.n_localized << '\n';
    }
    return static_cast<int>(kOk);
  });
}

int cmd_privacy(const ExperimentConfig& config) {
  std::optional<SensorArray> layout;
  std::optional<TrialManifest> manifest;
  if (!prepare([&] {
        layout = load_layout_checked(config);
        manifest = load_manifest_checked(config);
        require(manifest->participants_per_label().size() == 2, ErrorCode::kValidation,
                "privacy: the manifest needs participants of both labels");
      })) {
    return kConfigFailure;
  }

  return execute([&] {
    const auto dir = config.output_dir / "privacy";
    const auto footsteps = collect_footsteps(*manifest, *layout, config.privacy.extraction);
    require(!footsteps.empty(), ErrorCode::kInsufficientData, "privacy: no footsteps detected");
    const auto raw = extract_features(footsteps, std::nullopt);
    const double rate = footsteps.front().footstep.sample_rate;
    spdlog::info("{} footsteps of {} samples", raw.size(), raw.dim());

    SweepOptions options;
    options.cv = CvOptions{config.privacy.cv_unit, config.privacy.folds, 0};
    options.root_seed = privacy_seed(config.seed);
    const auto rows = anonymization_sweep(raw, rate, config.classifiers, config.window_sizes, options);
    save_sweep(dir / "sweep.csv", rows);
    save_pca_scatter(dir / "pca_scatter.csv", pca_fit(raw, 2), raw);

    std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> summary;
    for (const auto& r : rows) {
      if (r.error) spdlog::warn("{} at {}: {}", r.classifier, window_label(r.window_s), *r.error);
      if (!r.window_s) summary[r.classifier].first = r.accuracy;
      if (r.window_s && std::abs(*r.window_s - 0.125) < 1e-12) summary[r.classifier].second = r.accuracy;
    }

    std::optional<std::vector<SweepRow>> synthetic;
    if (config.privacy.synthesize > 0) {
      const auto syn = svd_synthesize(raw, config.privacy.synthesize, synthesis_seed(config.seed), config.privacy.synthesis);
      SweepOptions syn_options;
      syn_options.cv = CvOptions{CvUnit::kInstance, config.privacy.synthesis_folds, 0};
      syn_options.root_seed = derive_seed(synthesis_seed(config.seed), 1);
      synthetic = anonymization_sweep(syn.features, rate, config.classifiers, config.window_sizes, syn_options);
      save_sweep(dir / "synthetic_sweep.csv", *synthetic);
    }

    std::cout << "footsteps=" << raw.size() << " dim=" << raw.dim()
              << " class_balance=" << fmt_cell(rows.front().class_balance) << '\n';
    std::cout << std::left << std::setw(12) << "classifier" << std::setw(10) << "raw" << "0.125s\n";
    for (const auto& spec : config.classifiers) {
      const auto& s = summary[spec.name()];
      std::cout << std::setw(12) << spec.name() << std::setw(10) << fmt_cell(s.first) << fmt_cell(s.second) << '\n';
    }
    if (synthetic) {
      std::cout << "synthetic rows=" << 2 * config.privacy.synthesize << '\n';
      for (const auto& r : *synthetic) {
        std::cout << std::setw(12) << r.classifier << std::setw(12) << window_label(r.window_s) << fmt_cell(r.accuracy)
                  << '\n';
      }
    }
    return static_cast<int>(kOk);
  });
}

namespace {

json csv_table(const fs::path& path) {
  csv::Reader reader(path);
  std::string line;
  require(reader.next(line), ErrorCode::kParse, path.string() + ": empty file");
  std::vector<std::string> header;
  for (const auto h : csv::split(line)) header.emplace_back(h);
  json rows = json::array();
  while (reader.next(line)) {
    const auto cells = csv::split(line);
    require(cells.size() == header.size(), ErrorCode::kParse,
            path.string() + ": row " + std::to_string(reader.line_number()) + " has the wrong number of columns");
    json row = json::object();
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string cell(cells[i]);
      if (cell.empty()) {
        row[header[i]] = nullptr;
        continue;
      }
      try {
        row[header[i]] = csv::parse_double(cell, reader.line_number(), i + 1);
      } catch (const Error&) {
        row[header[i]] = cell;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

int cmd_report(const ExperimentConfig& config) {
  const auto rmse_csv = config.output_dir / "localize" / "rmse_vs_window.csv";
  const auto sweep_csv = config.output_dir / "privacy" / "sweep.csv";
  const auto synthetic_csv = config.output_dir / "privacy" / "synthetic_sweep.csv";
  if (!fs::exists(rmse_csv) && !fs::exists(sweep_csv)) {
    std::cerr << "error: nothing to report; missing " << rmse_csv.string() << " and " << sweep_csv.string() << '\n';
    return kConfigFailure;
  }
  return execute([&] {
    json doc;
    doc["tool"] = "tremor";
    doc["version"] = kVersion;
    doc["config"] = json::parse(config_to_json(config));
    doc["seeds"] = {{"root", config.seed},
                    {"privacy_sweep", privacy_seed(config.seed)},
                    {"synthesis", synthesis_seed(config.seed)}};
    if (fs::exists(rmse_csv)) doc["localization"]["rmse_vs_window"] = csv_table(rmse_csv);
    if (fs::exists(sweep_csv)) doc["privacy"]["sweep"] = csv_table(sweep_csv);
    if (fs::exists(synthetic_csv)) doc["privacy"]["synthetic_sweep"] = csv_table(synthetic_csv);
    const auto out_path = config.output_dir / "report.json";
    auto out = csv::open_for_write(out_path);
    out << doc.dump(2) << '\n';
    require(out.good(), ErrorCode::kIo, "write failed: " + out_path.string());
    std::cout << "report=" << out_path.string() << '\n';
    return static_cast<int>(kOk);
  });
}

}  // namespace tremor::cli
