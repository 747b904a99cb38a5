#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tremor/cli.hpp"
#include "tremor/csv.hpp"

namespace tremor::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  require(j.at(key).is_number(), ErrorCode::kValidation, std::string("config: '") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::size_t count(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  require(v.is_number_integer() && v.get<long long>() >= 0, ErrorCode::kValidation,
          std::string("config: '") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

std::string text(const json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  require(j.at(key).is_string(), ErrorCode::kValidation, std::string("config: '") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::optional<double> window_entry(const json& v) {
  if (v.is_string()) {
    require(v.get<std::string>() == "raw", ErrorCode::kValidation,
            "config: window size strings must be \"raw\", got '" + v.get<std::string>() + "'");
    return std::nullopt;
  }
  require(v.is_number(), ErrorCode::kValidation, "config: window sizes must be numbers or \"raw\"");
  return v.get<double>();
}

ClassifierSpec classifier_entry(const json& v) {
  if (v.is_string()) return parse_classifier(v.get<std::string>());
  require(v.is_object() && v.contains("kind") && v.at("kind").is_string(), ErrorCode::kValidation,
          "config: classifier entries must be names or objects with a 'kind'");
  auto spec = parse_classifier(v.at("kind").get<std::string>());
  for (const auto& [key, value] : v.items()) {
    if (key == "kind") continue;
    require(value.is_number(), ErrorCode::kValidation, "config: hyperparameter '" + key + "' must be a number");
    spec.hyperparameters[key] = value.get<double>();
  }
  spec.validate();
  return spec;
}

CvUnit parse_unit(const std::string& s) {
  if (s == "participant") return CvUnit::kParticipant;
  if (s == "instance") return CvUnit::kInstance;
  fail(ErrorCode::kValidation, "config: cv_unit must be 'participant' or 'instance', got '" + s + "'");
}

}  // namespace

fs::path ExperimentConfig::dataset_manifest() const {
  return manifest_path.empty() ? output_dir / "dataset" / "manifest.json" : manifest_path;
}

void ExperimentConfig::validate() const {
  require(!output_dir.empty(), ErrorCode::kValidation, "config: output directory is empty");
  require(!window_sizes.empty(), ErrorCode::kValidation, "config: window_sizes is empty");
  for (std::size_t i = 0; i < window_sizes.size(); ++i) {
    if (!window_sizes[i]) {
      require(i == 0, ErrorCode::kValidation, "config: \"raw\" may only be the first window size");
      continue;
    }
    require(std::isfinite(*window_sizes[i]) && *window_sizes[i] > 0.0, ErrorCode::kValidation,
            "config: window sizes must be positive");
    require(i == 0 || !window_sizes[i - 1] || *window_sizes[i] > *window_sizes[i - 1], ErrorCode::kValidation,
            "config: window sizes must be ascending");
  }
  require(!classifiers.empty(), ErrorCode::kValidation, "config: no classifiers");
  for (const auto& c : classifiers) c.validate();
  detector.validate();
  fit.validate();
  require(event_duration > 0.0, ErrorCode::kValidation, "config: event_duration must be > 0");
  require(privacy.synthesis_folds >= 2, ErrorCode::kValidation, "config: synthesis_folds must be >= 2");
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.window_sizes = {std::nullopt, 1.0 / 256.0, 1.0 / 64.0, 1.0 / 16.0, 0.125, 0.25};
  c.classifiers = default_classifier_zoo();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kNotFound, "config not found: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  require(doc.is_object(), ErrorCode::kValidation, path.string() + ": top level must be an object");
  const fs::path base = path.parent_path();

  auto c = default_config();
  try {
    c.layout_path = resolve(base, text(doc, "layout", ""));
    c.manifest_path = resolve(base, text(doc, "manifest", ""));
    c.scenario_path = resolve(base, text(doc, "scenario", ""));
    if (doc.contains("output")) c.output_dir = resolve(base, text(doc, "output", ""));
    c.zone = text(doc, "zone", "");
    if (doc.contains("seed")) {
      require(doc.at("seed").is_number_unsigned(), ErrorCode::kValidation, "config: 'seed' must be a non-negative integer");
      c.seed = doc.at("seed").get<std::uint64_t>();
    }
    if (doc.contains("window_sizes")) {
      require(doc.at("window_sizes").is_array(), ErrorCode::kValidation, "config: 'window_sizes' must be a list");
      c.window_sizes.clear();
      for (const auto& v : doc.at("window_sizes")) c.window_sizes.push_back(window_entry(v));
    }
    if (doc.contains("classifiers")) {
      require(doc.at("classifiers").is_array(), ErrorCode::kValidation, "config: 'classifiers' must be a list");
      c.classifiers.clear();
      for (const auto& v : doc.at("classifiers")) c.classifiers.push_back(classifier_entry(v));
    }
    if (doc.contains("detector")) {
      const auto& d = doc.at("detector");
      c.detector.threshold_factor = number(d, "threshold_factor", c.detector.threshold_factor);
      c.detector.min_separation = number(d, "min_separation", c.detector.min_separation);
      c.detector.min_relative_peak = number(d, "min_relative_peak", c.detector.min_relative_peak);
      if (d.contains("noise_floor")) c.detector.noise_floor = d.at("noise_floor").get<std::vector<double>>();
    }
    if (doc.contains("fit")) {
      const auto& f = doc.at("fit");
      c.fit.max_iterations = static_cast<int>(count(f, "max_iterations", static_cast<std::size_t>(c.fit.max_iterations)));
      c.fit.gradient_tol = number(f, "gradient_tol", c.fit.gradient_tol);
      c.fit.step_tol = number(f, "step_tol", c.fit.step_tol);
      c.fit.stall_gradient_tol = number(f, "stall_gradient_tol", c.fit.stall_gradient_tol);
      c.fit.damping_init = number(f, "damping_init", c.fit.damping_init);
      c.fit.multistart_count = static_cast<int>(count(f, "multistart_count", static_cast<std::size_t>(c.fit.multistart_count)));
      c.fit.zone_margin = number(f, "zone_margin", c.fit.zone_margin);
      c.fit.max_relative_residual = number(f, "max_relative_residual", c.fit.max_relative_residual);
      c.fit.beta_start = number(f, "beta_start", c.fit.beta_start);
    }
    c.event_duration = number(doc, "event_duration", c.event_duration);
    if (doc.contains("privacy")) {
      const auto& p = doc.at("privacy");
      auto& ps = c.privacy;
      ps.cv_unit = parse_unit(text(p, "cv_unit", "participant"));
      ps.folds = count(p, "folds", ps.folds);
      ps.extraction.detrend_window = number(p, "detrend_window", ps.extraction.detrend_window);
      ps.extraction.detect_window = number(p, "detect_window", ps.extraction.detect_window);
      ps.extraction.pre = number(p, "pre", ps.extraction.pre);
      ps.extraction.post = number(p, "post", ps.extraction.post);
      ps.extraction.sensor = text(p, "sensor", ps.extraction.sensor);
      ps.synthesize = count(p, "synthesize", ps.synthesize);
      ps.synthesis_folds = count(p, "synthesis_folds", ps.synthesis_folds);
      ps.synthesis.primary_directions = count(p, "primary_directions", ps.synthesis.primary_directions);
      ps.synthesis.secondary_directions = count(p, "secondary_directions", ps.synthesis.secondary_directions);
      ps.synthesis.shrink = number(p, "shrink", ps.synthesis.shrink);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kValidation, path.string() + ": " + e.what());
  }
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  ordered_json doc;
  doc["layout"] = c.layout_path.generic_string();
  doc["manifest"] = c.dataset_manifest().generic_string();
  doc["scenario"] = c.scenario_path.generic_string();
  doc["output"] = c.output_dir.generic_string();
  doc["seed"] = c.seed;
  doc["zone"] = c.zone;
  ordered_json windows = ordered_json::array();
  for (const auto& w : c.window_sizes) {
    if (w) {
      windows.push_back(*w);
    } else {
      windows.push_back("raw");
    }
  }
  doc["window_sizes"] = windows;
  ordered_json classifiers = ordered_json::array();
  for (const auto& s : c.classifiers) {
    ordered_json entry;
    entry["kind"] = s.name();
    for (const auto& [k, v] : s.hyperparameters) entry[k] = v;
    classifiers.push_back(entry);
  }
  doc["classifiers"] = classifiers;
  doc["detector"] = {{"threshold_factor", c.detector.threshold_factor},
                     {"min_separation", c.detector.min_separation},
                     {"min_relative_peak", c.detector.min_relative_peak},
                     {"noise_floor", c.detector.noise_floor}};
  doc["fit"] = {{"max_iterations", c.fit.max_iterations},
                {"gradient_tol", c.fit.gradient_tol},
                {"step_tol", c.fit.step_tol},
                {"stall_gradient_tol", c.fit.stall_gradient_tol},
                {"damping_init", c.fit.damping_init},
                {"multistart_count", c.fit.multistart_count},
                {"zone_margin", c.fit.zone_margin},
                {"max_relative_residual", c.fit.max_relative_residual},
                {"beta_start", c.fit.beta_start}};
  doc["event_duration"] = c.event_duration;
  const auto& p = c.privacy;
  doc["privacy"] = {{"cv_unit", p.cv_unit == CvUnit::kParticipant ? "participant" : "instance"},
                    {"folds", p.folds},
                    {"detrend_window", p.extraction.detrend_window},
                    {"detect_window", p.extraction.detect_window},
                    {"pre", p.extraction.pre},
                    {"post", p.extraction.post},
                    {"sensor", p.extraction.sensor},
                    {"synthesize", p.synthesize},
                    {"synthesis_folds", p.synthesis_folds},
                    {"primary_directions", p.synthesis.primary_directions},
                    {"secondary_directions", p.synthesis.secondary_directions},
                    {"shrink", p.synthesis.shrink}};
  return doc.dump(2);
}

std::vector<std::optional<double>> parse_window_list(const std::string& list) {
  std::vector<std::optional<double>> out;
  std::size_t col = 0;
  for (const auto cell : csv::split(list)) {
    ++col;
    if (cell == "raw") {
      out.push_back(std::nullopt);
    } else {
      try {
        out.push_back(csv::parse_double(cell, 1, col));
      } catch (const Error&) {
        fail(ErrorCode::kValidation, "--window-sizes: '" + std::string(cell) + "' is not a number or 'raw'");
      }
    }
  }
  return out;
}

std::vector<ClassifierSpec> parse_classifier_list(const std::string& list) {
  std::vector<ClassifierSpec> out;
  for (const auto cell : csv::split(list)) out.push_back(parse_classifier(cell));
  return out;
}

}  // namespace tremor::cli
