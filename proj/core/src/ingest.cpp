#include "tremor/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "tremor/csv.hpp"

namespace tremor {

namespace fs = std::filesystem;

namespace {

void expect_header(const std::vector<std::string_view>& got, const std::vector<std::string_view>& want,
                   const fs::path& path) {
  if (got != want) {
    std::string expected;
    for (const auto& w : want) expected += (expected.empty() ? "" : ",") + std::string(w);
    fail(ErrorCode::kParse, path.string() + ": expected header '" + expected + "'");
  }
}

std::string ragged_message(const fs::path& path, std::size_t row, std::size_t got, std::size_t want) {
  return path.string() + ": row " + std::to_string(row) + " has " + std::to_string(got) + " columns, expected " +
         std::to_string(want);
}

}  // namespace

SensorArray load_layout(const fs::path& path) {
  csv::Reader reader(path);
  std::string line;
  require(reader.next(line), ErrorCode::kParse, path.string() + ": empty layout file");
  expect_header(csv::split(line), {"id", "x", "y", "zone", "noisy"}, path);

  std::vector<Sensor> sensors;
  while (reader.next(line)) {
    const auto cells = csv::split(line);
    const auto row = reader.line_number();
    require(cells.size() == 5, ErrorCode::kParse, ragged_message(path, row, cells.size(), 5));
    Sensor s;
    s.id = std::string(cells[0]);
    s.x = csv::parse_double(cells[1], row, 2);
    s.y = csv::parse_double(cells[2], row, 3);
    s.zone = std::string(cells[3]);
    if (cells[4] == "0") {
      s.noisy = false;
    } else if (cells[4] == "1") {
      s.noisy = true;
    } else {
      fail(ErrorCode::kParse, path.string() + ": row " + std::to_string(row) + ", column 5: noisy must be 0 or 1");
    }
    sensors.push_back(std::move(s));
  }
  return SensorArray(std::move(sensors));
}

void save_layout(const fs::path& path, const SensorArray& layout) {
  auto out = csv::open_for_write(path);
  out << "id,x,y,zone,noisy\n";
  for (const auto& s : layout.sensors()) {
    out << s.id << ',' << csv::format(s.x) << ',' << csv::format(s.y) << ',' << s.zone << ','
        << (s.noisy ? 1 : 0) << '\n';
  }
  require(out.good(), ErrorCode::kIo, "write failed: " + path.string());
}

VibrationRecord load_record(const fs::path& path, const SensorArray& layout) {
  csv::Reader reader(path);
  std::string line;
  require(reader.next(line), ErrorCode::kParse, path.string() + ": empty record file");
  const auto header = csv::split(line);
  require(header.size() >= 2 && header[0] == "t", ErrorCode::kParse,
          path.string() + ": header must start with 't' followed by sensor ids");

  // Column -> layout position; channels come back in layout order.
  std::vector<std::pair<std::size_t, std::string>> columns;
  std::set<std::string, std::less<>> seen;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string id(header[c]);
    const auto idx = layout.index_of(id);
    require(idx.has_value(), ErrorCode::kValidation,
            path.string() + ": column " + std::to_string(c + 1) + " channel '" + id + "' is not in the layout");
    require(seen.insert(id).second, ErrorCode::kValidation, path.string() + ": duplicate channel '" + id + "'");
    columns.emplace_back(*idx, id);
  }
  std::vector<std::size_t> order(columns.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return columns[a].first < columns[b].first; });

  const std::size_t n_channels = columns.size();
  std::vector<double> times;
  std::vector<std::vector<double>> by_column(n_channels);
  while (reader.next(line)) {
    const auto cells = csv::split(line);
    const auto row = reader.line_number();
    require(cells.size() == n_channels + 1, ErrorCode::kParse, ragged_message(path, row, cells.size(), n_channels + 1));
    const double t = csv::parse_double(cells[0], row, 1);
    require(times.empty() || t > times.back(), ErrorCode::kParse,
            path.string() + ": row " + std::to_string(row) + ": times must be strictly increasing");
    times.push_back(t);
    for (std::size_t c = 0; c < n_channels; ++c) {
      by_column[c].push_back(csv::parse_double(cells[c + 1], row, c + 2));
    }
  }
  require(times.size() >= 2, ErrorCode::kParse, path.string() + ": need at least two samples");

  const auto n = times.size();
  const double dt = (times.back() - times.front()) / static_cast<double>(n - 1);
  // Uniform to 1 ppm of the interval, or to the timestamp's own resolution when
  // large epoch times make 1 ppm unrepresentable.
  for (std::size_t i = 0; i < n; ++i) {
    const double expected = times.front() + static_cast<double>(i) * dt;
    const double resolution =
        4.0 * (std::nextafter(std::abs(times[i]), INFINITY) - std::abs(times[i]));
    const double tolerance = std::max(1e-6 * dt, resolution);
    require(std::abs(times[i] - expected) <= tolerance, ErrorCode::kParse,
            path.string() + ": row " + std::to_string(i + 2) + ": sample times are not uniform");
  }
  double rate = 1.0 / dt;
  if (const double snapped = std::round(rate); snapped > 0 && std::abs(rate - snapped) <= 1e-6 * rate) {
    rate = snapped;
  }

  std::vector<std::string> channels;
  Matrix samples(n_channels, n);
  for (std::size_t r = 0; r < n_channels; ++r) {
    const auto c = order[r];
    channels.push_back(columns[c].second);
    std::copy(by_column[c].begin(), by_column[c].end(), samples.row(r).begin());
  }
  return VibrationRecord(std::move(channels), std::move(samples), rate, times.front());
}

void save_record(const fs::path& path, const VibrationRecord& record) {
  auto out = csv::open_for_write(path);
  out << 't';
  for (const auto& c : record.channels()) out << ',' << c;
  out << '\n';
  const auto& samples = record.samples();
  std::string line;
  for (std::size_t i = 0; i < record.sample_count(); ++i) {
    line.clear();
    line += csv::format(record.start_time() + static_cast<double>(i) / record.sample_rate());
    for (std::size_t r = 0; r < samples.rows(); ++r) {
      line += ',';
      line += csv::format(samples(r, i));
    }
    line += '\n';
    out << line;
  }
  require(out.good(), ErrorCode::kIo, "write failed: " + path.string());
}

VibrationRecord clip_record(const VibrationRecord& record, double t0, double t1) {
  require(std::isfinite(t0) && std::isfinite(t1) && t0 < t1, ErrorCode::kRange, "clip_record: need t0 < t1");
  const double start = record.start_time();
  const double end = record.end_time();
  const double slack = 1e-9 / record.sample_rate();
  require(t0 >= start - slack && t1 <= end + slack, ErrorCode::kRange,
          "clip_record: [t0, t1) lies outside the record span");

  const auto index_of = [&](double t) {
    const double pos = (t - start) * record.sample_rate() - 1e-9;
    return static_cast<std::size_t>(std::clamp(std::ceil(pos), 0.0, static_cast<double>(record.sample_count())));
  };
  const auto i0 = index_of(t0);
  const auto i1 = index_of(t1);
  require(i1 > i0, ErrorCode::kRange, "clip_record: interval contains no samples");

  Matrix clipped(record.channel_count(), i1 - i0);
  for (std::size_t r = 0; r < record.channel_count(); ++r) {
    const auto src = record.channel(r);
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(i0), src.begin() + static_cast<std::ptrdiff_t>(i1),
              clipped.row(r).begin());
  }
  return VibrationRecord(record.channels(), std::move(clipped), record.sample_rate(),
                         start + static_cast<double>(i0) / record.sample_rate());
}

GroundTruthPath::GroundTruthPath(std::vector<Waypoint> waypoints) : waypoints_(std::move(waypoints)) {
  require(!waypoints_.empty(), ErrorCode::kValidation, "GroundTruthPath: no waypoints");
  for (std::size_t i = 0; i < waypoints_.size(); ++i) {
    const auto& w = waypoints_[i];
    require(std::isfinite(w.time) && std::isfinite(w.x) && std::isfinite(w.y), ErrorCode::kValidation,
            "GroundTruthPath: non-finite waypoint");
    require(i == 0 || w.time > waypoints_[i - 1].time, ErrorCode::kValidation,
            "GroundTruthPath: waypoint times must be strictly increasing");
  }
}

Point GroundTruthPath::position_at(double t) const {
  if (t <= waypoints_.front().time) return {waypoints_.front().x, waypoints_.front().y};
  if (t >= waypoints_.back().time) return {waypoints_.back().x, waypoints_.back().y};
  const auto hi = std::upper_bound(waypoints_.begin(), waypoints_.end(), t,
                                   [](double v, const Waypoint& w) { return v < w.time; });
  const auto lo = hi - 1;
  const double f = (t - lo->time) / (hi->time - lo->time);
  return {lo->x + f * (hi->x - lo->x), lo->y + f * (hi->y - lo->y)};
}

GroundTruthPath load_truth(const fs::path& path) {
  csv::Reader reader(path);
  std::string line;
  require(reader.next(line), ErrorCode::kParse, path.string() + ": empty truth file");
  expect_header(csv::split(line), {"t", "x", "y"}, path);
  std::vector<Waypoint> waypoints;
  while (reader.next(line)) {
    const auto cells = csv::split(line);
    const auto row = reader.line_number();
    require(cells.size() == 3, ErrorCode::kParse, ragged_message(path, row, cells.size(), 3));
    waypoints.push_back({csv::parse_double(cells[0], row, 1), csv::parse_double(cells[1], row, 2),
                         csv::parse_double(cells[2], row, 3)});
  }
  return GroundTruthPath(std::move(waypoints));
}

void save_truth(const fs::path& path, const GroundTruthPath& truth) {
  auto out = csv::open_for_write(path);
  out << "t,x,y\n";
  for (const auto& w : truth.waypoints()) {
    out << csv::format(w.time) << ',' << csv::format(w.x) << ',' << csv::format(w.y) << '\n';
  }
  require(out.good(), ErrorCode::kIo, "write failed: " + path.string());
}

TrialManifest::TrialManifest(std::vector<Trial> trials, fs::path base_dir)
    : trials_(std::move(trials)), base_dir_(std::move(base_dir)) {
  require(!trials_.empty(), ErrorCode::kValidation, "manifest has no trials");
  std::set<std::string, std::less<>> ids;
  for (const auto& t : trials_) {
    require(!t.trial_id.empty(), ErrorCode::kValidation, "manifest: empty trial_id");
    require(!t.participant_id.empty(), ErrorCode::kValidation, "manifest: trial '" + t.trial_id + "' has no participant");
    require(!t.record_path.empty(), ErrorCode::kValidation, "manifest: trial '" + t.trial_id + "' has no record_path");
    require(ids.insert(t.trial_id).second, ErrorCode::kValidation, "manifest: duplicate trial_id '" + t.trial_id + "'");
  }
  std::map<std::string, SexLabel> label_of;
  for (const auto& t : trials_) {
    const auto [it, inserted] = label_of.emplace(t.participant_id, t.sex_label);
    require(inserted || it->second == t.sex_label, ErrorCode::kValidation,
            "manifest: participant '" + t.participant_id + "' has conflicting sex labels");
  }
}

std::vector<std::string> TrialManifest::participants() const {
  std::vector<std::string> out;
  for (const auto& t : trials_) {
    if (std::find(out.begin(), out.end(), t.participant_id) == out.end()) out.push_back(t.participant_id);
  }
  return out;
}

std::map<SexLabel, std::size_t> TrialManifest::participants_per_label() const {
  std::map<SexLabel, std::size_t> counts{{SexLabel::kFemale, 0}, {SexLabel::kMale, 0}};
  std::set<std::string> counted;
  for (const auto& t : trials_) {
    if (counted.insert(t.participant_id).second) ++counts[t.sex_label];
  }
  return counts;
}

fs::path TrialManifest::record_path(const Trial& trial) const {
  const fs::path p(trial.record_path);
  return p.is_absolute() ? p : base_dir_ / p;
}

std::optional<fs::path> TrialManifest::truth_path(const Trial& trial) const {
  if (!trial.truth_path) return std::nullopt;
  const fs::path p(*trial.truth_path);
  return p.is_absolute() ? p : base_dir_ / p;
}

TrialManifest load_manifest(const fs::path& path) {
  require(fs::is_regular_file(path), ErrorCode::kIo, "cannot open manifest '" + path.string() + "'");
  std::ifstream in(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  require(doc.is_object() && doc.contains("trials") && doc["trials"].is_array(), ErrorCode::kValidation,
          path.string() + ": expected an object with a \"trials\" array");

  std::vector<Trial> trials;
  for (const auto& item : doc["trials"]) {
    try {
      Trial t;
      t.trial_id = item.at("trial_id").get<std::string>();
      t.participant_id = item.at("participant_id").get<std::string>();
      t.sex_label = parse_sex_label(item.at("sex_label").get<std::string>());
      t.record_path = item.at("record_path").get<std::string>();
      if (item.contains("truth_path") && !item["truth_path"].is_null()) {
        t.truth_path = item["truth_path"].get<std::string>();
      }
      trials.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kValidation, path.string() + ": malformed trial entry: " + e.what());
    }
  }
  TrialManifest manifest(std::move(trials), path.parent_path());
  for (const auto& t : manifest.trials()) {
    require(fs::is_regular_file(manifest.record_path(t)), ErrorCode::kValidation,
            path.string() + ": trial '" + t.trial_id + "' references missing record '" + t.record_path + "'");
    if (const auto truth = manifest.truth_path(t)) {
      require(fs::is_regular_file(*truth), ErrorCode::kValidation,
              path.string() + ": trial '" + t.trial_id + "' references missing truth '" + *t.truth_path + "'");
    }
  }
  return manifest;
}

void save_manifest(const fs::path& path, const TrialManifest& manifest) {
  nlohmann::ordered_json doc;
  doc["trials"] = nlohmann::ordered_json::array();
  for (const auto& t : manifest.trials()) {
    nlohmann::ordered_json item;
    item["trial_id"] = t.trial_id;
    item["participant_id"] = t.participant_id;
    item["sex_label"] = std::string(to_string(t.sex_label));
    item["record_path"] = t.record_path;
    item["truth_path"] = t.truth_path ? nlohmann::ordered_json(*t.truth_path) : nlohmann::ordered_json(nullptr);
    doc["trials"].push_back(std::move(item));
  }
  auto out = csv::open_for_write(path);
  out << doc.dump(2) << '\n';
  require(out.good(), ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace tremor
