#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "tremor/csv.hpp"
#include "tremor/privacy.hpp"
#include "tremor/random.hpp"

namespace tremor {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> view(const Matrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

}  // namespace

FeatureMatrix::FeatureMatrix(Matrix rows, std::vector<int> labels, std::vector<std::string> groups)
    : rows_(std::move(rows)), labels_(std::move(labels)), groups_(std::move(groups)) {
  require(rows_.rows() == labels_.size() && labels_.size() == groups_.size(), ErrorCode::kValidation,
          "FeatureMatrix: row, label and group counts differ");
  for (int l : labels_) require(l == 0 || l == 1, ErrorCode::kValidation, "FeatureMatrix: labels must be 0 or 1");
  for (double v : rows_.data()) require(std::isfinite(v), ErrorCode::kValidation, "FeatureMatrix: non-finite feature");
}

std::size_t FeatureMatrix::count_label(int label) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

FeatureMatrix FeatureMatrix::subset(std::span<const std::size_t> indices) const {
  Matrix rows(indices.size(), dim());
  std::vector<int> labels;
  std::vector<std::string> groups;
  labels.reserve(indices.size());
  groups.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = rows_.row(indices[i]);
    std::copy(src.begin(), src.end(), rows.row(i).begin());
    labels.push_back(labels_[indices[i]]);
    groups.push_back(groups_[indices[i]]);
  }
  return FeatureMatrix(std::move(rows), std::move(labels), std::move(groups));
}

int label_value(SexLabel label) { return label == SexLabel::kMale ? 1 : 0; }

FeatureMatrix window_features(const FeatureMatrix& raw, std::size_t window_len) {
  require(window_len >= 1 && window_len <= raw.dim(), ErrorCode::kRange,
          "window_features: window length must be in [1, feature length]");
  const std::size_t dim = raw.dim() / window_len;
  Matrix rows(raw.size(), dim);
  for (std::size_t r = 0; r < raw.size(); ++r) {
    const auto e = window_rms(raw.rows().row(r), window_len);
    std::copy(e.begin(), e.end(), rows.row(r).begin());
  }
  return FeatureMatrix(std::move(rows), raw.labels(), raw.groups());
}

FeatureMatrix extract_features(const std::vector<LabeledFootstep>& footsteps, std::optional<std::size_t> window_len) {
  require(!footsteps.empty(), ErrorCode::kInvalidArgument, "extract_features: no footsteps");
  const std::size_t len = footsteps.front().footstep.samples.size();
  Matrix rows(footsteps.size(), len);
  std::vector<int> labels;
  std::vector<std::string> groups;
  for (std::size_t i = 0; i < footsteps.size(); ++i) {
    const auto& f = footsteps[i];
    require(f.footstep.samples.size() == len, ErrorCode::kInvalidArgument,
            "extract_features: footsteps have different lengths");
    std::copy(f.footstep.samples.begin(), f.footstep.samples.end(), rows.row(i).begin());
    labels.push_back(label_value(f.label));
    groups.push_back(f.participant);
  }
  FeatureMatrix raw(std::move(rows), std::move(labels), std::move(groups));
  if (!window_len) return raw;
  return window_features(raw, *window_len);
}

std::vector<LabeledFootstep> collect_footsteps(const TrialManifest& manifest, const SensorArray& layout,
                                               const FootstepExtraction& options) {
  std::vector<LabeledFootstep> out;
  for (const auto& trial : manifest.trials()) {
    const auto record = detrend(load_record(manifest.record_path(trial), layout), options.detrend_window);

    std::vector<std::string> channels;
    std::vector<std::size_t> rows;
    for (std::size_t c = 0; c < record.channel_count(); ++c) {
      if (!layout.at(record.channels()[c]).noisy) {
        channels.push_back(record.channels()[c]);
        rows.push_back(c);
      }
    }
    require(!rows.empty(), ErrorCode::kValidation, "collect_footsteps: trial '" + trial.trial_id + "' has no usable channels");
    Matrix usable(rows.size(), record.sample_count());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto src = record.channel(rows[r]);
      std::copy(src.begin(), src.end(), usable.row(r).begin());
    }
    const VibrationRecord usable_record(channels, std::move(usable), record.sample_rate(), record.start_time());
    const auto window = std::max<std::size_t>(1, seconds_to_samples(options.detect_window, record.sample_rate()));
    const auto events = detect_events(windowed_energy(usable_record, window), options.detector);

    for (const auto& ev : events) {
      std::string sensor = options.sensor;
      if (sensor.empty()) {
        double best = -1.0;
        for (const auto& id : channels) {
          const double e = ev.per_sensor_energy.at(id);
          if (e > best) {
            best = e;
            sensor = id;
          }
        }
      }
      try {
        out.push_back({align_footstep(record, sensor, ev.time, options.pre, options.post), trial.sex_label,
                       trial.participant_id});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kRange) throw;
      }
    }
  }
  return out;
}

Matrix PcaModel::transform(const Matrix& rows) const {
  require(rows.cols() == mean.size(), ErrorCode::kInvalidArgument, "PcaModel::transform: dimension mismatch");
  Matrix out(rows.rows(), components.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    for (std::size_t k = 0; k < components.rows(); ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < mean.size(); ++j) acc += (rows(r, j) - mean[j]) * components(k, j);
      out(r, k) = acc;
    }
  }
  return out;
}

PcaModel pca_fit(const FeatureMatrix& features, std::size_t n_components) {
  const std::size_t n = features.size();
  const std::size_t d = features.dim();
  require(n_components >= 1 && n_components <= std::min(n, d), ErrorCode::kRange,
          "pca_fit: n_components must be in [1, min(rows, dim)]");
  const auto x = view(features.rows());
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mu;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double total = s.squaredNorm();

  PcaModel model;
  model.mean.assign(mu.data(), mu.data() + d);
  model.components = Matrix(n_components, d);
  for (std::size_t k = 0; k < n_components; ++k) {
    Eigen::VectorXd v = svd.matrixV().col(static_cast<Eigen::Index>(k));
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v[pivot] < 0.0) v = -v;
    for (std::size_t j = 0; j < d; ++j) model.components(k, j) = v[static_cast<Eigen::Index>(j)];
    const double sk = k < static_cast<std::size_t>(s.size()) ? s[static_cast<Eigen::Index>(k)] : 0.0;
    model.explained_variance_ratio.push_back(total > 0.0 ? sk * sk / total : 0.0);
  }
  return model;
}

void save_pca_scatter(const std::filesystem::path& path, const PcaModel& model, const FeatureMatrix& features) {
  require(model.components.rows() >= 2, ErrorCode::kInvalidArgument, "save_pca_scatter: need two components");
  const auto projected = model.transform(features.rows());
  auto out = csv::open_for_write(path);
  out << "pc1,pc2,label\n";
  for (std::size_t r = 0; r < projected.rows(); ++r) {
    out << csv::format(projected(r, 0)) << ',' << csv::format(projected(r, 1)) << ','
        << (features.labels()[r] == 1 ? "M" : "F") << '\n';
  }
  require(out.good(), ErrorCode::kIo, "write failed: " + path.string());
}

SynthesisResult svd_synthesize(const FeatureMatrix& features, std::size_t n_per_class, std::uint64_t seed,
                               const SynthesisOptions& options) {
  require(features.has_both_classes(), ErrorCode::kInvalidArgument, "svd_synthesize: need both classes");
  require(n_per_class >= 1, ErrorCode::kInvalidArgument, "svd_synthesize: n_per_class must be >= 1");
  require(options.shrink >= 0.0, ErrorCode::kInvalidArgument, "svd_synthesize: shrink must be >= 0");
  const std::size_t d = features.dim();
  const auto x = view(features.rows());

  Matrix rows(2 * n_per_class, d);
  std::vector<int> labels;
  std::vector<std::string> groups;
  SynthesisResult result{FeatureMatrix(Matrix(), {}, {}), {}};

  for (int label = 0; label <= 1; ++label) {
    std::vector<Eigen::Index> idx;
    for (std::size_t r = 0; r < features.size(); ++r) {
      if (features.labels()[r] == label) idx.push_back(static_cast<Eigen::Index>(r));
    }
    require(idx.size() >= 2, ErrorCode::kInvalidArgument, "svd_synthesize: each class needs at least two rows");
    Eigen::MatrixXd cls(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < idx.size(); ++i) cls.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
    const Eigen::RowVectorXd mu = cls.colwise().mean();
    cls.rowwise() -= mu;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(cls, Eigen::ComputeThinV);
    const auto& s = svd.singularValues();

    std::size_t available = 0;
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      if (s[j] > 1e-12 * s[0]) ++available;
    }
    const std::size_t used = std::min(available, options.primary_directions + options.secondary_directions);
    result.directions_used[label] = used;

    const double dof = static_cast<double>(idx.size() - 1);
    Eigen::VectorXd scale(static_cast<Eigen::Index>(used));
    for (std::size_t j = 0; j < used; ++j) {
      const double sd = s[static_cast<Eigen::Index>(j)] / std::sqrt(dof);
      scale[static_cast<Eigen::Index>(j)] = j < options.primary_directions ? sd : options.shrink * sd;
    }
    Rng rng(derive_seed(seed, 0x5bd, static_cast<std::uint64_t>(label)));
    Eigen::MatrixXd scores(static_cast<Eigen::Index>(n_per_class), static_cast<Eigen::Index>(used));
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      for (Eigen::Index j = 0; j < scores.cols(); ++j) scores(r, j) = rng.normal() * scale[j];
    }
    const Eigen::MatrixXd synth =
        (scores * svd.matrixV().leftCols(static_cast<Eigen::Index>(used)).transpose()).rowwise() + mu;

    for (std::size_t r = 0; r < n_per_class; ++r) {
      const std::size_t out_row = static_cast<std::size_t>(label) * n_per_class + r;
      for (std::size_t j = 0; j < d; ++j) rows(out_row, j) = synth(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
      labels.push_back(label);
      std::string id = std::to_string(out_row + 1);
      groups.push_back("S" + std::string(6 - std::min<std::size_t>(6, id.size()), '0') + id);
    }
  }
  result.features = FeatureMatrix(std::move(rows), std::move(labels), std::move(groups));
  return result;
}

}  // namespace tremor
