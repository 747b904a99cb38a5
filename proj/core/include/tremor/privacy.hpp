#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tremor/core.hpp"
#include "tremor/energy.hpp"
#include "tremor/ingest.hpp"
#include "tremor/signal.hpp"

namespace tremor {

/// One row per footstep instance, with its binary label (0 = F, 1 = M) and
/// the participant it came from.
class FeatureMatrix {
 public:
  FeatureMatrix(Matrix rows, std::vector<int> labels, std::vector<std::string> groups);

  const Matrix& rows() const noexcept { return rows_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& groups() const noexcept { return groups_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return rows_.cols(); }

  std::size_t count_label(int label) const;
  bool has_both_classes() const { return count_label(0) > 0 && count_label(1) > 0; }

  FeatureMatrix subset(std::span<const std::size_t> indices) const;

 private:
  Matrix rows_;
  std::vector<int> labels_;
  std::vector<std::string> groups_;
};

int label_value(SexLabel label);

struct LabeledFootstep {
  AlignedFootstep footstep;
  SexLabel label = SexLabel::kFemale;
  std::string participant;
};

/// Raw samples (window_len empty) or per-footstep window_rms() energies.
/// Throws kInvalidArgument for ragged footsteps.
FeatureMatrix extract_features(const std::vector<LabeledFootstep>& footsteps,
                               std::optional<std::size_t> window_len);

/// Applies window_rms() to every row of a raw feature matrix.
FeatureMatrix window_features(const FeatureMatrix& raw, std::size_t window_len);

struct FootstepExtraction {
  double detrend_window = 1.0;          // s
  // About half a period of the footstep oscillation, so the alignment point is
  // not locked to its phase.
  double detect_window = 1.0 / 64.0;    // s
  EventDetectorConfig detector;
  double pre = 0.1;   // s
  double post = 0.3;  // s
  // Sensor cut for every footstep; empty picks the strongest usable sensor of
  // each event.
  std::string sensor;
};

/// Detrend, detect and align the footsteps of every trial in the manifest.
std::vector<LabeledFootstep> collect_footsteps(const TrialManifest& manifest, const SensorArray& layout,
                                               const FootstepExtraction& options);

struct PcaModel {
  std::vector<double> mean;
  Matrix components;  // n_components x dim, orthonormal rows
  std::vector<double> explained_variance_ratio;

  Matrix transform(const Matrix& rows) const;
};

/// Principal directions from the SVD of the centered rows.
PcaModel pca_fit(const FeatureMatrix& features, std::size_t n_components);

/// CSV `pc1,pc2,label` of the first two principal components.
void save_pca_scatter(const std::filesystem::path& path, const PcaModel& model, const FeatureMatrix& features);

enum class ClassifierKind { kNearestNeighbors, kGaussianNaiveBayes, kLogisticLinear, kDecisionTree, kPerceptron };

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::kNearestNeighbors;
  std::map<std::string, double> hyperparameters;

  /// Declared value, else the kind's default.
  double param(const std::string& name) const;
  void validate() const;
  std::string name() const;
};

/// "knn", "gnb", "logistic", "tree", "mlp".
ClassifierSpec parse_classifier(std::string_view name);
std::vector<ClassifierSpec> default_classifier_zoo();

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual int predict(std::span<const double> x) const = 0;
};

/// Training is deterministic in (spec, data, seed) and independent of row order.
std::unique_ptr<Classifier> train(const ClassifierSpec& spec, const FeatureMatrix& features, std::uint64_t seed);

enum class CvUnit { kInstance, kParticipant };

struct CvOptions {
  CvUnit unit = CvUnit::kParticipant;
  // 0 holds out one unit at a time; otherwise units are dealt into this many
  // folds after a seeded shuffle.
  std::size_t folds = 0;
  std::uint64_t seed = 0;
};

struct CvResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t evaluated = 0;
  std::size_t folds = 0;
  std::vector<std::string> skipped;  // held-out units whose training set had one class
};

CvResult cross_validate(const ClassifierSpec& spec, const FeatureMatrix& features, const CvOptions& options);

/// Leave-one-unit-out accuracy.
CvResult loocv_accuracy(const ClassifierSpec& spec, const FeatureMatrix& features, CvUnit unit,
                        std::uint64_t seed = 0);

struct SweepRow {
  std::optional<double> window_s;  // empty = raw samples
  std::size_t window_len = 0;
  std::string classifier;
  std::optional<double> accuracy;
  std::size_t n_instances = 0;
  double class_balance = 0.0;  // fraction of label 1
  std::optional<std::string> error;
};

struct SweepOptions {
  CvOptions cv;
  std::uint64_t root_seed = 0;
};

/// Cross-validated accuracy for every (window size, classifier). Window sizes
/// must be ascending with an optional leading raw entry (nullopt).
std::vector<SweepRow> anonymization_sweep(const FeatureMatrix& raw, double sample_rate,
                                          const std::vector<ClassifierSpec>& specs,
                                          const std::vector<std::optional<double>>& window_sizes,
                                          const SweepOptions& options);

std::vector<SweepRow> anonymization_sweep(const TrialManifest& manifest, const SensorArray& layout,
                                          const std::vector<ClassifierSpec>& specs,
                                          const std::vector<std::optional<double>>& window_sizes,
                                          const FootstepExtraction& extraction, const SweepOptions& options);

/// CSV `window_s,classifier,accuracy,n_instances,class_balance`; raw rows use
/// window_s = "raw".
void save_sweep(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

struct SynthesisOptions {
  std::size_t primary_directions = 2;
  std::size_t secondary_directions = 23;
  double shrink = 0.1;  // secondary coefficients use shrink * score sd
};

struct SynthesisResult {
  FeatureMatrix features;
  std::map<int, std::size_t> directions_used;  // per label
};

/// Per class: mean plus random scores on the leading singular directions of the
/// centered class rows. Rows are their own groups (S00001, ...).
SynthesisResult svd_synthesize(const FeatureMatrix& features, std::size_t n_per_class, std::uint64_t seed,
                               const SynthesisOptions& options = {});

}  // namespace tremor
