#include <algorithm>
#include <cmath>
#include <numeric>

#include "tremor/csv.hpp"
#include "tremor/privacy.hpp"
#include "tremor/random.hpp"

namespace tremor {

namespace {

// Units as sorted names plus the unit index of every row. Instance units are
// named by canonical row rank so fold assignment ignores input row order.
struct Units {
  std::vector<std::string> names;
  std::vector<std::size_t> of_row;
};

Units make_units(const FeatureMatrix& f, CvUnit unit) {
  Units u;
  u.of_row.resize(f.size());
  if (unit == CvUnit::kParticipant) {
    u.names = f.groups();
    std::sort(u.names.begin(), u.names.end());
    u.names.erase(std::unique(u.names.begin(), u.names.end()), u.names.end());
    for (std::size_t i = 0; i < f.size(); ++i) {
      u.of_row[i] = static_cast<std::size_t>(
          std::lower_bound(u.names.begin(), u.names.end(), f.groups()[i]) - u.names.begin());
    }
    return u;
  }
  std::vector<std::size_t> order(f.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = f.rows().row(a);
    const auto rb = f.rows().row(b);
    if (!std::equal(ra.begin(), ra.end(), rb.begin())) {
      return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    }
    if (f.labels()[a] != f.labels()[b]) return f.labels()[a] < f.labels()[b];
    return f.groups()[a] < f.groups()[b];
  });
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    u.of_row[order[rank]] = rank;
    u.names.push_back("row" + std::to_string(rank));
  }
  return u;
}

std::size_t window_samples(double window_s, double rate) {
  require(std::isfinite(window_s) && window_s > 0.0, ErrorCode::kInvalidArgument,
          "window size must be positive and finite");
  const auto n = static_cast<long long>(std::llround(window_s * rate));
  require(n >= 1, ErrorCode::kRange, "window size is shorter than one sample");
  return static_cast<std::size_t>(n);
}

}  // namespace

CvResult cross_validate(const ClassifierSpec& spec, const FeatureMatrix& features, const CvOptions& options) {
  spec.validate();
  const Units units = make_units(features, options.unit);
  const std::size_t n_units = units.names.size();
  require(n_units >= 3, ErrorCode::kInsufficientData, "cross-validation needs at least 3 units");
  require(options.folds == 0 || (options.folds >= 2 && options.folds <= n_units), ErrorCode::kInvalidArgument,
          "cross-validation folds must be 0 (leave-one-out) or in [2, unit count]");

  // fold_of[unit]
  std::vector<std::size_t> fold_of(n_units);
  std::size_t n_folds = n_units;
  if (options.folds == 0) {
    std::iota(fold_of.begin(), fold_of.end(), 0);
  } else {
    n_folds = options.folds;
    std::vector<std::size_t> perm(n_units);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(options.seed, 0x4b46));
    for (std::size_t i = n_units - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
    for (std::size_t i = 0; i < n_units; ++i) fold_of[perm[i]] = i % n_folds;
  }

  CvResult result;
  result.folds = n_folds;
  for (std::size_t fold = 0; fold < n_folds; ++fold) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < features.size(); ++i) {
      (fold_of[units.of_row[i]] == fold ? test_rows : train_rows).push_back(i);
    }
    if (test_rows.empty()) continue;
    const auto training = features.subset(train_rows);
    if (!training.has_both_classes()) {
      for (std::size_t u = 0; u < n_units; ++u) {
        if (fold_of[u] == fold) result.skipped.push_back(units.names[u]);
      }
      continue;
    }
    const auto model = train(spec, training, derive_seed(options.seed, fold, 1));
    for (auto i : test_rows) {
      result.correct += model->predict(features.rows().row(i)) == features.labels()[i] ? 1 : 0;
      ++result.evaluated;
    }
  }
  require(result.evaluated > 0, ErrorCode::kInsufficientData,
          "cross-validation: every fold had a single-class training set");
  result.accuracy = static_cast<double>(result.correct) / static_cast<double>(result.evaluated);
  return result;
}

CvResult loocv_accuracy(const ClassifierSpec& spec, const FeatureMatrix& features, CvUnit unit, std::uint64_t seed) {
  return cross_validate(spec, features, CvOptions{unit, 0, seed});
}

std::vector<SweepRow> anonymization_sweep(const FeatureMatrix& raw, double sample_rate,
                                          const std::vector<ClassifierSpec>& specs,
                                          const std::vector<std::optional<double>>& window_sizes,
                                          const SweepOptions& options) {
  require(!specs.empty(), ErrorCode::kInvalidArgument, "anonymization_sweep: no classifiers");
  require(!window_sizes.empty(), ErrorCode::kInvalidArgument, "anonymization_sweep: no window sizes");
  require(sample_rate > 0.0 && std::isfinite(sample_rate), ErrorCode::kInvalidArgument,
          "anonymization_sweep: sample rate must be positive");
  for (std::size_t i = 0; i < window_sizes.size(); ++i) {
    if (!window_sizes[i]) {
      require(i == 0, ErrorCode::kInvalidArgument, "anonymization_sweep: raw entry must come first");
      continue;
    }
    if (i > 0 && window_sizes[i - 1]) {
      require(*window_sizes[i] > *window_sizes[i - 1], ErrorCode::kInvalidArgument,
              "anonymization_sweep: window sizes must be strictly ascending");
    }
  }
  for (const auto& s : specs) s.validate();

  std::vector<SweepRow> rows;
  const double balance = raw.size() ? static_cast<double>(raw.count_label(1)) / static_cast<double>(raw.size()) : 0.0;
  for (std::size_t wi = 0; wi < window_sizes.size(); ++wi) {
    const auto& w = window_sizes[wi];
    std::optional<FeatureMatrix> features;
    std::optional<std::string> feature_error;
    std::size_t window_len = 0;
    try {
      if (w) {
        window_len = window_samples(*w, sample_rate);
        features = window_features(raw, window_len);
      } else {
        features = raw;
      }
    } catch (const Error& e) {
      feature_error = e.what();
    }
    for (std::size_t si = 0; si < specs.size(); ++si) {
      SweepRow row;
      row.window_s = w;
      row.window_len = window_len;
      row.classifier = specs[si].name();
      row.n_instances = raw.size();
      row.class_balance = balance;
      if (feature_error) {
        row.error = feature_error;
      } else {
        try {
          CvOptions cv = options.cv;
          cv.seed = derive_seed(options.root_seed, wi, si);
          row.accuracy = cross_validate(specs[si], *features, cv).accuracy;
        } catch (const Error& e) {
          row.error = e.what();
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<SweepRow> anonymization_sweep(const TrialManifest& manifest, const SensorArray& layout,
                                          const std::vector<ClassifierSpec>& specs,
                                          const std::vector<std::optional<double>>& window_sizes,
                                          const FootstepExtraction& extraction, const SweepOptions& options) {
  const auto footsteps = collect_footsteps(manifest, layout, extraction);
  require(!footsteps.empty(), ErrorCode::kInsufficientData, "anonymization_sweep: no footsteps detected");
  return anonymization_sweep(extract_features(footsteps, std::nullopt), footsteps.front().footstep.sample_rate, specs,
                             window_sizes, options);
}

void save_sweep(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  auto out = csv::open_for_write(path);
  out << "window_s,classifier,accuracy,n_instances,class_balance\n";
  for (const auto& r : rows) {
    out << (r.window_s ? csv::format(*r.window_s) : std::string("raw")) << ',' << r.classifier << ','
        << (r.accuracy ? csv::format(*r.accuracy) : std::string()) << ',' << r.n_instances << ','
        << csv::format(r.class_balance) << '\n';
  }
  require(out.good(), ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace tremor
