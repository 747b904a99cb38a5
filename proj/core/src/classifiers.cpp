#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "tremor/privacy.hpp"
#include "tremor/random.hpp"

namespace tremor {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct KindInfo {
  ClassifierKind kind;
  const char* name;
  std::map<std::string, double> defaults;
};

const std::vector<KindInfo>& kinds() {
  static const std::vector<KindInfo> table{
      {ClassifierKind::kNearestNeighbors, "knn", {{"k", 5}}},
      {ClassifierKind::kGaussianNaiveBayes, "gnb", {{"var_smoothing", 1e-9}}},
      {ClassifierKind::kLogisticLinear, "logistic", {{"l2", 1e-2}, {"iterations", 300}, {"learning_rate", 0.05}}},
      {ClassifierKind::kDecisionTree, "tree", {{"max_depth", 5}, {"min_samples_leaf", 5}}},
      {ClassifierKind::kPerceptron,
       "mlp",
       {{"hidden", 16}, {"epochs", 150}, {"learning_rate", 0.01}, {"l2", 1e-4}}},
  };
  return table;
}

const KindInfo& info(ClassifierKind kind) {
  for (const auto& k : kinds()) {
    if (k.kind == kind) return k;
  }
  fail(ErrorCode::kInvalidArgument, "unknown classifier kind");
}

// Training rows in a canonical order (lexicographic on features, then label) so
// that fitted models do not depend on how the caller ordered the data.
std::vector<std::size_t> canonical_order(const FeatureMatrix& f) {
  std::vector<std::size_t> order(f.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = f.rows().row(a);
    const auto rb = f.rows().row(b);
    for (std::size_t j = 0; j < ra.size(); ++j) {
      if (ra[j] != rb[j]) return ra[j] < rb[j];
    }
    return f.labels()[a] < f.labels()[b];
  });
  return order;
}

// n / (2 n_class) per row: both classes carry equal total weight. Holding out
// one participant otherwise tilts the training prior against the held-out class.
Eigen::VectorXd balanced_weights(const std::vector<int>& y) {
  double count[2] = {0.0, 0.0};
  for (int v : y) count[v] += 1.0;
  Eigen::VectorXd w(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) {
    w[static_cast<Eigen::Index>(i)] = static_cast<double>(y.size()) / (2.0 * count[y[i]]);
  }
  return w;
}

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd inv_sd;

  static Standardizer fit(const RowMajor& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    s.inv_sd.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double var = (x.col(j).array() - s.mean[j]).square().mean();
      s.inv_sd[j] = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
    }
    return s;
  }
  RowMajor apply(const RowMajor& x) const {
    return ((x.rowwise() - mean).array().rowwise() * inv_sd.array()).matrix();
  }
  Eigen::RowVectorXd apply(std::span<const double> v) const {
    const Eigen::Map<const Eigen::RowVectorXd> row(v.data(), static_cast<Eigen::Index>(v.size()));
    return ((row - mean).array() * inv_sd.array()).matrix();
  }
};

class NearestNeighbors final : public Classifier {
 public:
  NearestNeighbors(RowMajor x, std::vector<int> y, std::size_t k)
      : x_(std::move(x)), y_(std::move(y)), weight_(balanced_weights(y_)), k_(k) {}

  // Votes carry the balanced class weights; ties go to the nearest row.
  int predict(std::span<const double> v) const override {
    const Eigen::Map<const Eigen::RowVectorXd> q(v.data(), static_cast<Eigen::Index>(v.size()));
    std::vector<std::pair<double, std::size_t>> d(static_cast<std::size_t>(x_.rows()));
    for (Eigen::Index i = 0; i < x_.rows(); ++i) {
      d[static_cast<std::size_t>(i)] = {(x_.row(i) - q).squaredNorm(), static_cast<std::size_t>(i)};
    }
    const std::size_t k = std::min(k_, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    double votes[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < k; ++i) votes[y_[d[i].second]] += weight_[static_cast<Eigen::Index>(d[i].second)];
    if (votes[0] == votes[1]) return y_[d.front().second];
    return votes[1] > votes[0] ? 1 : 0;
  }

 private:
  RowMajor x_;
  std::vector<int> y_;
  Eigen::VectorXd weight_;
  std::size_t k_;
};

class GaussianNaiveBayes final : public Classifier {
 public:
  GaussianNaiveBayes(const RowMajor& x, const std::vector<int>& y, double smoothing) {
    const Eigen::Index d = x.cols();
    double max_var = 0.0;
    const Eigen::RowVectorXd overall = x.colwise().mean();
    for (Eigen::Index j = 0; j < d; ++j) {
      max_var = std::max(max_var, (x.col(j).array() - overall[j]).square().mean());
    }
    const double eps = smoothing * max_var;
    for (int c = 0; c <= 1; ++c) {
      std::vector<Eigen::Index> idx;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == c) idx.push_back(static_cast<Eigen::Index>(i));
      }
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(d);
      for (auto i : idx) mean += x.row(i);
      mean /= static_cast<double>(idx.size());
      Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(d);
      for (auto i : idx) var += (x.row(i) - mean).array().square().matrix();
      var /= static_cast<double>(idx.size());
      var.array() += eps;
      if (eps == 0.0) var = var.cwiseMax(1e-300);
      mean_[c] = mean;
      var_[c] = var;
      log_norm_[c] = -0.5 * (var.array() * 2.0 * M_PI).log().sum();
    }
  }

  int predict(std::span<const double> v) const override {
    const Eigen::Map<const Eigen::RowVectorXd> q(v.data(), static_cast<Eigen::Index>(v.size()));
    double score[2];
    for (int c = 0; c <= 1; ++c) {
      score[c] = log_norm_[c] - 0.5 * ((q - mean_[c]).array().square() / var_[c].array()).sum();
    }
    return score[1] > score[0] ? 1 : 0;
  }

 private:
  Eigen::RowVectorXd mean_[2];
  Eigen::RowVectorXd var_[2];
  double log_norm_[2]{};
};

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// Adam on a flat parameter block.
struct Adam {
  explicit Adam(double rate) : lr(rate) {}

  double lr;
  double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  int t = 0;
  std::vector<Eigen::VectorXd> m, v;

  void step(std::vector<Eigen::Map<Eigen::VectorXd>>& params, const std::vector<Eigen::VectorXd>& grads) {
    if (m.empty()) {
      for (const auto& g : grads) {
        m.push_back(Eigen::VectorXd::Zero(g.size()));
        v.push_back(Eigen::VectorXd::Zero(g.size()));
      }
    }
    ++t;
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grads[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grads[i].cwiseProduct(grads[i]);
      params[i].array() -= lr * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + eps);
    }
  }
};

class LogisticLinear final : public Classifier {
 public:
  LogisticLinear(const RowMajor& x_raw, const std::vector<int>& y, double l2, int iterations, double lr)
      : scaler_(Standardizer::fit(x_raw)) {
    const RowMajor x = scaler_.apply(x_raw);
    const auto n = static_cast<double>(y.size());
    Eigen::VectorXd target(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) target[i] = y[static_cast<std::size_t>(i)];
    const Eigen::VectorXd weight = balanced_weights(y);
    w_ = Eigen::VectorXd::Zero(x.cols());
    Eigen::VectorXd bias = Eigen::VectorXd::Zero(1);
    Adam opt(lr);
    for (int it = 0; it < iterations; ++it) {
      Eigen::VectorXd z = x * w_;
      z.array() += bias[0];
      Eigen::VectorXd err(z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) err[i] = weight[i] * (sigmoid(z[i]) - target[i]);
      std::vector<Eigen::VectorXd> grads{x.transpose() * err / n + l2 * w_, Eigen::VectorXd::Constant(1, err.sum() / n)};
      std::vector<Eigen::Map<Eigen::VectorXd>> params{{w_.data(), w_.size()}, {bias.data(), 1}};
      opt.step(params, grads);
    }
    b_ = bias[0];
  }

  int predict(std::span<const double> v) const override {
    return scaler_.apply(v).dot(w_.transpose()) + b_ > 0.0 ? 1 : 0;
  }

 private:
  Standardizer scaler_;
  Eigen::VectorXd w_;
  double b_ = 0.0;
};

class DecisionTree final : public Classifier {
 public:
  DecisionTree(const RowMajor& x, const std::vector<int>& y, int max_depth, std::size_t min_leaf)
      : x_(x), y_(y), max_depth_(max_depth), min_leaf_(min_leaf) {
    double count1 = 0.0;
    for (int v : y) count1 += v;
    weight_[0] = static_cast<double>(y.size()) / (2.0 * (static_cast<double>(y.size()) - count1));
    weight_[1] = static_cast<double>(y.size()) / (2.0 * count1);
    std::vector<std::size_t> all(y.size());
    std::iota(all.begin(), all.end(), 0);
    build(all, 0);
  }

  int predict(std::span<const double> v) const override {
    std::size_t node = 0;
    while (nodes_[node].feature >= 0) {
      const auto& n = nodes_[node];
      node = v[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[node].label;
  }

 private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    std::size_t left = 0, right = 0;
    int label = 0;
  };

  static double gini(double pos, double total) {
    if (total <= 0.0) return 0.0;
    const double p = pos / total;
    return 2.0 * p * (1.0 - p);
  }

  std::size_t build(const std::vector<std::size_t>& idx, int depth) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back();
    std::size_t count1 = 0;
    for (auto i : idx) count1 += static_cast<std::size_t>(y_[i]);
    const double pos = weight_[1] * static_cast<double>(count1);
    const double n = pos + weight_[0] * static_cast<double>(idx.size() - count1);
    nodes_[id].label = 2.0 * pos > n ? 1 : 0;
    if (depth >= max_depth_ || count1 == 0 || count1 == idx.size() || idx.size() < 2 * min_leaf_) return id;

    const double parent = gini(pos, n);
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, int>> column(idx.size());
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      for (std::size_t i = 0; i < idx.size(); ++i) column[i] = {x_(static_cast<Eigen::Index>(idx[i]), f), y_[idx[i]]};
      std::sort(column.begin(), column.end());
      double left_pos = 0.0;
      double left_w = 0.0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        const double w = weight_[column[i].second];
        left_w += w;
        if (column[i].second == 1) left_pos += w;
        const std::size_t left_n = i + 1;
        if (column[i].first == column[i + 1].first) continue;
        if (left_n < min_leaf_ || idx.size() - left_n < min_leaf_) continue;
        const double right_w = n - left_w;
        const double child = (left_w * gini(left_pos, left_w) + right_w * gini(pos - left_pos, right_w)) / n;
        const double gain = parent - child;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (column[i].first + column[i + 1].first);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto i : idx) {
      (x_(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? left : right).push_back(i);
    }
    nodes_[id].feature = best_feature;
    nodes_[id].threshold = best_threshold;
    const auto l = build(left, depth + 1);
    const auto r = build(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  const RowMajor& x_;
  const std::vector<int>& y_;
  int max_depth_;
  std::size_t min_leaf_;
  double weight_[2]{1.0, 1.0};
  std::vector<Node> nodes_;
};

class Perceptron final : public Classifier {
 public:
  Perceptron(const RowMajor& x_raw, const std::vector<int>& y, int hidden, int epochs, double lr, double l2,
             std::uint64_t seed)
      : scaler_(Standardizer::fit(x_raw)) {
    const RowMajor x = scaler_.apply(x_raw);
    const Eigen::Index d = x.cols();
    const auto n = static_cast<double>(y.size());
    Eigen::VectorXd target(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) target[i] = y[static_cast<std::size_t>(i)];
    const Eigen::VectorXd weight = balanced_weights(y);

    Rng rng(seed);
    const double limit1 = std::sqrt(6.0 / static_cast<double>(d + hidden));
    const double limit2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
    w1_.resize(d, hidden);
    for (Eigen::Index j = 0; j < hidden; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) w1_(i, j) = rng.uniform(-limit1, limit1);
    }
    b1_ = Eigen::VectorXd::Zero(hidden);
    w2_.resize(hidden);
    for (Eigen::Index j = 0; j < hidden; ++j) w2_[j] = rng.uniform(-limit2, limit2);
    Eigen::VectorXd b2 = Eigen::VectorXd::Zero(1);

    Adam opt(lr);
    for (int epoch = 0; epoch < epochs; ++epoch) {
      Eigen::MatrixXd h = x * w1_;
      h.rowwise() += b1_.transpose();
      h = h.array().tanh();
      Eigen::VectorXd z = h * w2_;
      z.array() += b2[0];
      Eigen::VectorXd err(z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) err[i] = weight[i] * (sigmoid(z[i]) - target[i]) / n;

      const Eigen::VectorXd g_w2 = h.transpose() * err + l2 * w2_;
      const double g_b2 = err.sum();
      const Eigen::MatrixXd delta = (err * w2_.transpose()).array() * (1.0 - h.array().square());
      Eigen::MatrixXd g_w1 = x.transpose() * delta;
      g_w1 += l2 * w1_;
      const Eigen::VectorXd g_b1 = delta.colwise().sum().transpose();

      std::vector<Eigen::VectorXd> grads{Eigen::Map<const Eigen::VectorXd>(g_w1.data(), g_w1.size()), g_b1, g_w2,
                                         Eigen::VectorXd::Constant(1, g_b2)};
      std::vector<Eigen::Map<Eigen::VectorXd>> params{
          {w1_.data(), w1_.size()}, {b1_.data(), b1_.size()}, {w2_.data(), w2_.size()}, {b2.data(), 1}};
      opt.step(params, grads);
    }
    b2_ = b2[0];
  }

  int predict(std::span<const double> v) const override {
    const Eigen::RowVectorXd xs = scaler_.apply(v);
    const Eigen::RowVectorXd h = ((xs * w1_) + b1_.transpose()).array().tanh().matrix();
    return h.dot(w2_.transpose()) + b2_ > 0.0 ? 1 : 0;
  }

 private:
  Standardizer scaler_;
  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_;
  Eigen::VectorXd w2_;
  double b2_ = 0.0;
};

// Owns the canonical-order copy the tree references.
class OwningTree final : public Classifier {
 public:
  OwningTree(RowMajor x, std::vector<int> y, int depth, std::size_t leaf)
      : x_(std::move(x)), y_(std::move(y)), tree_(x_, y_, depth, leaf) {}
  int predict(std::span<const double> v) const override { return tree_.predict(v); }

 private:
  RowMajor x_;
  std::vector<int> y_;
  DecisionTree tree_;
};

}  // namespace

double ClassifierSpec::param(const std::string& key) const {
  if (const auto it = hyperparameters.find(key); it != hyperparameters.end()) return it->second;
  const auto& defaults = info(kind).defaults;
  const auto it = defaults.find(key);
  require(it != defaults.end(), ErrorCode::kInvalidArgument, name() + ": unknown hyperparameter '" + key + "'");
  return it->second;
}

void ClassifierSpec::validate() const {
  const auto& defaults = info(kind).defaults;
  for (const auto& [key, value] : hyperparameters) {
    require(defaults.count(key) == 1, ErrorCode::kInvalidArgument, name() + ": unknown hyperparameter '" + key + "'");
    require(std::isfinite(value), ErrorCode::kInvalidArgument, name() + ": non-finite hyperparameter '" + key + "'");
  }
  const auto positive_int = [&](const char* key) {
    const double v = param(key);
    require(v >= 1.0 && v == std::floor(v), ErrorCode::kInvalidArgument,
            name() + ": " + key + " must be a positive integer");
  };
  switch (kind) {
    case ClassifierKind::kNearestNeighbors:
      positive_int("k");
      require(static_cast<long>(param("k")) % 2 == 1, ErrorCode::kInvalidArgument, "knn: k must be odd");
      break;
    case ClassifierKind::kGaussianNaiveBayes:
      require(param("var_smoothing") >= 0.0, ErrorCode::kInvalidArgument, "gnb: var_smoothing must be >= 0");
      break;
    case ClassifierKind::kLogisticLinear:
      positive_int("iterations");
      require(param("l2") >= 0.0 && param("learning_rate") > 0.0, ErrorCode::kInvalidArgument,
              "logistic: l2 must be >= 0 and learning_rate > 0");
      break;
    case ClassifierKind::kDecisionTree:
      positive_int("max_depth");
      positive_int("min_samples_leaf");
      break;
    case ClassifierKind::kPerceptron:
      positive_int("hidden");
      positive_int("epochs");
      require(param("l2") >= 0.0 && param("learning_rate") > 0.0, ErrorCode::kInvalidArgument,
              "mlp: l2 must be >= 0 and learning_rate > 0");
      break;
  }
}

std::string ClassifierSpec::name() const { return info(kind).name; }

ClassifierSpec parse_classifier(std::string_view name) {
  for (const auto& k : kinds()) {
    if (name == k.name) return ClassifierSpec{k.kind, {}};
  }
  fail(ErrorCode::kInvalidArgument, "unknown classifier '" + std::string(name) + "' (expected knn, gnb, logistic, tree, mlp)");
}

std::vector<ClassifierSpec> default_classifier_zoo() {
  std::vector<ClassifierSpec> out;
  for (const auto& k : kinds()) out.push_back({k.kind, {}});
  return out;
}

std::unique_ptr<Classifier> train(const ClassifierSpec& spec, const FeatureMatrix& features, std::uint64_t seed) {
  spec.validate();
  require(features.has_both_classes(), ErrorCode::kInvalidArgument, "train: training data must contain both classes");
  require(features.dim() >= 1, ErrorCode::kInvalidArgument, "train: zero-dimensional features");

  const auto order = canonical_order(features);
  RowMajor x(static_cast<Eigen::Index>(features.size()), static_cast<Eigen::Index>(features.dim()));
  std::vector<int> y(features.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto src = features.rows().row(order[i]);
    x.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(src.data(), static_cast<Eigen::Index>(src.size()));
    y[i] = features.labels()[order[i]];
  }

  switch (spec.kind) {
    case ClassifierKind::kNearestNeighbors:
      return std::make_unique<NearestNeighbors>(std::move(x), std::move(y), static_cast<std::size_t>(spec.param("k")));
    case ClassifierKind::kGaussianNaiveBayes:
      return std::make_unique<GaussianNaiveBayes>(x, y, spec.param("var_smoothing"));
    case ClassifierKind::kLogisticLinear:
      return std::make_unique<LogisticLinear>(x, y, spec.param("l2"), static_cast<int>(spec.param("iterations")),
                                              spec.param("learning_rate"));
    case ClassifierKind::kDecisionTree:
      return std::make_unique<OwningTree>(std::move(x), std::move(y), static_cast<int>(spec.param("max_depth")),
                                          static_cast<std::size_t>(spec.param("min_samples_leaf")));
    case ClassifierKind::kPerceptron:
      return std::make_unique<Perceptron>(x, y, static_cast<int>(spec.param("hidden")),
                                          static_cast<int>(spec.param("epochs")), spec.param("learning_rate"),
                                          spec.param("l2"), seed);
  }
  fail(ErrorCode::kInvalidArgument, "train: unknown classifier kind");
}

}  // namespace tremor
