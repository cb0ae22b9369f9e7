#pragma once

// Tabular severity classifiers over the four biomarkers: Fisher LDA, linear
// SVM and a small MLP. Every model standardizes features with the training
// split's mean and standard deviation, and training is deterministic given
// (record order, seed).

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "eoe/classify/records.hpp"
#include "eoe/error.hpp"
#include "eoe/io.hpp"
#include "eoe/rng.hpp"

namespace eoe {

enum class ModelKind { kLda, kSvm, kMlp };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kLda: return "lda";
    case ModelKind::kSvm: return "svm";
    case ModelKind::kMlp: return "mlp";
  }
  return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "lda") return ModelKind::kLda;
  if (s == "svm") return ModelKind::kSvm;
  if (s == "mlp") return ModelKind::kMlp;
  throw ParameterError("unknown model kind '" + s + "' (expected lda, svm or mlp)");
}

/// Hidden layer widths an MLP may use; up to four hidden layers.
inline constexpr std::array<int, 4> kMlpLayerSizes{10, 20, 50, 100};
inline constexpr std::size_t kMlpMaxHiddenLayers = 4;

struct TrainOptions {
  std::vector<int> mlp_hidden{20, 20};
  int epochs = 2000;
  double mlp_learning_rate = 0.05;
  double svm_lambda = 0.01;
  double svm_learning_rate = 0.1;
  /// Decision threshold; defaults to 0.5 (LDA/MLP posterior) or 0 (SVM margin).
  std::optional<double> threshold;
};

inline void validate_mlp_hidden(const std::vector<int>& hidden) {
  if (hidden.empty() || hidden.size() > kMlpMaxHiddenLayers)
    throw ParameterError("mlp: between 1 and 4 hidden layers are supported");
  for (int h : hidden)
    if (std::find(kMlpLayerSizes.begin(), kMlpLayerSizes.end(), h) == kMlpLayerSizes.end())
      throw ParameterError("mlp: hidden layer size " + std::to_string(h) +
                           " not in {10, 20, 50, 100}");
}

struct Standardization {
  FeatureVector mean{};
  FeatureVector sd{1.0, 1.0, 1.0, 1.0};

  static Standardization fit(const std::vector<FeatureVector>& xs) {
    Standardization s;
    const double n = static_cast<double>(xs.size());
    for (std::size_t k = 0; k < kNumFeatures; ++k) {
      double m = 0.0;
      for (const auto& x : xs) m += x[k];
      m /= n;
      double ss = 0.0;
      for (const auto& x : xs) ss += (x[k] - m) * (x[k] - m);
      const double sd = std::sqrt(ss / n);
      s.mean[k] = m;
      s.sd[k] = sd > 0.0 ? sd : 1.0;  // constant column: centre only
    }
    return s;
  }

  FeatureVector apply(const FeatureVector& x) const {
    FeatureVector z;
    for (std::size_t k = 0; k < kNumFeatures; ++k) z[k] = (x[k] - mean[k]) / sd[k];
    return z;
  }
};

struct LdaParams {
  FeatureVector mean_neg{};
  FeatureVector mean_pos{};
  double prior_pos = 0.5;
  /// Pooled-covariance inverse applied to the mean difference, and the log-odds offset.
  FeatureVector weights{};
  double bias = 0.0;
};

struct SvmParams {
  FeatureVector weights{};
  double bias = 0.0;
};

struct MlpLayer {
  int inputs = 0;
  int outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;
};

struct MlpParams {
  std::vector<int> hidden;
  std::vector<MlpLayer> layers;  // hidden layers then the single-unit output layer
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct ClassifierModel {
  ModelKind kind = ModelKind::kLda;
  Standardization standardization;
  std::variant<LdaParams, SvmParams, MlpParams> params;
  double threshold = 0.5;

  /// Severity posterior (LDA, MLP) or signed margin (SVM).
  double score(const FeatureVector& raw) const {
    const FeatureVector x = standardization.apply(raw);
    if (const auto* p = std::get_if<LdaParams>(&params)) {
      double z = p->bias;
      for (std::size_t k = 0; k < kNumFeatures; ++k) z += p->weights[k] * x[k];
      return sigmoid(z);
    }
    if (const auto* p = std::get_if<SvmParams>(&params)) {
      double z = p->bias;
      for (std::size_t k = 0; k < kNumFeatures; ++k) z += p->weights[k] * x[k];
      return z;
    }
    const auto& mlp = std::get<MlpParams>(params);
    std::vector<double> a(x.begin(), x.end()), next;
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
      const auto& layer = mlp.layers[l];
      next.assign(static_cast<std::size_t>(layer.outputs), 0.0);
      for (int o = 0; o < layer.outputs; ++o) {
        double z = layer.bias[static_cast<std::size_t>(o)];
        const double* w = layer.weights.data() + static_cast<std::size_t>(o) * layer.inputs;
        for (int i = 0; i < layer.inputs; ++i) z += w[i] * a[static_cast<std::size_t>(i)];
        next[static_cast<std::size_t>(o)] = l + 1 < mlp.layers.size() ? std::max(z, 0.0) : z;
      }
      a.swap(next);
    }
    return sigmoid(a[0]);
  }

  double score(const BiomarkerVector& b) const { return score(to_features(b)); }
  bool predict(const FeatureVector& raw) const { return score(raw) >= threshold; }
  bool predict(const BiomarkerVector& b) const { return predict(to_features(b)); }
};

namespace detail {

inline void require_trainable(const std::vector<bool>& y) {
  const auto pos = std::count(y.begin(), y.end(), true);
  const auto neg = static_cast<std::ptrdiff_t>(y.size()) - pos;
  if (pos < 2 || neg < 2)
    throw TrainingError("training needs at least 2 records per class (got " + std::to_string(pos) +
                        " severe, " + std::to_string(neg) + " non-severe)");
}

inline LdaParams train_lda(const std::vector<FeatureVector>& x, const std::vector<bool>& y) {
  using Vec = Eigen::Matrix<double, 4, 1>;
  using Mat = Eigen::Matrix<double, 4, 4>;
  Vec mu[2] = {Vec::Zero(), Vec::Zero()};
  double count[2] = {0, 0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    mu[y[i]] += Vec(x[i].data());
    count[y[i]] += 1;
  }
  mu[0] /= count[0];
  mu[1] /= count[1];
  Mat s = Mat::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Vec d = Vec(x[i].data()) - mu[y[i]];
    s += d * d.transpose();
  }
  s /= static_cast<double>(x.size()) - 2.0;
  const double trace = s.trace();
  s += Mat::Identity() * (trace > 0 ? 1e-6 * trace / 4.0 : 1e-6);
  const Vec w = s.ldlt().solve(mu[1] - mu[0]);
  if (!w.allFinite()) throw NumericError("lda: singular pooled covariance");

  LdaParams p;
  p.prior_pos = count[1] / (count[0] + count[1]);
  for (std::size_t k = 0; k < kNumFeatures; ++k) {
    p.mean_neg[k] = mu[0](static_cast<Eigen::Index>(k));
    p.mean_pos[k] = mu[1](static_cast<Eigen::Index>(k));
    p.weights[k] = w(static_cast<Eigen::Index>(k));
  }
  p.bias = -0.5 * (mu[1] + mu[0]).dot(w) + std::log(p.prior_pos / (1.0 - p.prior_pos));
  return p;
}

// Hinge loss + (lambda/2)|w|^2 by full-batch subgradient descent; returns the
// iterate with the lowest objective.
inline SvmParams train_svm(const std::vector<FeatureVector>& x, const std::vector<bool>& y,
                           const TrainOptions& opt) {
  const double n = static_cast<double>(x.size());
  SvmParams cur, best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch <= opt.epochs; ++epoch) {
    FeatureVector gw{};
    double gb = 0.0, hinge = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double yi = y[i] ? 1.0 : -1.0;
      double m = cur.bias;
      for (std::size_t k = 0; k < kNumFeatures; ++k) m += cur.weights[k] * x[i][k];
      if (yi * m < 1.0) {
        hinge += 1.0 - yi * m;
        for (std::size_t k = 0; k < kNumFeatures; ++k) gw[k] -= yi * x[i][k];
        gb -= yi;
      }
    }
    double norm2 = 0.0;
    for (double w : cur.weights) norm2 += w * w;
    const double obj = hinge / n + 0.5 * opt.svm_lambda * norm2;
    if (obj < best_obj) {
      best_obj = obj;
      best = cur;
    }
    if (epoch == opt.epochs) break;
    for (std::size_t k = 0; k < kNumFeatures; ++k)
      cur.weights[k] -= opt.svm_learning_rate * (gw[k] / n + opt.svm_lambda * cur.weights[k]);
    cur.bias -= opt.svm_learning_rate * gb / n;
  }
  return best;
}

// ReLU hidden layers, logistic output, binary cross-entropy, full-batch
// gradient descent with Glorot-uniform initialization.
inline MlpParams train_mlp(const std::vector<FeatureVector>& x, const std::vector<bool>& y,
                           const TrainOptions& opt, std::uint64_t seed) {
  validate_mlp_hidden(opt.mlp_hidden);
  using Matrix = Eigen::MatrixXd;
  const auto n = static_cast<Eigen::Index>(x.size());
  Matrix input(n, static_cast<Eigen::Index>(kNumFeatures));
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < input.cols(); ++k)
      input(i, k) = x[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    target(i) = y[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }

  std::vector<int> sizes{static_cast<int>(kNumFeatures)};
  sizes.insert(sizes.end(), opt.mlp_hidden.begin(), opt.mlp_hidden.end());
  sizes.push_back(1);
  const std::size_t n_layers = sizes.size() - 1;

  Rng rng(seed);
  std::vector<Matrix> w(n_layers);
  std::vector<Eigen::VectorXd> b(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    const double limit = std::sqrt(6.0 / (sizes[l] + sizes[l + 1]));
    w[l].resize(sizes[l + 1], sizes[l]);
    for (Eigen::Index r = 0; r < w[l].rows(); ++r)
      for (Eigen::Index c = 0; c < w[l].cols(); ++c) w[l](r, c) = rng.uniform(-limit, limit);
    b[l] = Eigen::VectorXd::Zero(sizes[l + 1]);
  }

  std::vector<Matrix> z(n_layers), a(n_layers + 1);
  a[0] = input;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t l = 0; l < n_layers; ++l) {
      z[l] = a[l] * w[l].transpose();
      z[l].rowwise() += b[l].transpose();
      a[l + 1] = (l + 1 < n_layers) ? Matrix(z[l].cwiseMax(0.0)) : z[l];
    }
    // dLoss/dz for logistic output with cross-entropy is (p - y) / n.
    Matrix grad(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) grad(i, 0) = (sigmoid(z.back()(i, 0)) - target(i)) * inv_n;
    for (std::size_t l = n_layers; l-- > 0;) {
      const Matrix gw = grad.transpose() * a[l];
      const Eigen::VectorXd gb = grad.colwise().sum().transpose();
      if (l > 0) {
        grad = (grad * w[l]).cwiseProduct((z[l - 1].array() > 0.0).cast<double>().matrix());
      }
      w[l] -= opt.mlp_learning_rate * gw;
      b[l] -= opt.mlp_learning_rate * gb;
    }
  }

  MlpParams p;
  p.hidden = opt.mlp_hidden;
  for (std::size_t l = 0; l < n_layers; ++l) {
    MlpLayer layer;
    layer.inputs = sizes[l];
    layer.outputs = sizes[l + 1];
    for (Eigen::Index r = 0; r < w[l].rows(); ++r)
      for (Eigen::Index c = 0; c < w[l].cols(); ++c) layer.weights.push_back(w[l](r, c));
    layer.bias.assign(b[l].data(), b[l].data() + b[l].size());
    p.layers.push_back(std::move(layer));
  }
  for (const auto& layer : p.layers)
    for (double v : layer.weights)
      if (!std::isfinite(v)) throw NumericError("mlp: training diverged");
  return p;
}

}  // namespace detail

inline ClassifierModel train(ModelKind kind, const std::vector<FeatureVector>& features,
                             const std::vector<bool>& labels, std::uint64_t seed,
                             const TrainOptions& opt = {}) {
  if (features.size() != labels.size())
    throw ParameterError("train: features and labels differ in length");
  detail::require_trainable(labels);
  ClassifierModel m;
  m.kind = kind;
  m.standardization = Standardization::fit(features);
  std::vector<FeatureVector> x;
  x.reserve(features.size());
  for (const auto& f : features) x.push_back(m.standardization.apply(f));
  switch (kind) {
    case ModelKind::kLda:
      m.params = detail::train_lda(x, labels);
      m.threshold = opt.threshold.value_or(0.5);
      break;
    case ModelKind::kSvm:
      m.params = detail::train_svm(x, labels, opt);
      m.threshold = opt.threshold.value_or(0.0);
      break;
    case ModelKind::kMlp:
      m.params = detail::train_mlp(x, labels, opt, seed);
      m.threshold = opt.threshold.value_or(0.5);
      break;
  }
  return m;
}

inline ClassifierModel train(ModelKind kind, const std::vector<SlideRecord>& records,
                             std::uint64_t seed, const TrainOptions& opt = {}) {
  std::vector<FeatureVector> x;
  std::vector<bool> y;
  for (const auto& r : records) {
    if (!r.severe) throw TrainingError("train: record '" + r.slide_id + "' has no severity label");
    x.push_back(to_features(r.features));
    y.push_back(*r.severe);
  }
  return train(kind, x, y, seed, opt);
}

// ---------------------------------------------------------------------------
// JSON persistence

namespace detail {

inline json vec_json(const FeatureVector& v) { return json(std::vector<double>(v.begin(), v.end())); }

inline FeatureVector vec_from(const json& j, const char* field) {
  const auto v = j.at(field).get<std::vector<double>>();
  if (v.size() != kNumFeatures) throw DataError(std::string("model: '") + field + "' must have 4 values");
  FeatureVector out;
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

}  // namespace detail

inline json to_json(const ClassifierModel& m) {
  json params;
  if (const auto* p = std::get_if<LdaParams>(&m.params)) {
    params = {{"mean_neg", detail::vec_json(p->mean_neg)},
              {"mean_pos", detail::vec_json(p->mean_pos)},
              {"prior_pos", p->prior_pos},
              {"weights", detail::vec_json(p->weights)},
              {"bias", p->bias}};
  } else if (const auto* p = std::get_if<SvmParams>(&m.params)) {
    params = {{"weights", detail::vec_json(p->weights)}, {"bias", p->bias}};
  } else {
    const auto& mlp = std::get<MlpParams>(m.params);
    json layers = json::array();
    for (const auto& l : mlp.layers)
      layers.push_back({{"inputs", l.inputs}, {"outputs", l.outputs}, {"weights", l.weights}, {"bias", l.bias}});
    params = {{"hidden", mlp.hidden}, {"layers", std::move(layers)}};
  }
  return {{"kind", to_string(m.kind)},
          {"threshold", m.threshold},
          {"standardization",
           {{"mean", detail::vec_json(m.standardization.mean)}, {"sd", detail::vec_json(m.standardization.sd)}}},
          {"parameters", std::move(params)}};
}

inline ClassifierModel classifier_from_json(const json& j) {
  try {
    ClassifierModel m;
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    m.threshold = j.at("threshold").get<double>();
    m.standardization.mean = detail::vec_from(j.at("standardization"), "mean");
    m.standardization.sd = detail::vec_from(j.at("standardization"), "sd");
    const json& p = j.at("parameters");
    switch (m.kind) {
      case ModelKind::kLda:
        m.params = LdaParams{detail::vec_from(p, "mean_neg"), detail::vec_from(p, "mean_pos"),
                             p.at("prior_pos").get<double>(), detail::vec_from(p, "weights"),
                             p.at("bias").get<double>()};
        break;
      case ModelKind::kSvm:
        m.params = SvmParams{detail::vec_from(p, "weights"), p.at("bias").get<double>()};
        break;
      case ModelKind::kMlp: {
        MlpParams mlp;
        mlp.hidden = p.at("hidden").get<std::vector<int>>();
        for (const auto& l : p.at("layers")) {
          MlpLayer layer{l.at("inputs").get<int>(), l.at("outputs").get<int>(),
                         l.at("weights").get<std::vector<double>>(), l.at("bias").get<std::vector<double>>()};
          if (layer.weights.size() != static_cast<std::size_t>(layer.inputs * layer.outputs) ||
              layer.bias.size() != static_cast<std::size_t>(layer.outputs))
            throw DataError("model: MLP layer shape mismatch");
          mlp.layers.push_back(std::move(layer));
        }
        if (mlp.layers.empty() || mlp.layers.front().inputs != static_cast<int>(kNumFeatures) ||
            mlp.layers.back().outputs != 1)
          throw DataError("model: MLP must map 4 features to 1 output");
        m.params = std::move(mlp);
        break;
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

}  // namespace eoe
