#pragma once

// Severity classification on top of the trained models: binary metrics, the
// PEC-windowed two-model classifier, the repeated random-split protocol and
// the PEC-threshold baseline.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <variant>
#include <vector>

#include "eoe/classify/models.hpp"
#include "eoe/classify/records.hpp"
#include "eoe/rng.hpp"
#include "eoe/stats.hpp"

namespace eoe {

// ---------------------------------------------------------------------------
// Binary metrics, "severe" is the positive class.

struct ClassificationMetrics {
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double miss_rate = 0.0;
  double false_alarm_rate = 0.0;
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// A rate with an empty denominator (no positives, or no negatives) is 1.0.
inline ClassificationMetrics classification_metrics(const std::vector<bool>& predictions,
                                                    const std::vector<bool>& truths) {
  if (predictions.size() != truths.size() || predictions.empty())
    throw ParameterError("classification_metrics: need equal-length, nonempty inputs");
  ClassificationMetrics m;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i])
      (predictions[i] ? m.tp : m.fn)++;
    else
      (predictions[i] ? m.fp : m.tn)++;
  }
  const auto rate = [](std::int64_t num, std::int64_t den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 1.0;
  };
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(truths.size());
  m.sensitivity = rate(m.tp, m.tp + m.fn);
  m.specificity = rate(m.tn, m.tn + m.fp);
  m.miss_rate = 1.0 - m.sensitivity;
  m.false_alarm_rate = 1.0 - m.specificity;
  return m;
}

// ---------------------------------------------------------------------------
// PEC-windowed routing: records with 15 - delta <= PEC <= 15 + delta go to the
// inside model, all others to the outside model.

inline constexpr int kMinDelta = 1;
inline constexpr int kMaxDelta = 12;

enum class Route { kInside, kOutside };

inline void validate_delta(int delta) {
  if (delta < kMinDelta || delta > kMaxDelta)
    throw ParameterError("delta must be in [1, 12], got " + std::to_string(delta));
}

inline Route route(int delta, std::int64_t pec) {
  validate_delta(delta);
  return (pec >= kSeverityPecThreshold - delta && pec <= kSeverityPecThreshold + delta) ? Route::kInside
                                                                                        : Route::kOutside;
}

struct WindowedClassifier {
  int delta = 9;
  ClassifierModel inside;
  ClassifierModel outside;

  const ClassifierModel& model_for(std::int64_t pec) const {
    return route(delta, pec) == Route::kInside ? inside : outside;
  }
  double score(const BiomarkerVector& b) const { return model_for(b.pec).score(b); }
  bool predict(const BiomarkerVector& b) const { return model_for(b.pec).predict(b); }
};

struct ModelSpec {
  ModelKind kind = ModelKind::kMlp;
  TrainOptions options;
};

struct WindowedSpec {
  int delta = 9;
  ModelSpec inside;
  ModelSpec outside;
};

using ProtocolModel = std::variant<ModelSpec, WindowedSpec>;
using TrainedModel = std::variant<ClassifierModel, WindowedClassifier>;

inline bool predict(const TrainedModel& m, const BiomarkerVector& b) {
  return std::visit([&](const auto& model) { return model.predict(b); }, m);
}
inline double score(const TrainedModel& m, const BiomarkerVector& b) {
  return std::visit([&](const auto& model) { return model.score(b); }, m);
}

inline ClassifierModel train(const ModelSpec& spec, const std::vector<SlideRecord>& records,
                             std::uint64_t seed) {
  return train(spec.kind, records, seed, spec.options);
}

/// Trains the inside model on in-window records and the outside model on the rest.
inline WindowedClassifier train_windowed(const std::vector<SlideRecord>& records, const WindowedSpec& spec,
                                         std::uint64_t seed) {
  validate_delta(spec.delta);
  std::vector<SlideRecord> in, out;
  for (const auto& r : records) (route(spec.delta, r.features.pec) == Route::kInside ? in : out).push_back(r);
  const std::string window = "[" + std::to_string(kSeverityPecThreshold - spec.delta) + ", " +
                             std::to_string(kSeverityPecThreshold + spec.delta) + "]";
  if (in.empty()) throw TrainingError("windowed: no records with PEC inside " + window);
  if (out.empty()) throw TrainingError("windowed: no records with PEC outside " + window);
  WindowedClassifier w;
  w.delta = spec.delta;
  try {
    w.inside = train(spec.inside, in, seed);
  } catch (const TrainingError& e) {
    throw TrainingError("windowed: inside model (PEC in " + window + "): " + e.what());
  }
  try {
    w.outside = train(spec.outside, out, seed);
  } catch (const TrainingError& e) {
    throw TrainingError("windowed: outside model (PEC outside " + window + "): " + e.what());
  }
  return w;
}

inline TrainedModel train_model(const ProtocolModel& spec, const std::vector<SlideRecord>& records,
                                std::uint64_t seed) {
  if (const auto* flat = std::get_if<ModelSpec>(&spec)) return train(*flat, records, seed);
  return train_windowed(records, std::get<WindowedSpec>(spec), seed);
}

// ---------------------------------------------------------------------------
// Repeated random-split protocol

struct ProtocolOptions {
  int n_seeds = 20;
  std::uint64_t first_seed = 0;
  double split = 0.8;  // training fraction
  unsigned threads = 1;
};

struct MetricSummary {
  double median = 0.0;
  double std = 0.0;
};

struct EvalReport {
  MetricSummary accuracy, sensitivity, specificity, miss_rate, false_alarm_rate;
  int n_seeds = 0;
  double split = 0.8;
  std::vector<std::uint64_t> seeds;
  std::vector<ClassificationMetrics> per_seed;
};

/// Records sorted by every field, so results do not depend on input order.
inline std::vector<SlideRecord> canonical_order(std::vector<SlideRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const SlideRecord& a, const SlideRecord& b) {
    const auto key = [](const SlideRecord& r) {
      return std::tuple(r.slide_id, r.features.pec, r.features.sec, r.features.pbz, r.features.sbz,
                        r.severe.value_or(false));
    };
    return key(a) < key(b);
  });
  return records;
}

struct Split {
  std::vector<SlideRecord> train;
  std::vector<SlideRecord> validation;
};

namespace detail {

inline void split_group(const std::vector<SlideRecord>& group, double fraction, Rng& rng, Split& out,
                        const std::string& name) {
  if (group.size() < 2)
    throw TrainingError("split: " + name + " needs at least 2 records to contribute to both sides");
  std::vector<std::size_t> idx(group.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(group.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, group.size() - 1);
  for (std::size_t i = 0; i < idx.size(); ++i)
    (i < n_train ? out.train : out.validation).push_back(group[idx[i]]);
}

}  // namespace detail

inline Split random_split(const std::vector<SlideRecord>& records, double fraction, std::uint64_t seed) {
  Rng rng(seed);
  Split s;
  detail::split_group(records, fraction, rng, s, "cohort");
  return s;
}

/// Splits each PEC region separately so both regions reach training and validation.
inline Split region_stratified_split(const std::vector<SlideRecord>& records, int delta, double fraction,
                                     std::uint64_t seed) {
  std::vector<SlideRecord> in, out;
  for (const auto& r : records) (route(delta, r.features.pec) == Route::kInside ? in : out).push_back(r);
  Rng rng(seed);
  Split s;
  detail::split_group(in, fraction, rng, s, "inside-window region");
  detail::split_group(out, fraction, rng, s, "outside-window region");
  return s;
}

inline ClassificationMetrics run_protocol_seed(const std::vector<SlideRecord>& canonical, const ProtocolModel& spec,
                                               double fraction, std::uint64_t seed) {
  const Split s = std::holds_alternative<WindowedSpec>(spec)
                      ? region_stratified_split(canonical, std::get<WindowedSpec>(spec).delta, fraction, seed)
                      : random_split(canonical, fraction, seed);
  const TrainedModel model = train_model(spec, s.train, seed);
  std::vector<bool> pred, truth;
  for (const auto& r : s.validation) {
    pred.push_back(predict(model, r.features));
    truth.push_back(r.severe.value());
  }
  return classification_metrics(pred, truth);
}

inline EvalReport evaluate_protocol(const std::vector<SlideRecord>& records, const ProtocolModel& spec,
                                    const ProtocolOptions& opt = {}) {
  if (opt.n_seeds <= 0) throw ParameterError("evaluate_protocol: need at least one seed");
  if (!(opt.split > 0.0 && opt.split < 1.0)) throw ParameterError("evaluate_protocol: split must be in (0, 1)");
  for (const auto& r : records)
    if (!r.severe) throw TrainingError("evaluate_protocol: record '" + r.slide_id + "' has no severity label");
  const auto canonical = canonical_order(records);

  EvalReport rep;
  rep.n_seeds = opt.n_seeds;
  rep.split = opt.split;
  for (int k = 0; k < opt.n_seeds; ++k) rep.seeds.push_back(opt.first_seed + static_cast<std::uint64_t>(k));
  rep.per_seed.resize(rep.seeds.size());

  // Seeds are independent; each is single-threaded and written to its own slot.
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = rep.seeds.size();
  std::exception_ptr error;
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= rep.seeds.size()) return;
      try {
        rep.per_seed[i] = run_protocol_seed(canonical, spec, opt.split, rep.seeds[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(rep.seeds.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  const auto summarize = [&](double ClassificationMetrics::*field) {
    std::vector<double> v;
    for (const auto& m : rep.per_seed) v.push_back(m.*field);
    return MetricSummary{median(v), stddev(v)};
  };
  rep.accuracy = summarize(&ClassificationMetrics::accuracy);
  rep.sensitivity = summarize(&ClassificationMetrics::sensitivity);
  rep.specificity = summarize(&ClassificationMetrics::specificity);
  rep.miss_rate = summarize(&ClassificationMetrics::miss_rate);
  rep.false_alarm_rate = summarize(&ClassificationMetrics::false_alarm_rate);
  return rep;
}

// ---------------------------------------------------------------------------
// PEC-threshold baseline: severe iff pec >= t.

struct BaselineResult {
  std::int64_t best_threshold = 0;
  double best_accuracy = 0.0;
  std::vector<std::pair<std::int64_t, double>> sweep;  // (threshold, accuracy)
  std::optional<RocResult> roc;                         // absent when only one class is present
};

/// Ties in accuracy resolve to the smallest threshold. Empty `candidates`
/// means every integer from 0 to max(pec) + 1.
inline BaselineResult baseline_sweep(const std::vector<SlideRecord>& records,
                                     std::vector<std::int64_t> candidates = {}) {
  if (records.empty()) throw ParameterError("baseline_sweep: no records");
  std::vector<double> scores;
  std::vector<bool> truth;
  std::int64_t max_pec = 0;
  for (const auto& r : records) {
    if (!r.severe) throw ParameterError("baseline_sweep: record '" + r.slide_id + "' has no severity label");
    scores.push_back(static_cast<double>(r.features.pec));
    truth.push_back(*r.severe);
    max_pec = std::max(max_pec, r.features.pec);
  }
  if (candidates.empty())
    for (std::int64_t t = 0; t <= max_pec + 1; ++t) candidates.push_back(t);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  BaselineResult res;
  res.best_accuracy = -1.0;
  for (auto t : candidates) {
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < records.size(); ++i)
      if ((records[i].features.pec >= t) == truth[i]) ++correct;
    const double acc = static_cast<double>(correct) / static_cast<double>(records.size());
    res.sweep.emplace_back(t, acc);
    if (acc > res.best_accuracy) {
      res.best_accuracy = acc;
      res.best_threshold = t;
    }
  }
  const auto n_pos = std::count(truth.begin(), truth.end(), true);
  if (n_pos > 0 && n_pos < static_cast<std::ptrdiff_t>(truth.size())) {
    res.roc = roc(scores, truth);
  }
  return res;
}

/// Every hidden-layer stack of 1 to `max_layers` layers drawn from {10, 20, 50, 100}.
inline std::vector<std::vector<int>> mlp_architectures(std::size_t max_layers = kMlpMaxHiddenLayers) {
  if (max_layers < 1 || max_layers > kMlpMaxHiddenLayers)
    throw ParameterError("mlp_architectures: max_layers must be in [1, 4]");
  std::vector<std::vector<int>> out;
  std::vector<std::vector<int>> frontier{{}};
  for (std::size_t depth = 1; depth <= max_layers; ++depth) {
    std::vector<std::vector<int>> next;
    for (const auto& prefix : frontier)
      for (int size : kMlpLayerSizes) {
        auto arch = prefix;
        arch.push_back(size);
        next.push_back(arch);
      }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const TrainOptions& o) {
  json j{{"hidden", o.mlp_hidden},
         {"epochs", o.epochs},
         {"learning_rate", o.mlp_learning_rate},
         {"svm_lambda", o.svm_lambda},
         {"svm_learning_rate", o.svm_learning_rate}};
  if (o.threshold) j["threshold"] = *o.threshold;
  return j;
}

inline json to_json(const ModelSpec& s) {
  json j = to_json(s.options);
  j["kind"] = to_string(s.kind);
  return j;
}

inline json to_json(const ProtocolModel& p) {
  if (const auto* flat = std::get_if<ModelSpec>(&p)) return to_json(*flat);
  const auto& w = std::get<WindowedSpec>(p);
  return {{"delta", w.delta}, {"inside", to_json(w.inside)}, {"outside", to_json(w.outside)}};
}

inline ModelSpec model_spec_from_json(const json& j) {
  try {
    ModelSpec s;
    s.kind = model_kind_from_string(j.value("kind", std::string("mlp")));
    if (j.contains("hidden")) s.options.mlp_hidden = j.at("hidden").get<std::vector<int>>();
    s.options.epochs = j.value("epochs", s.options.epochs);
    s.options.mlp_learning_rate = j.value("learning_rate", s.options.mlp_learning_rate);
    s.options.svm_lambda = j.value("svm_lambda", s.options.svm_lambda);
    s.options.svm_learning_rate = j.value("svm_learning_rate", s.options.svm_learning_rate);
    if (j.contains("threshold")) s.options.threshold = j.at("threshold").get<double>();
    if (s.kind == ModelKind::kMlp) validate_mlp_hidden(s.options.mlp_hidden);
    if (s.options.epochs < 1) throw ParameterError("model spec: epochs must be positive");
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("model spec: ") + e.what());
  }
}

inline ProtocolModel protocol_model_from_json(const json& j) {
  if (!j.is_object()) throw DataError("model spec: expected a JSON object");
  if (j.contains("delta")) {
    WindowedSpec w;
    w.delta = j.at("delta").get<int>();
    validate_delta(w.delta);
    w.inside = model_spec_from_json(j.value("inside", json::object()));
    w.outside = model_spec_from_json(j.value("outside", json::object()));
    return w;
  }
  return model_spec_from_json(j);
}

inline json to_json(const TrainedModel& m) {
  if (const auto* flat = std::get_if<ClassifierModel>(&m)) return to_json(*flat);
  const auto& w = std::get<WindowedClassifier>(m);
  return {{"kind", "windowed"}, {"delta", w.delta}, {"inside", to_json(w.inside)}, {"outside", to_json(w.outside)}};
}

inline TrainedModel trained_model_from_json(const json& j) {
  if (j.value("kind", std::string()) == "windowed") {
    WindowedClassifier w;
    w.delta = j.at("delta").get<int>();
    validate_delta(w.delta);
    w.inside = classifier_from_json(j.at("inside"));
    w.outside = classifier_from_json(j.at("outside"));
    return w;
  }
  return classifier_from_json(j);
}

inline json to_json(const ClassificationMetrics& m) {
  return {{"accuracy", m.accuracy},   {"sensitivity", m.sensitivity},
          {"specificity", m.specificity}, {"miss_rate", m.miss_rate},
          {"false_alarm_rate", m.false_alarm_rate}, {"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}};
}

inline json to_json(const EvalReport& r) {
  const auto summary = [](const MetricSummary& s) { return json{{"median", s.median}, {"std", s.std}}; };
  json per_seed = json::array();
  for (std::size_t i = 0; i < r.per_seed.size(); ++i) {
    json row = to_json(r.per_seed[i]);
    row["seed"] = r.seeds[i];
    per_seed.push_back(std::move(row));
  }
  return {{"accuracy", summary(r.accuracy)},
          {"sensitivity", summary(r.sensitivity)},
          {"specificity", summary(r.specificity)},
          {"miss_rate", summary(r.miss_rate)},
          {"false_alarm_rate", summary(r.false_alarm_rate)},
          {"n_seeds", r.n_seeds},
          {"split_fraction", r.split},
          {"per_seed", std::move(per_seed)}};
}

}  // namespace eoe
