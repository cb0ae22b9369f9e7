#pragma once

// Pixel-level segmentation metrics: mean IoU, precision, recall and
// specificity, averaged over images and over the two categories.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eoe/annotation.hpp"
#include "eoe/io.hpp"

namespace eoe {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts confusion(const Bitmap& gt, const Bitmap& pred) {
  if (gt.width() != pred.width() || gt.height() != pred.height())
    throw ParameterError("confusion: ground truth and prediction differ in size");
  // Index by (gt << 1 | pred).
  std::array<std::int64_t, 4> n{};
  const auto g = gt.data();
  const auto p = pred.data();
  for (std::size_t i = 0; i < g.size(); ++i) ++n[static_cast<std::size_t>((g[i] << 1) | p[i])];
  return {n[3], n[1], n[2], n[0]};
}

/// How zero denominators are resolved.
enum class ZeroDivision {
  /// Absent from both gt and prediction counts as perfect agreement (1.0);
  /// recall with no gt positives but some predicted is 0.0, and precision with
  /// gt positives but nothing predicted is 0.0.
  kPerfectOnAbsence,
  /// Undefined image/category terms are skipped and the mean renormalized.
  kSkipUndefined,
};

inline const char* to_string(ZeroDivision z) {
  return z == ZeroDivision::kPerfectOnAbsence ? "perfect_on_absence" : "skip_undefined";
}

enum MetricIndex : std::size_t { kIou = 0, kPrecision = 1, kRecall = 2, kSpecificity = 3 };

/// IoU, precision, recall, specificity for one image and category; nullopt = undefined.
inline std::array<std::optional<double>, 4> image_metrics(const ConfusionCounts& c, ZeroDivision z) {
  const auto ratio = [](std::int64_t num, std::int64_t den) {
    return static_cast<double>(num) / static_cast<double>(den);
  };
  std::array<std::optional<double>, 4> m;
  const bool skip = z == ZeroDivision::kSkipUndefined;
  const std::int64_t union_px = c.tp + c.fp + c.fn;

  if (union_px > 0)
    m[kIou] = ratio(c.tp, union_px);
  else if (!skip)
    m[kIou] = 1.0;

  if (c.tp + c.fp > 0)
    m[kPrecision] = ratio(c.tp, c.tp + c.fp);
  else if (!skip)
    m[kPrecision] = c.fn == 0 ? 1.0 : 0.0;

  if (c.tp + c.fn > 0)
    m[kRecall] = ratio(c.tp, c.tp + c.fn);
  else if (!skip)
    m[kRecall] = c.fp == 0 ? 1.0 : 0.0;

  if (c.tn + c.fp > 0)
    m[kSpecificity] = ratio(c.tn, c.tn + c.fp);
  else if (!skip)
    m[kSpecificity] = 1.0;
  return m;
}

struct CategoryMetrics {
  double miou = 0.0;
  double mprecision = 0.0;
  double mrecall = 0.0;
  double mspecificity = 0.0;

  double operator[](std::size_t i) const {
    return i == kIou ? miou : i == kPrecision ? mprecision : i == kRecall ? mrecall : mspecificity;
  }
  double& operator[](std::size_t i) {
    return i == kIou ? miou : i == kPrecision ? mprecision : i == kRecall ? mrecall : mspecificity;
  }
};

struct SegMetricsReport {
  CategoryMetrics eos;
  CategoryMetrics bz;
  /// Mean of the two category means.
  CategoryMetrics overall;
  /// Mean over every (image, category) term, literally as in the averaged sums.
  CategoryMetrics overall_per_image;
  std::size_t n_images = 0;
  ZeroDivision convention = ZeroDivision::kPerfectOnAbsence;
};

struct MaskPair {
  SemanticMask gt;
  SemanticMask pred;
};

inline SegMetricsReport evaluate(const std::vector<MaskPair>& pairs,
                                 ZeroDivision convention = ZeroDivision::kPerfectOnAbsence) {
  if (pairs.empty()) throw ParameterError("evaluate: no mask pairs");
  // sums[category][metric], counts of defined terms likewise
  std::array<std::array<double, 4>, 2> sums{};
  std::array<std::array<std::size_t, 4>, 2> terms{};
  for (const auto& p : pairs) {
    const std::array<ConfusionCounts, 2> counts{confusion(p.gt.eos, p.pred.eos),
                                                confusion(p.gt.bz, p.pred.bz)};
    for (std::size_t c = 0; c < 2; ++c) {
      const auto m = image_metrics(counts[c], convention);
      for (std::size_t k = 0; k < 4; ++k)
        if (m[k]) {
          sums[c][k] += *m[k];
          ++terms[c][k];
        }
    }
  }
  SegMetricsReport r;
  r.n_images = pairs.size();
  r.convention = convention;
  for (std::size_t k = 0; k < 4; ++k) {
    // A metric with no defined term at all (only possible when skipping) is reported as 1.0.
    const auto mean = [&](std::size_t c) {
      return terms[c][k] ? sums[c][k] / static_cast<double>(terms[c][k]) : 1.0;
    };
    r.eos[k] = mean(0);
    r.bz[k] = mean(1);
    r.overall[k] = 0.5 * (r.eos[k] + r.bz[k]);
    const std::size_t n = terms[0][k] + terms[1][k];
    r.overall_per_image[k] = n ? (sums[0][k] + sums[1][k]) / static_cast<double>(n) : 1.0;
  }
  return r;
}

inline json category_to_json(const CategoryMetrics& m) {
  return {{"miou", m.miou},
          {"mprecision", m.mprecision},
          {"mrecall", m.mrecall},
          {"mspecificity", m.mspecificity}};
}

inline json to_json(const SegMetricsReport& r) {
  return {{"eos_intact", category_to_json(r.eos)},
          {"bz", category_to_json(r.bz)},
          {"overall", category_to_json(r.overall)},
          {"overall_per_image", category_to_json(r.overall_per_image)},
          {"n_images", r.n_images},
          {"zero_division", to_string(r.convention)}};
}

/// Columns: category, miou, mprecision, mrecall, mspecificity, n_images.
inline std::string to_csv(const SegMetricsReport& r) {
  std::string out = "category,miou,mprecision,mrecall,mspecificity,n_images\n";
  const auto row = [&](const char* name, const CategoryMetrics& m) {
    out += name;
    for (std::size_t k = 0; k < 4; ++k) out += "," + format_double(m[k]);
    out += "," + std::to_string(r.n_images) + "\n";
  };
  row("eos_intact", r.eos);
  row("bz", r.bz);
  row("overall", r.overall);
  row("overall_per_image", r.overall_per_image);
  return out;
}

}  // namespace eoe
