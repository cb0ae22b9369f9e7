#pragma once

// Synthetic slides and cohorts with known ground truth.
//
// make_slide's expected biomarkers come from a brute-force path that shares
// nothing with the scan engine beyond rasterization: the full slide is
// rasterized once, every window is enumerated directly and components are
// counted by flood fill.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "eoe/annotation.hpp"
#include "eoe/biomarkers.hpp"
#include "eoe/classify/evaluation.hpp"
#include "eoe/rng.hpp"
#include "eoe/scan.hpp"

namespace eoe {

struct DiskCluster {
  PixelRect window;  // every disk lies fully inside
  int n_disks = 0;
};

struct SlideSpec {
  std::string slide_id = "synthetic";
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<DiskCluster> clusters;
  std::vector<PixelRect> bz_rects;
  std::optional<PixelRect> tissue;  // absent: the whole slide is tissue
  /// Disks closer than 2r + 2 could touch under 8-connectivity and merge.
  std::int64_t min_center_distance = 2 * kEosRadius + 2;
  std::int64_t eos_radius = kEosRadius;
  std::uint64_t seed = 0;
};

struct SynthSlide {
  SlideAnnotation annotation;
  std::optional<TissueMask> tissue;
  BiomarkerVector expected;
  bool sbz_no_tissue = false;

  const TissueMask* tissue_ptr() const { return tissue ? &*tissue : nullptr; }
};

inline Polygon rect_polygon(const PixelRect& r) {
  return {{r.x0, r.y0}, {r.x1() - 1, r.y0}, {r.x1() - 1, r.y1() - 1}, {r.x0, r.y1() - 1}};
}

namespace detail {

// 8-connected flood fill over `window` of `bm` (slide coordinates). Returns
// the number of components with area >= min_area and their total pixels.
inline std::pair<std::int64_t, std::int64_t> flood_fill_survivors(const Bitmap& bm, const PixelRect& window,
                                                                  std::int64_t min_area) {
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(window.area()), 0);
  std::vector<std::pair<std::int64_t, std::int64_t>> stack;
  std::int64_t count = 0, pixels = 0;
  for (std::int64_t y = 0; y < window.height; ++y)
    for (std::int64_t x = 0; x < window.width; ++x) {
      const auto idx = static_cast<std::size_t>(y * window.width + x);
      if (seen[idx] || !bm.get(window.x0 + x, window.y0 + y)) continue;
      seen[idx] = 1;
      stack.assign(1, {x, y});
      std::int64_t area = 0;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++area;
        for (std::int64_t dy = -1; dy <= 1; ++dy)
          for (std::int64_t dx = -1; dx <= 1; ++dx) {
            const std::int64_t nx = cx + dx, ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= window.width || ny >= window.height) continue;
            const auto n = static_cast<std::size_t>(ny * window.width + nx);
            if (seen[n] || !bm.get(window.x0 + nx, window.y0 + ny)) continue;
            seen[n] = 1;
            stack.push_back({nx, ny});
          }
      }
      if (area >= min_area) {
        ++count;
        pixels += area;
      }
    }
  return {count, pixels};
}

}  // namespace detail

/// Expected biomarkers by direct enumeration of every window of the slide.
inline BiomarkerResult brute_force_biomarkers(const SlideAnnotation& annotation, const TissueMask* tissue,
                                              const ScanConfig& cfg = {}, const BiomarkerOptions& opt = {},
                                              std::int64_t eos_radius = kEosRadius) {
  const SemanticMask full = rasterize(annotation, annotation.bounds(), eos_radius);
  std::int64_t n_cells = 0, n_tissue = 0, sec_num = 0, sec_den = 0, sbz_num = 0, sbz_den = 0;
  BiomarkerResult r;
  for (std::int64_t y0 = 0; y0 + cfg.kernel <= annotation.height; y0 += cfg.stride)
    for (std::int64_t x0 = 0; x0 + cfg.kernel <= annotation.width; x0 += cfg.stride) {
      const PixelRect w{x0, y0, cfg.kernel, cfg.kernel};
      const auto [eos_count, eos_px] = detail::flood_fill_survivors(full.eos, w, cfg.noise.eos_min_area);
      const auto [bz_components, bz_px] = detail::flood_fill_survivors(full.bz, w, cfg.noise.bz_min_area);
      const double bz_fraction = static_cast<double>(bz_px) / static_cast<double>(w.area());
      bool is_tissue = true;
      if (tissue) {
        std::int64_t t = 0;
        for (std::int64_t y = w.y0; y < w.y1(); ++y)
          for (std::int64_t x = w.x0; x < w.x1(); ++x) t += tissue->bitmap.get(x, y) ? 1 : 0;
        is_tissue = static_cast<double>(t) / static_cast<double>(w.area()) >= cfg.tissue_threshold;
      }
      ++n_cells;
      n_tissue += is_tissue;
      r.scores.pec = std::max(r.scores.pec, eos_count);
      r.scores.pbz = std::max(r.scores.pbz, bz_fraction);
      if (opt.sec_denominator == Denominator::kAllCells || is_tissue) {
        ++sec_den;
        sec_num += eos_count >= opt.eos_threshold;
      }
      if (opt.sbz_denominator == Denominator::kAllCells || is_tissue) {
        ++sbz_den;
        sbz_num += bz_fraction >= opt.bz_threshold;
      }
    }
  (void)n_cells;
  (void)n_tissue;
  r.sec_no_tissue = sec_den == 0;
  r.sbz_no_tissue = sbz_den == 0;
  r.scores.sec = sec_den ? static_cast<double>(sec_num) / static_cast<double>(sec_den) : 0.0;
  r.scores.sbz = sbz_den ? static_cast<double>(sbz_num) / static_cast<double>(sbz_den) : 0.0;
  return r;
}

/// Builds the annotation and tissue mask for `spec`; `expected` is left zero.
inline SynthSlide build_slide(const SlideSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) throw ParameterError("make_slide: slide dimensions must be positive");
  const PixelRect bounds{0, 0, spec.width, spec.height};
  if (spec.tissue && !bounds.contains(*spec.tissue))
    throw ParameterError("make_slide: tissue rectangle outside the slide");
  for (const auto& r : spec.bz_rects) {
    if (!r.valid() || !bounds.contains(r)) throw ParameterError("make_slide: BZ rectangle outside the slide");
    if (spec.tissue && !spec.tissue->contains(r))
      throw ParameterError("make_slide: BZ rectangle " + r.to_string() + " not inside the tissue");
  }

  SynthSlide out;
  auto& a = out.annotation;
  a.slide_id = spec.slide_id;
  a.width = spec.width;
  a.height = spec.height;
  for (const auto& r : spec.bz_rects) a.bz_polygons.push_back(rect_polygon(r));
  if (spec.tissue) a.tissue_polygons.push_back(rect_polygon(*spec.tissue));

  Rng rng(spec.seed);
  const std::int64_t rad = spec.eos_radius;
  const std::int64_t min_d2 = spec.min_center_distance * spec.min_center_distance;
  for (const auto& cl : spec.clusters) {
    if (!bounds.contains(cl.window) || cl.window.width < 2 * rad + 1 || cl.window.height < 2 * rad + 1)
      throw ParameterError("make_slide: cluster window " + cl.window.to_string() + " cannot hold a disk");
    for (int k = 0; k < cl.n_disks; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < 20000 && !placed; ++attempt) {
        const Point c{rng.integer(cl.window.x0 + rad, cl.window.x1() - 1 - rad),
                      rng.integer(cl.window.y0 + rad, cl.window.y1() - 1 - rad)};
        placed = std::none_of(a.eos_centers.begin(), a.eos_centers.end(), [&](const Point& p) {
          return (p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y) < min_d2;
        });
        if (placed) a.eos_centers.push_back(c);
      }
      if (!placed)
        throw DataError("make_slide: could not place disk " + std::to_string(k + 1) + " of " +
                        std::to_string(cl.n_disks) + " in " + cl.window.to_string());
    }
  }
  validate(a);

  if (spec.tissue) out.tissue = tissue_from_polygons(a, bounds);
  return out;
}

/// build_slide plus the expected biomarkers from the brute-force path.
inline SynthSlide make_slide(const SlideSpec& spec, const ScanConfig& cfg = {}, const BiomarkerOptions& opt = {}) {
  SynthSlide out = build_slide(spec);
  const auto expected = brute_force_biomarkers(out.annotation, out.tissue_ptr(), cfg, opt, spec.eos_radius);
  out.expected = expected.scores;
  out.sbz_no_tissue = expected.sbz_no_tissue;
  return out;
}

/// A random slide specification up to `max_side` pixels per side.
inline SlideSpec random_slide_spec(std::uint64_t seed, std::int64_t max_side = 6000,
                                   std::int64_t min_side = kHpfSize) {
  Rng rng(seed);
  SlideSpec s;
  s.slide_id = "random-" + std::to_string(seed);
  s.seed = seed ^ 0x5eedULL;
  s.width = rng.integer(min_side, max_side);
  s.height = rng.integer(min_side, max_side);
  const auto random_rect = [&](std::int64_t min_side_px, std::int64_t max_side_px) {
    const std::int64_t w = rng.integer(min_side_px, std::min(max_side_px, s.width));
    const std::int64_t h = rng.integer(min_side_px, std::min(max_side_px, s.height));
    return PixelRect{rng.integer(0, s.width - w), rng.integer(0, s.height - h), w, h};
  };
  const int n_clusters = static_cast<int>(rng.integer(0, 3));
  for (int i = 0; i < n_clusters; ++i) {
    const PixelRect w = random_rect(200, 1600);
    // Keep the packing sparse enough that rejection sampling succeeds quickly.
    const std::int64_t capacity = std::max<std::int64_t>(1, w.area() / (4 * 52 * 52));
    s.clusters.push_back({w, static_cast<int>(rng.integer(1, std::min<std::int64_t>(30, capacity)))});
  }
  const int n_bz = static_cast<int>(rng.integer(0, 3));
  for (int i = 0; i < n_bz; ++i) s.bz_rects.push_back(random_rect(20, 2500));
  if (rng.uniform() < 0.6) {
    // Tissue covers every BZ rectangle plus a random margin.
    PixelRect t = random_rect(500, std::max(s.width, s.height));
    for (const auto& r : s.bz_rects) {
      const std::int64_t x0 = std::min(t.x0, r.x0), y0 = std::min(t.y0, r.y0);
      const std::int64_t x1 = std::max(t.x1(), r.x1()), y1 = std::max(t.y1(), r.y1());
      t = {x0, y0, x1 - x0, y1 - y0};
    }
    s.tissue = t;
  }
  return s;
}

inline json rect_to_json(const PixelRect& r) { return {r.x0, r.y0, r.width, r.height}; }

inline PixelRect rect_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4)
    throw DataError(where + ": expected [x0, y0, width, height]");
  for (const auto& v : j)
    if (!v.is_number_integer()) throw DataError(where + ": rectangle entries must be integers");
  return {j[0].get<std::int64_t>(), j[1].get<std::int64_t>(), j[2].get<std::int64_t>(), j[3].get<std::int64_t>()};
}

inline json to_json(const SlideSpec& s) {
  json clusters = json::array(), bz = json::array();
  for (const auto& c : s.clusters) clusters.push_back({{"window", rect_to_json(c.window)}, {"n_disks", c.n_disks}});
  for (const auto& r : s.bz_rects) bz.push_back(rect_to_json(r));
  json j{{"slide_id", s.slide_id},
         {"width", s.width},
         {"height", s.height},
         {"clusters", std::move(clusters)},
         {"bz_rects", std::move(bz)},
         {"min_center_distance", s.min_center_distance},
         {"eos_radius", s.eos_radius},
         {"seed", s.seed}};
  j["tissue"] = s.tissue ? rect_to_json(*s.tissue) : json(nullptr);
  return j;
}

inline SlideSpec slide_spec_from_json(const json& j, const std::string& source = "slide spec") {
  try {
    SlideSpec s;
    s.slide_id = j.value("slide_id", s.slide_id);
    s.width = j.at("width").get<std::int64_t>();
    s.height = j.at("height").get<std::int64_t>();
    const json clusters = j.value("clusters", json::array());
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      const std::string where = source + ": clusters[" + std::to_string(i) + "]";
      s.clusters.push_back({rect_from_json(clusters[i].at("window"), where + ".window"),
                            clusters[i].at("n_disks").get<int>()});
    }
    const json bz = j.value("bz_rects", json::array());
    for (std::size_t i = 0; i < bz.size(); ++i)
      s.bz_rects.push_back(rect_from_json(bz[i], source + ": bz_rects[" + std::to_string(i) + "]"));
    if (auto it = j.find("tissue"); it != j.end() && !it->is_null()) s.tissue = rect_from_json(*it, source + ": tissue");
    s.min_center_distance = j.value("min_center_distance", s.min_center_distance);
    s.eos_radius = j.value("eos_radius", s.eos_radius);
    s.seed = j.value("seed", s.seed);
    return s;
  } catch (const json::exception& e) {
    throw DataError(source + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Synthetic cohorts

enum class LabelRule {
  kDirect,          // label is the class the features were drawn from
  kDeriveSeverity,  // label from PEC and an HSS total derived from the features
  kPecWindowSwitch, // inside the PEC window severity follows PBZ, outside it follows PEC
};

struct FeatureDistribution {
  FeatureVector mean{};
  FeatureVector sd{};
};

struct CohortSpec {
  std::size_t n_records = 500;
  double severe_fraction = 0.5;
  FeatureDistribution severe{{45.0, 0.45, 0.55, 0.55}, {8.0, 0.08, 0.08, 0.08}};
  FeatureDistribution non_severe{{4.0, 0.03, 0.12, 0.08}, {2.0, 0.02, 0.05, 0.05}};
  LabelRule rule = LabelRule::kDirect;
  int switch_delta = 9;
  std::uint64_t seed = 0;
  std::string id_prefix = "synth";
};

/// HSS scores consistent with a feature vector: grades/stages by tercile-style bins.
inline HssLabels hss_from_features(const BiomarkerVector& b) {
  const auto stage_bin = [](double f) { return f <= 0.0 ? 0 : f < 0.33 ? 1 : f <= 0.66 ? 2 : 3; };
  HssLabels h;
  h.ei_grade = b.pec == 0 ? 0 : b.pec < 15 ? 1 : b.pec < 60 ? 2 : 3;
  h.ei_stage = stage_bin(b.sec);
  h.bzh_grade = bzh_grade_bin(b.pbz);
  h.bzh_stage = stage_bin(b.sbz);
  h.hss_total = h.ei_grade + h.ei_stage + h.bzh_grade + h.bzh_stage;
  return h;
}

inline std::vector<SlideRecord> make_cohort(const CohortSpec& spec) {
  if (spec.n_records < 20) throw ParameterError("make_cohort: need at least 20 records");
  if (!(spec.severe_fraction > 0.0 && spec.severe_fraction < 1.0))
    throw ParameterError("make_cohort: severe fraction must be in (0, 1)");
  Rng rng(spec.seed);
  const auto clip01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  const auto draw = [&](const FeatureDistribution& d) {
    BiomarkerVector b;
    b.pec = std::max<std::int64_t>(0, std::llround(rng.normal(d.mean[0], d.sd[0])));
    b.sec = clip01(rng.normal(d.mean[1], d.sd[1]));
    b.pbz = clip01(rng.normal(d.mean[2], d.sd[2]));
    b.sbz = clip01(rng.normal(d.mean[3], d.sd[3]));
    return b;
  };

  auto n_severe = static_cast<std::size_t>(std::llround(spec.severe_fraction * static_cast<double>(spec.n_records)));
  n_severe = std::clamp<std::size_t>(n_severe, 1, spec.n_records - 1);
  std::vector<bool> classes(spec.n_records, false);
  std::fill(classes.begin(), classes.begin() + static_cast<std::ptrdiff_t>(n_severe), true);
  rng.shuffle(classes);

  std::vector<SlideRecord> out;
  out.reserve(spec.n_records);
  for (std::size_t i = 0; i < spec.n_records; ++i) {
    SlideRecord r;
    char id[32];
    std::snprintf(id, sizeof(id), "%05zu", i);
    r.slide_id = spec.id_prefix + "-" + id;
    switch (spec.rule) {
      case LabelRule::kDirect:
        r.features = draw(classes[i] ? spec.severe : spec.non_severe);
        r.hss = hss_from_features(r.features);
        r.severe = static_cast<bool>(classes[i]);
        break;
      case LabelRule::kDeriveSeverity:
        r.features = draw(classes[i] ? spec.severe : spec.non_severe);
        r.hss = hss_from_features(r.features);
        r.severe = derive_severity(r.features.pec, r.hss->hss_total);
        break;
      case LabelRule::kPecWindowSwitch: {
        validate_delta(spec.switch_delta);
        r.features.pec = rng.integer(0, 60);
        r.features.sec = clip01(static_cast<double>(r.features.pec) / 60.0 * rng.uniform(0.5, 1.0));
        // PBZ keeps a margin around 0.5 so the inside rule is cleanly learnable.
        const double half = rng.uniform(0.05, 0.5);
        r.features.pbz = rng.uniform() < 0.5 ? 0.5 - half : 0.5 + half;
        r.features.sbz = clip01(r.features.pbz * rng.uniform(0.3, 1.0));
        const bool inside = r.features.pec >= kSeverityPecThreshold - spec.switch_delta &&
                            r.features.pec <= kSeverityPecThreshold + spec.switch_delta;
        r.severe = inside ? r.features.pbz >= 0.5 : r.features.pec >= kSeverityPecThreshold;
        r.hss = hss_from_features(r.features);
        break;
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace eoe
