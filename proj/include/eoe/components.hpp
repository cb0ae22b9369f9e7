#pragma once

// Connected-component labeling and the small-component noise filter.
//
// Labeling works on horizontal runs: runs of consecutive rows are merged with
// a union-find whose root is always the earliest run in raster order, so
// component ids follow the raster order of each component's first pixel.

#include <cstdint>
#include <numeric>
#include <vector>

#include "eoe/annotation.hpp"
#include "eoe/bitmap.hpp"

namespace eoe {

enum class Connectivity { kFour = 4, kEight = 8 };

/// Eosinophil components smaller than this (px) are treated as noise.
inline constexpr std::int64_t kEosMinArea = 1800;
/// Basal-zone components smaller than this (px, 1% of a 448x448 sub-patch) are noise.
inline constexpr std::int64_t kBzMinArea = 2007;

struct ComponentLabeling {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::int32_t> labels;  // 0 = background, 1..K otherwise
  std::vector<std::int64_t> areas;   // areas[k - 1] is the area of component k

  std::size_t count() const { return areas.size(); }
  std::int32_t at(std::int64_t x, std::int64_t y) const {
    return labels[static_cast<std::size_t>(y * width + x)];
  }
};

namespace detail {

struct Run {
  std::int64_t y;
  std::int64_t x0;
  std::int64_t x1;  // exclusive
};

class RunComponents {
 public:
  RunComponents(const Bitmap& bm, Connectivity conn) { build(bm, conn); }

  const std::vector<Run>& runs() const { return runs_; }
  /// Component id (0-based) of each run.
  const std::vector<std::int32_t>& run_component() const { return run_component_; }
  const std::vector<std::int64_t>& areas() const { return areas_; }

 private:
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b)
      parent_[b] = a;
    else
      parent_[a] = b;
  }

  void build(const Bitmap& bm, Connectivity conn) {
    const std::int64_t reach = conn == Connectivity::kEight ? 1 : 0;
    std::size_t prev_begin = 0, prev_end = 0;
    for (std::int64_t y = 0; y < bm.height(); ++y) {
      const auto row = bm.row(y);
      const auto w = static_cast<std::int64_t>(row.size());
      const std::size_t cur_begin = runs_.size();
      std::int64_t x = 0;
      while (x < w) {
        while (x < w && row[static_cast<std::size_t>(x)] == 0) ++x;
        if (x >= w) break;
        const std::int64_t start = x;
        while (x < w && row[static_cast<std::size_t>(x)] != 0) ++x;
        runs_.push_back({y, start, x});
        parent_.push_back(parent_.size());
      }
      // Merge with the previous row: runs are sorted by x0 within a row.
      if (y > 0 && prev_end > prev_begin) {
        std::size_t p = prev_begin;
        for (std::size_t c = cur_begin; c < runs_.size(); ++c) {
          const Run& cr = runs_[c];
          while (p < prev_end && runs_[p].x1 + reach <= cr.x0) ++p;
          for (std::size_t q = p; q < prev_end && runs_[q].x0 < cr.x1 + reach; ++q) unite(c, q);
        }
      }
      prev_begin = cur_begin;
      prev_end = runs_.size();
    }

    run_component_.assign(runs_.size(), -1);
    for (std::size_t i = 0; i < runs_.size(); ++i) {
      const std::size_t root = find(i);
      if (root == i) {
        run_component_[i] = static_cast<std::int32_t>(areas_.size());
        areas_.push_back(0);
      } else {
        run_component_[i] = run_component_[root];
      }
      areas_[static_cast<std::size_t>(run_component_[i])] += runs_[i].x1 - runs_[i].x0;
    }
  }

  std::vector<Run> runs_;
  std::vector<std::size_t> parent_;
  std::vector<std::int32_t> run_component_;
  std::vector<std::int64_t> areas_;
};

}  // namespace detail

inline ComponentLabeling connected_components(const Bitmap& bm,
                                              Connectivity conn = Connectivity::kEight) {
  detail::RunComponents rc(bm, conn);
  ComponentLabeling out;
  out.width = bm.width();
  out.height = bm.height();
  out.labels.assign(static_cast<std::size_t>(bm.size()), 0);
  const auto& runs = rc.runs();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::int32_t id = rc.run_component()[i] + 1;
    auto* row = out.labels.data() + runs[i].y * bm.width();
    std::fill(row + runs[i].x0, row + runs[i].x1, id);
  }
  out.areas = rc.areas();
  return out;
}

/// Component areas only, in id order; cheaper than a full labeling.
inline std::vector<std::int64_t> component_areas(const Bitmap& bm,
                                                 Connectivity conn = Connectivity::kEight) {
  return detail::RunComponents(bm, conn).areas();
}

/// Clears every component whose area is strictly below `min_area`.
inline Bitmap remove_small_components(const Bitmap& bm, std::int64_t min_area,
                                      Connectivity conn = Connectivity::kEight) {
  if (min_area < 0) throw ParameterError("remove_small_components: negative minimum area");
  detail::RunComponents rc(bm, conn);
  Bitmap out(bm.width(), bm.height());
  const auto& runs = rc.runs();
  for (std::size_t i = 0; i < runs.size(); ++i)
    if (rc.areas()[static_cast<std::size_t>(rc.run_component()[i])] >= min_area)
      out.fill_span(runs[i].y, runs[i].x0, runs[i].x1);
  return out;
}

struct NoiseFilter {
  std::int64_t eos_min_area = kEosMinArea;
  std::int64_t bz_min_area = kBzMinArea;
  Connectivity connectivity = Connectivity::kEight;
};

inline SemanticMask filter_small_components(const SemanticMask& mask, const NoiseFilter& f = {}) {
  SemanticMask out;
  out.region = mask.region;
  out.eos = remove_small_components(mask.eos, f.eos_min_area, f.connectivity);
  out.bz = remove_small_components(mask.bz, f.bz_min_area, f.connectivity);
  return out;
}

}  // namespace eoe
