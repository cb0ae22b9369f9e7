#pragma once

// Whole-slide scan: every full HPF window is segmented through its sub-patch
// grid, the sub-masks are OR-merged, noise-filtered and reduced to a local
// score. Windows are independent and may be evaluated concurrently; results
// are gathered by window index so the maps never depend on scheduling.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "eoe/annotation.hpp"
#include "eoe/components.hpp"
#include "eoe/geometry.hpp"
#include "eoe/io.hpp"
#include "eoe/segmentation.hpp"

namespace eoe {

class ScanError : public Error {
 public:
  ScanError(const PixelRect& window, const std::string& what)
      : Error("scan failed at window " + window.to_string() + ": " + what), window_(window) {}
  const PixelRect& window() const { return window_; }

 private:
  PixelRect window_;
};

enum class FilterPlacement {
  kAssembledHpf,  // filter once on the OR-merged HPF mask
  kPerSubPatch,   // filter every sub-patch before merging
};

struct ScanConfig {
  std::int64_t kernel = kHpfSize;
  std::int64_t stride = kHpfStride;
  std::int64_t subpatch = kSubPatchSize;
  std::int64_t subpatch_overlap = kSubPatchOverlap;
  NoiseFilter noise;
  double tissue_threshold = kTissueThreshold;
  FilterPlacement placement = FilterPlacement::kAssembledHpf;
  unsigned threads = 1;  // 0: hardware concurrency
};

struct LocalScore {
  std::int64_t eos_count = 0;
  double bz_fraction = 0.0;
  bool is_tissue = true;
  friend bool operator==(const LocalScore&, const LocalScore&) = default;
};

enum class Feature { kEosIntact, kBasalZone };

struct ScoreMap {
  Feature feature = Feature::kEosIntact;
  WindowGrid grid;
  std::vector<LocalScore> cells;  // row-major, n_rows * n_cols

  std::int64_t kernel() const { return grid.kernel; }
  std::int64_t stride() const { return grid.stride; }
  const LocalScore& at(std::int64_t row, std::int64_t col) const {
    return cells[static_cast<std::size_t>(row * grid.n_cols + col)];
  }
  /// The cell value for this map's feature.
  double value(std::size_t i) const {
    return feature == Feature::kEosIntact ? static_cast<double>(cells[i].eos_count)
                                          : cells[i].bz_fraction;
  }
  friend bool operator==(const ScoreMap&, const ScoreMap&) = default;
};

struct ScanMaps {
  ScoreMap eos;
  ScoreMap bz;
};

inline SemanticMask assemble_hpf_mask(const SegmentationBackend& backend, const PixelRect& window,
                                      const ScanConfig& cfg = {}) {
  const TileGrid grid = subpatch_grid(window, cfg.subpatch, cfg.subpatch_overlap);
  SemanticMask hpf(window);
  for (const auto& tile : grid.tiles) {
    SemanticMask sub;
    try {
      sub = backend.segment(tile);
    } catch (const std::exception& e) {
      throw ScanError(window, "sub-patch " + tile.to_string() + ": " + e.what());
    }
    if (sub.eos.width() != tile.width || sub.eos.height() != tile.height ||
        sub.bz.width() != tile.width || sub.bz.height() != tile.height)
      throw ScanError(window, "backend returned a mask of the wrong size for " + tile.to_string());
    if (cfg.placement == FilterPlacement::kPerSubPatch) sub = filter_small_components(sub, cfg.noise);
    hpf.eos.or_into(sub.eos, tile.x0 - window.x0, tile.y0 - window.y0);
    hpf.bz.or_into(sub.bz, tile.x0 - window.x0, tile.y0 - window.y0);
  }
  return hpf;
}

/// `tissue` may be null, meaning the whole slide is tissue.
inline LocalScore local_score(const SemanticMask& mask, const TissueMask* tissue,
                              const PixelRect& window, const NoiseFilter& noise = {},
                              double tissue_threshold = kTissueThreshold) {
  if (mask.region != window)
    throw ParameterError("local_score: mask region " + mask.region.to_string() +
                         " does not match window " + window.to_string());
  LocalScore s;
  // Counting surviving components and their pixels equals filtering then
  // relabeling: removing a component never merges or splits the others.
  for (auto a : component_areas(mask.eos, noise.connectivity))
    if (a >= noise.eos_min_area) ++s.eos_count;
  std::int64_t bz_pixels = 0;
  for (auto a : component_areas(mask.bz, noise.connectivity))
    if (a >= noise.bz_min_area) bz_pixels += a;
  s.bz_fraction = static_cast<double>(bz_pixels) / static_cast<double>(window.area());
  s.is_tissue = tissue == nullptr || tissue_fraction(*tissue, window) >= tissue_threshold;
  return s;
}

inline ScanMaps scan(const SegmentationBackend& backend, const TissueMask* tissue,
                     std::int64_t slide_width, std::int64_t slide_height, const ScanConfig& cfg = {}) {
  const WindowGrid grid = hpf_windows(slide_width, slide_height, cfg.kernel, cfg.stride);
  if (grid.size() > 0 && (cfg.subpatch > cfg.kernel))
    throw ParameterError("scan: sub-patch larger than kernel");
  std::vector<LocalScore> cells(static_cast<std::size_t>(grid.size()));

  unsigned n_threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                        : cfg.threads;
  n_threads = static_cast<unsigned>(
      std::min<std::int64_t>(n_threads, std::max<std::int64_t>(grid.size(), 1)));

  std::atomic<std::int64_t> next{0};
  std::mutex error_mutex;
  std::int64_t error_index = grid.size();
  std::exception_ptr error;

  const auto worker = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= grid.size()) return;
      const PixelRect w = grid.window(i);
      try {
        const SemanticMask m = assemble_hpf_mask(backend, w, cfg);
        const NoiseFilter noise =
            cfg.placement == FilterPlacement::kAssembledHpf ? cfg.noise : NoiseFilter{0, 0, cfg.noise.connectivity};
        cells[static_cast<std::size_t>(i)] = local_score(m, tissue, w, noise, cfg.tissue_threshold);
      } catch (...) {
        // Report the lowest failing window so errors are reproducible.
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };

  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  ScanMaps maps{{Feature::kEosIntact, grid, cells}, {Feature::kBasalZone, grid, std::move(cells)}};
  return maps;
}

// ---------------------------------------------------------------------------
// Serialization

/// Columns: row, col, x0, y0, eos_count, bz_fraction, is_tissue.
inline std::string score_map_csv(const ScanMaps& maps) {
  const auto& g = maps.eos.grid;
  std::string out = "row,col,x0,y0,eos_count,bz_fraction,is_tissue\n";
  for (std::int64_t r = 0; r < g.n_rows; ++r)
    for (std::int64_t c = 0; c < g.n_cols; ++c) {
      const auto w = g.window(r, c);
      const auto i = static_cast<std::size_t>(r * g.n_cols + c);
      out += std::to_string(r) + "," + std::to_string(c) + "," + std::to_string(w.x0) + "," +
             std::to_string(w.y0) + "," + std::to_string(maps.eos.cells[i].eos_count) + "," +
             format_double(maps.bz.cells[i].bz_fraction) + "," +
             (maps.bz.cells[i].is_tissue ? "1" : "0") + "\n";
    }
  return out;
}

inline json grid_to_json(const WindowGrid& g) {
  return {{"slide_width", g.slide_width}, {"slide_height", g.slide_height}, {"kernel", g.kernel},
          {"stride", g.stride},           {"n_rows", g.n_rows},             {"n_cols", g.n_cols}};
}

inline json score_map_json(const ScanMaps& maps) {
  json eos = json::array(), bz = json::array(), tissue = json::array();
  for (std::size_t i = 0; i < maps.eos.cells.size(); ++i) {
    eos.push_back(maps.eos.cells[i].eos_count);
    bz.push_back(maps.bz.cells[i].bz_fraction);
    tissue.push_back(maps.bz.cells[i].is_tissue);
  }
  return {{"grid", grid_to_json(maps.eos.grid)},
          {"eos_count", std::move(eos)},
          {"bz_fraction", std::move(bz)},
          {"is_tissue", std::move(tissue)}};
}

/// One matrix row per map row, comma separated: plot-ready heat values.
inline std::string heat_matrix_csv(const ScoreMap& map) {
  std::string out;
  for (std::int64_t r = 0; r < map.grid.n_rows; ++r) {
    for (std::int64_t c = 0; c < map.grid.n_cols; ++c) {
      if (c) out += ",";
      out += format_double(map.value(static_cast<std::size_t>(r * map.grid.n_cols + c)));
    }
    out += "\n";
  }
  return out;
}

}  // namespace eoe
