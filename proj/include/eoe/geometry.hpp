#pragma once

// Pixel-rectangle arithmetic: sub-patch tilings and strided HPF window grids.
// Origin is top-left, x grows to the right, y grows downwards, and every
// enumeration is row-major.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "eoe/error.hpp"

namespace eoe {

/// Pixel side of one high-power field (548 um at 400x).
inline constexpr std::int64_t kHpfSize = 2144;
inline constexpr std::int64_t kHpfStride = 500;
inline constexpr std::int64_t kSubPatchSize = 448;
inline constexpr std::int64_t kSubPatchOverlap = 24;
/// Annotation patches used for labeling, and their training sub-patch overlap.
inline constexpr std::int64_t kLabelPatchSize = 1200;
inline constexpr std::int64_t kLabelPatchOverlap = 72;

struct PixelRect {
  std::int64_t x0 = 0;
  std::int64_t y0 = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;

  constexpr std::int64_t x1() const { return x0 + width; }   // exclusive
  constexpr std::int64_t y1() const { return y0 + height; }  // exclusive
  constexpr std::int64_t area() const { return width * height; }

  constexpr bool contains(std::int64_t x, std::int64_t y) const {
    return x >= x0 && x < x1() && y >= y0 && y < y1();
  }
  constexpr bool contains(const PixelRect& other) const {
    return other.x0 >= x0 && other.y0 >= y0 && other.x1() <= x1() && other.y1() <= y1();
  }
  constexpr bool valid() const { return width > 0 && height > 0 && x0 >= 0 && y0 >= 0; }

  friend constexpr bool operator==(const PixelRect&, const PixelRect&) = default;

  std::string to_string() const {
    return "[" + std::to_string(x0) + "," + std::to_string(y0) + " " + std::to_string(width) + "x" +
           std::to_string(height) + "]";
  }
};

inline void require_valid(const PixelRect& r, const char* what) {
  if (!r.valid()) throw ParameterError(std::string(what) + ": invalid rectangle " + r.to_string());
}

struct TileGrid {
  PixelRect region;
  std::int64_t tile_size = 0;
  std::int64_t overlap = 0;
  std::int64_t n_cols = 0;
  std::int64_t n_rows = 0;
  std::vector<PixelRect> tiles;  // row-major
};

namespace detail {

// Offsets of tiles along one axis. The last tile is clamped flush to the end.
inline std::vector<std::int64_t> tile_offsets(std::int64_t length, std::int64_t tile,
                                              std::int64_t overlap) {
  std::vector<std::int64_t> offsets;
  const std::int64_t step = tile - overlap;
  std::int64_t off = 0;
  for (;;) {
    offsets.push_back(off);
    if (off + tile >= length) break;
    off = std::min(off + step, length - tile);
  }
  return offsets;
}

}  // namespace detail

/// Covers `region` with square tiles of `tile_size` placed every (tile_size - overlap) pixels.
inline TileGrid subpatch_grid(const PixelRect& region, std::int64_t tile_size,
                              std::int64_t overlap) {
  require_valid(region, "subpatch_grid");
  if (tile_size <= 0 || tile_size > region.width || tile_size > region.height)
    throw ParameterError("subpatch_grid: tile size " + std::to_string(tile_size) +
                         " does not fit region " + region.to_string());
  if (overlap < 0 || overlap >= tile_size)
    throw ParameterError("subpatch_grid: overlap must satisfy 0 <= overlap < tile size");

  TileGrid grid{region, tile_size, overlap, 0, 0, {}};
  const auto xs = detail::tile_offsets(region.width, tile_size, overlap);
  const auto ys = detail::tile_offsets(region.height, tile_size, overlap);
  grid.n_cols = static_cast<std::int64_t>(xs.size());
  grid.n_rows = static_cast<std::int64_t>(ys.size());
  grid.tiles.reserve(xs.size() * ys.size());
  for (auto y : ys)
    for (auto x : xs) grid.tiles.push_back({region.x0 + x, region.y0 + y, tile_size, tile_size});
  return grid;
}

/// Strided grid of full kernel-sized windows over a slide. Partial edge windows are dropped.
struct WindowGrid {
  std::int64_t slide_width = 0;
  std::int64_t slide_height = 0;
  std::int64_t kernel = 0;
  std::int64_t stride = 0;
  std::int64_t n_cols = 0;
  std::int64_t n_rows = 0;

  std::int64_t size() const { return n_cols * n_rows; }
  PixelRect window(std::int64_t row, std::int64_t col) const {
    return {col * stride, row * stride, kernel, kernel};
  }
  PixelRect window(std::int64_t index) const { return window(index / n_cols, index % n_cols); }

  friend bool operator==(const WindowGrid&, const WindowGrid&) = default;
};

inline WindowGrid hpf_windows(std::int64_t slide_width, std::int64_t slide_height,
                              std::int64_t kernel = kHpfSize, std::int64_t stride = kHpfStride) {
  if (kernel <= 0) throw ParameterError("hpf_windows: kernel must be positive");
  if (stride <= 0) throw ParameterError("hpf_windows: stride must be positive");
  if (slide_width < 0 || slide_height < 0)
    throw ParameterError("hpf_windows: negative slide dimensions");
  auto count = [&](std::int64_t side) -> std::int64_t {
    return side >= kernel ? (side - kernel) / stride + 1 : 0;
  };
  WindowGrid g{slide_width, slide_height, kernel, stride, count(slide_width), count(slide_height)};
  if (g.n_cols == 0 || g.n_rows == 0) g.n_cols = g.n_rows = 0;
  return g;
}

}  // namespace eoe
