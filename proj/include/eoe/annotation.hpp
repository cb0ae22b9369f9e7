#pragma once

// Expert annotations and their rasterization into semantic masks.
//
// Pixel (x, y) is the lattice point (x, y): disk membership and polygon
// membership are both evaluated at integer coordinates, so rasterizing a
// sub-rectangle yields exactly the corresponding crop of a full-slide raster.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "eoe/bitmap.hpp"
#include "eoe/error.hpp"
#include "eoe/geometry.hpp"

namespace eoe {

/// Radius (px) of the disk marked around each intact eosinophil center.
inline constexpr std::int64_t kEosRadius = 25;
/// Patches / windows with less tissue than this fraction are not tissue.
inline constexpr double kTissueThreshold = 0.15;
/// Default luminance cutoff (about 0.9 * 255) for the RGB tissue detector.
inline constexpr int kTissueLuminanceCutoff = 229;

struct Point {
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend constexpr bool operator==(const Point&, const Point&) = default;
};

using Polygon = std::vector<Point>;

struct SlideAnnotation {
  std::string slide_id;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<Point> eos_centers;
  std::vector<Polygon> bz_polygons;
  std::vector<Polygon> tissue_polygons;  // empty: no explicit tissue outline

  PixelRect bounds() const { return {0, 0, width, height}; }
};

/// Two independent channels; a pixel may be eosinophil, basal zone, both or neither.
struct SemanticMask {
  PixelRect region;
  Bitmap eos;
  Bitmap bz;

  SemanticMask() = default;
  explicit SemanticMask(const PixelRect& r)
      : region(r), eos(r.width, r.height), bz(r.width, r.height) {}

  friend bool operator==(const SemanticMask&, const SemanticMask&) = default;
};

struct TissueMask {
  PixelRect region;
  Bitmap bitmap;
};

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

inline std::int64_t isqrt(std::int64_t v) {
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

inline std::int64_t cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool on_segment(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

inline bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d) {
  const auto d1 = cross(c, d, a), d2 = cross(c, d, b), d3 = cross(a, b, c), d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  return (d1 == 0 && on_segment(c, d, a)) || (d2 == 0 && on_segment(c, d, b)) ||
         (d3 == 0 && on_segment(a, b, c)) || (d4 == 0 && on_segment(a, b, d));
}

}  // namespace detail

/// True when no two non-adjacent edges touch and adjacent edges meet only at their shared vertex.
inline bool is_simple_polygon(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    if (a == b) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point& c = poly[j];
      const Point& d = poly[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Shared vertex only: reject collinear fold-backs.
        const Point& shared = (j == i + 1) ? b : a;
        const Point& p = (j == i + 1) ? a : b;
        const Point& q = (j == i + 1) ? d : c;
        if (detail::cross(shared, p, q) == 0 &&
            (p.x - shared.x) * (q.x - shared.x) + (p.y - shared.y) * (q.y - shared.y) > 0)
          return false;
        continue;
      }
      if (detail::segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

/// Throws DataError naming the offending field.
inline void validate(const SlideAnnotation& a) {
  if (a.width <= 0 || a.height <= 0)
    throw DataError("annotation '" + a.slide_id + "': width/height must be positive");
  const auto in_bounds = [&](const Point& p) {
    return p.x >= 0 && p.y >= 0 && p.x < a.width && p.y < a.height;
  };
  for (std::size_t i = 0; i < a.eos_centers.size(); ++i)
    if (!in_bounds(a.eos_centers[i]))
      throw DataError("annotation '" + a.slide_id + "': eos_centers[" + std::to_string(i) +
                      "] outside the slide");
  const auto check_polys = [&](const std::vector<Polygon>& polys, const char* field) {
    for (std::size_t i = 0; i < polys.size(); ++i) {
      const std::string where = std::string(field) + "[" + std::to_string(i) + "]";
      if (polys[i].size() < 3)
        throw DataError("annotation '" + a.slide_id + "': " + where + " has fewer than 3 vertices");
      for (const auto& p : polys[i])
        if (!in_bounds(p))
          throw DataError("annotation '" + a.slide_id + "': " + where + " vertex outside the slide");
      if (!is_simple_polygon(polys[i]))
        throw DataError("annotation '" + a.slide_id + "': " + where + " is self-intersecting");
    }
  };
  check_polys(a.bz_polygons, "bz_polygons");
  check_polys(a.tissue_polygons, "tissue_polygons");
}

/// Marks every pixel of `out` (which covers `region`) within Euclidean distance `radius` of a center.
inline void fill_disks(Bitmap& out, const PixelRect& region, const std::vector<Point>& centers,
                       std::int64_t radius) {
  const std::int64_t r2 = radius * radius;
  for (const auto& c : centers) {
    if (c.x + radius < region.x0 || c.x - radius >= region.x1() || c.y + radius < region.y0 ||
        c.y - radius >= region.y1())
      continue;
    const std::int64_t y_lo = std::max(c.y - radius, region.y0);
    const std::int64_t y_hi = std::min(c.y + radius, region.y1() - 1);
    for (std::int64_t y = y_lo; y <= y_hi; ++y) {
      const std::int64_t dy = y - c.y;
      const std::int64_t half = detail::isqrt(r2 - dy * dy);
      const std::int64_t xa = std::max(c.x - half, region.x0);
      const std::int64_t xb = std::min(c.x + half + 1, region.x1());
      out.fill_span(y - region.y0, xa - region.x0, xb - region.x0);
    }
  }
}

/// Even-odd scanline fill of one polygon, boundary pixels included.
inline void fill_polygon(Bitmap& out, const PixelRect& region, const Polygon& poly) {
  if (poly.size() < 3) return;
  std::int64_t min_y = poly[0].y, max_y = poly[0].y;
  for (const auto& p : poly) {
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const std::int64_t y_lo = std::max(min_y, region.y0);
  const std::int64_t y_hi = std::min(max_y, region.y1() - 1);
  const std::size_t n = poly.size();
  std::vector<std::int64_t> crossings;

  const auto mark = [&](std::int64_t y, std::int64_t xa, std::int64_t xb) {  // inclusive
    xa = std::max(xa, region.x0);
    xb = std::min(xb, region.x1() - 1);
    if (xa <= xb) out.fill_span(y - region.y0, xa - region.x0, xb + 1 - region.x0);
  };

  for (std::int64_t y = y_lo; y <= y_hi; ++y) {
    crossings.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = poly[i];
      const Point& b = poly[(i + 1) % n];
      if ((a.y > y) != (b.y > y)) {
        std::int64_t num = a.x * (b.y - a.y) + (y - a.y) * (b.x - a.x);
        std::int64_t den = b.y - a.y;
        if (den < 0) {
          num = -num;
          den = -den;
        }
        // Only the ceiling matters: integer x is right of crossing c iff x >= ceil(c).
        crossings.push_back(detail::ceil_div(num, den));
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2)
      mark(y, crossings[k], crossings[k + 1] - 1);

    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = poly[i];
      const Point& b = poly[(i + 1) % n];
      if (y < std::min(a.y, b.y) || y > std::max(a.y, b.y)) continue;
      if (a.y == b.y) {
        mark(y, std::min(a.x, b.x), std::max(a.x, b.x));
      } else {
        const std::int64_t num = a.x * (b.y - a.y) + (y - a.y) * (b.x - a.x);
        const std::int64_t den = b.y - a.y;
        if (num % den == 0) mark(y, num / den, num / den);
      }
    }
  }
}

inline void fill_polygons(Bitmap& out, const PixelRect& region, const std::vector<Polygon>& polys) {
  for (const auto& p : polys) fill_polygon(out, region, p);
}

inline SemanticMask rasterize(const SlideAnnotation& annotation, const PixelRect& region,
                              std::int64_t eos_radius = kEosRadius) {
  require_valid(region, "rasterize");
  if (!annotation.bounds().contains(region))
    throw ParameterError("rasterize: region " + region.to_string() + " outside slide '" +
                         annotation.slide_id + "'");
  SemanticMask mask(region);
  fill_disks(mask.eos, region, annotation.eos_centers, eos_radius);
  fill_polygons(mask.bz, region, annotation.bz_polygons);
  return mask;
}

/// Tissue mask from the annotation's explicit tissue polygons.
inline TissueMask tissue_from_polygons(const SlideAnnotation& annotation, const PixelRect& region) {
  require_valid(region, "tissue_from_polygons");
  TissueMask t{region, Bitmap(region.width, region.height)};
  fill_polygons(t.bitmap, region, annotation.tissue_polygons);
  return t;
}

/// Fraction of tissue pixels inside `window` (slide coordinates).
inline double tissue_fraction(const TissueMask& mask, const PixelRect& window) {
  if (!mask.region.contains(window) || window.area() <= 0)
    throw ParameterError("tissue_fraction: window " + window.to_string() + " outside mask");
  const PixelRect local{window.x0 - mask.region.x0, window.y0 - mask.region.y0, window.width,
                        window.height};
  return static_cast<double>(mask.bitmap.count_in(local)) / static_cast<double>(window.area());
}

/// Pixel is tissue iff its luma 0.299R + 0.587G + 0.114B is strictly below `cutoff`.
inline TissueMask tissue_from_rgb(const RgbImage& raster,
                                  int luminance_cutoff = kTissueLuminanceCutoff) {
  if (luminance_cutoff < 0 || luminance_cutoff > 255)
    throw ParameterError("tissue_from_rgb: cutoff must be in [0, 255]");
  TissueMask t{{0, 0, raster.width, raster.height}, Bitmap(raster.width, raster.height)};
  const std::int64_t limit = 1000 * static_cast<std::int64_t>(luminance_cutoff);
  for (std::int64_t y = 0; y < raster.height; ++y)
    for (std::int64_t x = 0; x < raster.width; ++x)
      if (raster.luma_milli(x, y) < limit) t.bitmap.set(x, y);
  return t;
}

}  // namespace eoe
