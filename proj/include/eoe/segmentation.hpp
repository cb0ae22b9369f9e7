#pragma once

// Pluggable segmentation backends. A backend maps a slide rectangle to a
// two-channel semantic mask and must be deterministic and safe to call from
// several threads at once.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "eoe/annotation.hpp"
#include "eoe/bitmap.hpp"
#include "eoe/io.hpp"

namespace eoe {

enum class InputKind { kAnnotation, kRgb, kMask };

struct BackendInfo {
  std::string name;
  InputKind input = InputKind::kAnnotation;
};

class SegmentationBackend {
 public:
  virtual ~SegmentationBackend() = default;
  virtual BackendInfo info() const = 0;
  /// Slide width/height the backend can segment.
  virtual PixelRect bounds() const = 0;
  virtual SemanticMask segment(const PixelRect& region) const = 0;
};

using BackendPtr = std::shared_ptr<const SegmentationBackend>;

/// Perfect segmentation: the rasterized ground truth.
class OracleBackend final : public SegmentationBackend {
 public:
  explicit OracleBackend(SlideAnnotation annotation, std::int64_t eos_radius = kEosRadius)
      : annotation_(std::move(annotation)), eos_radius_(eos_radius) {}

  BackendInfo info() const override { return {"oracle", InputKind::kAnnotation}; }
  PixelRect bounds() const override { return annotation_.bounds(); }
  SemanticMask segment(const PixelRect& region) const override {
    return rasterize(annotation_, region, eos_radius_);
  }

 private:
  SlideAnnotation annotation_;
  std::int64_t eos_radius_;
};

inline BackendPtr oracle_backend(SlideAnnotation annotation, std::int64_t eos_radius = kEosRadius) {
  return std::make_shared<OracleBackend>(std::move(annotation), eos_radius);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

}  // namespace detail

/// Flips each pixel of each channel independently with probability `flip_rate`.
/// The draw for a pixel depends only on (seed, requested region, pixel, channel).
class DegradedBackend final : public SegmentationBackend {
 public:
  DegradedBackend(BackendPtr base, double flip_rate, std::uint64_t seed)
      : base_(std::move(base)), flip_rate_(flip_rate), seed_(seed) {
    if (!base_) throw ParameterError("degraded_backend: null base backend");
    if (!(flip_rate >= 0.0 && flip_rate <= 1.0))
      throw ParameterError("degraded_backend: flip rate must be in [0, 1]");
  }

  BackendInfo info() const override {
    auto b = base_->info();
    return {"degraded(" + b.name + ")", b.input};
  }
  PixelRect bounds() const override { return base_->bounds(); }

  SemanticMask segment(const PixelRect& region) const override {
    SemanticMask m = base_->segment(region);
    if (flip_rate_ == 0.0) return m;
    std::uint64_t h = detail::hash_combine(seed_, static_cast<std::uint64_t>(region.x0));
    h = detail::hash_combine(h, static_cast<std::uint64_t>(region.y0));
    h = detail::hash_combine(h, static_cast<std::uint64_t>(region.width));
    h = detail::hash_combine(h, static_cast<std::uint64_t>(region.height));
    flip(m.eos, detail::hash_combine(h, 1));
    flip(m.bz, detail::hash_combine(h, 2));
    return m;
  }

 private:
  void flip(Bitmap& bm, std::uint64_t key) const {
    auto bits = bm.data();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      const std::uint64_t r = detail::splitmix64(key ^ (static_cast<std::uint64_t>(i) * 0xd1b54a32d192ed03ULL));
      const double u = static_cast<double>(r >> 11) * 0x1.0p-53;
      if (u < flip_rate_) bits[i] ^= 1;
    }
  }

  BackendPtr base_;
  double flip_rate_;
  std::uint64_t seed_;
};

inline BackendPtr degraded_backend(BackendPtr base, double flip_rate, std::uint64_t seed) {
  return std::make_shared<DegradedBackend>(std::move(base), flip_rate, seed);
}

/// Precomputed full-slide masks, e.g. exported from an external model.
class MaskBackend final : public SegmentationBackend {
 public:
  explicit MaskBackend(SemanticMask full) : full_(std::move(full)) {
    if (full_.eos.width() != full_.bz.width() || full_.eos.height() != full_.bz.height())
      throw DataError("mask backend: eos and bz masks differ in size");
  }

  BackendInfo info() const override { return {"masks", InputKind::kMask}; }
  PixelRect bounds() const override { return full_.region; }
  SemanticMask segment(const PixelRect& region) const override {
    if (!full_.region.contains(region))
      throw ParameterError("mask backend: region " + region.to_string() + " outside masks");
    SemanticMask m;
    m.region = region;
    const PixelRect local{region.x0 - full_.region.x0, region.y0 - full_.region.y0, region.width,
                          region.height};
    m.eos = full_.eos.crop(local);
    m.bz = full_.bz.crop(local);
    return m;
  }

 private:
  SemanticMask full_;
};

/// Loads `<prefix>.eos.pgm` and `<prefix>.bz.pgm`.
inline SemanticMask load_mask_pair(const std::filesystem::path& prefix) {
  SemanticMask m;
  m.eos = read_pgm(prefix.string() + ".eos.pgm");
  m.bz = read_pgm(prefix.string() + ".bz.pgm");
  if (m.eos.width() != m.bz.width() || m.eos.height() != m.bz.height())
    throw DataError(prefix.string() + ": eos and bz masks differ in size");
  m.region = {0, 0, m.eos.width(), m.eos.height()};
  return m;
}

inline void save_mask_pair(const std::filesystem::path& prefix, const SemanticMask& m) {
  write_pgm(prefix.string() + ".eos.pgm", m.eos);
  write_pgm(prefix.string() + ".bz.pgm", m.bz);
}

inline BackendPtr mask_backend(const std::filesystem::path& prefix) {
  return std::make_shared<MaskBackend>(load_mask_pair(prefix));
}

/// Naive baseline on raw RGB: a pixel is eosinophil when its luma is below
/// `eos_cutoff` and basal zone when below `bz_cutoff`.
class LuminanceBackend final : public SegmentationBackend {
 public:
  LuminanceBackend(RgbImage raster, int eos_cutoff = 90, int bz_cutoff = 150)
      : raster_(std::move(raster)), eos_cutoff_(eos_cutoff), bz_cutoff_(bz_cutoff) {}

  BackendInfo info() const override { return {"luminance", InputKind::kRgb}; }
  PixelRect bounds() const override { return {0, 0, raster_.width, raster_.height}; }
  SemanticMask segment(const PixelRect& region) const override {
    if (!bounds().contains(region))
      throw ParameterError("luminance backend: region " + region.to_string() + " outside raster");
    SemanticMask m(region);
    for (std::int64_t y = 0; y < region.height; ++y)
      for (std::int64_t x = 0; x < region.width; ++x) {
        const auto l = raster_.luma_milli(region.x0 + x, region.y0 + y);
        if (l < 1000 * eos_cutoff_) m.eos.set(x, y);
        if (l < 1000 * bz_cutoff_) m.bz.set(x, y);
      }
    return m;
  }

 private:
  RgbImage raster_;
  int eos_cutoff_;
  int bz_cutoff_;
};

}  // namespace eoe
