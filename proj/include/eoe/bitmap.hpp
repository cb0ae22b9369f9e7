#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "eoe/error.hpp"
#include "eoe/geometry.hpp"

namespace eoe {

/// Dense boolean raster, one byte (0 or 1) per pixel, row-major.
class Bitmap {
 public:
  Bitmap() = default;
  Bitmap(std::int64_t width, std::int64_t height, bool fill = false)
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw ParameterError("Bitmap: negative dimensions");
    bits_.assign(static_cast<std::size_t>(width * height), fill ? 1 : 0);
  }

  std::int64_t width() const { return width_; }
  std::int64_t height() const { return height_; }
  std::int64_t size() const { return width_ * height_; }

  bool get(std::int64_t x, std::int64_t y) const { return bits_[index(x, y)] != 0; }
  void set(std::int64_t x, std::int64_t y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }

  std::span<std::uint8_t> row(std::int64_t y) {
    return {bits_.data() + y * width_, static_cast<std::size_t>(width_)};
  }
  std::span<const std::uint8_t> row(std::int64_t y) const {
    return {bits_.data() + y * width_, static_cast<std::size_t>(width_)};
  }
  std::span<const std::uint8_t> data() const { return bits_; }
  std::span<std::uint8_t> data() { return bits_; }

  /// Sets [x_begin, x_end) on row y.
  void fill_span(std::int64_t y, std::int64_t x_begin, std::int64_t x_end) {
    if (x_end > x_begin) std::memset(bits_.data() + y * width_ + x_begin, 1, x_end - x_begin);
  }

  std::int64_t count() const {
    return static_cast<std::int64_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }

  /// Positive pixels inside the local rectangle `r` (coordinates relative to this bitmap).
  std::int64_t count_in(const PixelRect& r) const {
    std::int64_t n = 0;
    for (std::int64_t y = r.y0; y < r.y1(); ++y) {
      const auto* p = bits_.data() + y * width_;
      n += std::count(p + r.x0, p + r.x1(), std::uint8_t{1});
    }
    return n;
  }

  /// Copy of the local rectangle `r`.
  Bitmap crop(const PixelRect& r) const {
    if (r.x0 < 0 || r.y0 < 0 || r.x1() > width_ || r.y1() > height_)
      throw ParameterError("Bitmap::crop: rectangle " + r.to_string() + " out of bounds");
    Bitmap out(r.width, r.height);
    for (std::int64_t y = 0; y < r.height; ++y)
      std::memcpy(out.bits_.data() + y * r.width, bits_.data() + (r.y0 + y) * width_ + r.x0,
                  static_cast<std::size_t>(r.width));
    return out;
  }

  /// OR-merges `src` into this bitmap with its top-left corner at (dx, dy).
  void or_into(const Bitmap& src, std::int64_t dx, std::int64_t dy) {
    if (dx < 0 || dy < 0 || dx + src.width_ > width_ || dy + src.height_ > height_)
      throw ParameterError("Bitmap::or_into: source does not fit");
    for (std::int64_t y = 0; y < src.height_; ++y) {
      auto* d = bits_.data() + (dy + y) * width_ + dx;
      const auto* s = src.bits_.data() + y * src.width_;
      for (std::int64_t x = 0; x < src.width_; ++x) d[x] |= s[x];
    }
  }

  Bitmap complement() const {
    Bitmap out = *this;
    for (auto& b : out.bits_) b ^= 1;
    return out;
  }

  friend bool operator==(const Bitmap&, const Bitmap&) = default;

 private:
  std::size_t index(std::int64_t x, std::int64_t y) const {
    return static_cast<std::size_t>(y * width_ + x);
  }

  std::int64_t width_ = 0;
  std::int64_t height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Interleaved 8-bit RGB raster.
struct RgbImage {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::uint8_t> rgb;  // 3 * width * height

  RgbImage() = default;
  RgbImage(std::int64_t w, std::int64_t h, std::uint8_t r = 255, std::uint8_t g = 255,
           std::uint8_t b = 255)
      : width(w), height(h), rgb(static_cast<std::size_t>(3 * w * h)) {
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
      rgb[i] = r;
      rgb[i + 1] = g;
      rgb[i + 2] = b;
    }
  }

  void set(std::int64_t x, std::int64_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto i = static_cast<std::size_t>(3 * (y * width + x));
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }

  /// Rec. 601 luma scaled by 1000 (integer, exact).
  std::int64_t luma_milli(std::int64_t x, std::int64_t y) const {
    auto i = static_cast<std::size_t>(3 * (y * width + x));
    return 299 * rgb[i] + 587 * rgb[i + 1] + 114 * rgb[i + 2];
  }
};

}  // namespace eoe
