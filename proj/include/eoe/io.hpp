#pragma once

// File formats: annotation JSON, 8-bit PGM masks, PPM rasters, number formatting.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "eoe/annotation.hpp"
#include "eoe/bitmap.hpp"
#include "eoe/error.hpp"

namespace eoe {

using json = nlohmann::json;

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Report the line of the failing byte.
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw DataError(source + ":" + std::to_string(line) + ": JSON parse error: " + e.what());
  }
}

inline json load_json(const std::filesystem::path& path) {
  return parse_json_text(read_text_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Annotation JSON
// {"slide_id": str, "width": int, "height": int, "eos_centers": [[x,y],...],
//  "bz_polygons": [[[x,y],...],...], "tissue_polygons": [...] (optional)}

namespace detail {

inline const json& require_field(const json& j, const char* field, const std::string& source) {
  if (!j.is_object()) throw DataError(source + ": top level must be a JSON object");
  auto it = j.find(field);
  if (it == j.end()) throw DataError(source + ": missing field '" + field + "'");
  return *it;
}

inline Point parse_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw DataError(where + ": expected [x, y] integer pair");
  return {j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
}

inline std::vector<Polygon> parse_polygons(const json& j, const std::string& where) {
  if (!j.is_array()) throw DataError(where + ": expected an array of polygons");
  std::vector<Polygon> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    if (!j[i].is_array()) throw DataError(w + ": expected an array of vertices");
    Polygon poly;
    for (std::size_t k = 0; k < j[i].size(); ++k)
      poly.push_back(parse_point(j[i][k], w + "[" + std::to_string(k) + "]"));
    out.push_back(std::move(poly));
  }
  return out;
}

inline json polygons_to_json(const std::vector<Polygon>& polys) {
  json arr = json::array();
  for (const auto& p : polys) {
    json poly = json::array();
    for (const auto& v : p) poly.push_back({v.x, v.y});
    arr.push_back(std::move(poly));
  }
  return arr;
}

}  // namespace detail

inline SlideAnnotation annotation_from_json(const json& j, const std::string& source = "annotation") {
  SlideAnnotation a;
  const auto& id = detail::require_field(j, "slide_id", source);
  if (!id.is_string()) throw DataError(source + ": field 'slide_id' must be a string");
  a.slide_id = id.get<std::string>();
  const auto& w = detail::require_field(j, "width", source);
  const auto& h = detail::require_field(j, "height", source);
  if (!w.is_number_integer()) throw DataError(source + ": field 'width' must be an integer");
  if (!h.is_number_integer()) throw DataError(source + ": field 'height' must be an integer");
  a.width = w.get<std::int64_t>();
  a.height = h.get<std::int64_t>();
  const auto& centers = detail::require_field(j, "eos_centers", source);
  if (!centers.is_array()) throw DataError(source + ": field 'eos_centers' must be an array");
  for (std::size_t i = 0; i < centers.size(); ++i)
    a.eos_centers.push_back(
        detail::parse_point(centers[i], source + ": eos_centers[" + std::to_string(i) + "]"));
  a.bz_polygons =
      detail::parse_polygons(detail::require_field(j, "bz_polygons", source), source + ": bz_polygons");
  if (auto it = j.find("tissue_polygons"); it != j.end() && !it->is_null())
    a.tissue_polygons = detail::parse_polygons(*it, source + ": tissue_polygons");
  validate(a);
  return a;
}

inline json annotation_to_json(const SlideAnnotation& a) {
  json centers = json::array();
  for (const auto& c : a.eos_centers) centers.push_back({c.x, c.y});
  json j{{"slide_id", a.slide_id},
         {"width", a.width},
         {"height", a.height},
         {"eos_centers", std::move(centers)},
         {"bz_polygons", detail::polygons_to_json(a.bz_polygons)}};
  if (!a.tissue_polygons.empty()) j["tissue_polygons"] = detail::polygons_to_json(a.tissue_polygons);
  return j;
}

inline SlideAnnotation load_annotation(const std::filesystem::path& path) {
  return annotation_from_json(load_json(path), path.string());
}

inline void save_annotation(const std::filesystem::path& path, const SlideAnnotation& a) {
  write_text_file(path, annotation_to_json(a).dump(1) + "\n");
}

// ---------------------------------------------------------------------------
// Netpbm: binary PGM masks (0 = none, 255 = positive) and binary PPM rasters.

namespace detail {

struct PnmHeader {
  std::string magic;
  std::int64_t width = 0;
  std::int64_t height = 0;
  int maxval = 0;
};

inline std::int64_t read_pnm_int(std::istream& in, const std::string& source) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  std::int64_t v = 0;
  if (!(in >> v)) throw DataError(source + ": malformed Netpbm header");
  return v;
}

inline PnmHeader read_pnm_header(std::istream& in, const std::string& source) {
  PnmHeader h;
  in >> h.magic;
  if (!in) throw DataError(source + ": empty file");
  h.width = read_pnm_int(in, source);
  h.height = read_pnm_int(in, source);
  h.maxval = static_cast<int>(read_pnm_int(in, source));
  if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 255)
    throw DataError(source + ": unsupported Netpbm dimensions or maxval");
  in.get();  // single whitespace before the raster
  return h;
}

}  // namespace detail

inline void write_pgm(const std::filesystem::path& path, const Bitmap& bm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "P5\n" << bm.width() << " " << bm.height() << "\n255\n";
  std::vector<char> row(static_cast<std::size_t>(bm.width()));
  for (std::int64_t y = 0; y < bm.height(); ++y) {
    auto r = bm.row(y);
    for (std::size_t x = 0; x < r.size(); ++x) row[x] = r[x] ? static_cast<char>(255) : 0;
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

/// Nonzero gray levels are positive.
inline Bitmap read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  const auto h = detail::read_pnm_header(in, path.string());
  if (h.magic != "P5") throw DataError(path.string() + ": expected binary PGM (P5)");
  Bitmap bm(h.width, h.height);
  std::vector<char> row(static_cast<std::size_t>(h.width));
  for (std::int64_t y = 0; y < h.height; ++y) {
    if (!in.read(row.data(), static_cast<std::streamsize>(row.size())))
      throw DataError(path.string() + ": truncated raster at row " + std::to_string(y));
    auto r = bm.row(y);
    for (std::size_t x = 0; x < r.size(); ++x) r[x] = row[x] != 0 ? 1 : 0;
  }
  return bm;
}

inline void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
}

inline RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  const auto h = detail::read_pnm_header(in, path.string());
  if (h.magic != "P6") throw DataError(path.string() + ": expected binary PPM (P6)");
  RgbImage img;
  img.width = h.width;
  img.height = h.height;
  img.rgb.resize(static_cast<std::size_t>(3 * h.width * h.height));
  if (!in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size())))
    throw DataError(path.string() + ": truncated raster");
  return img;
}

}  // namespace eoe
