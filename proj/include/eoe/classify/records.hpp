#pragma once

// Slide records and the cohort CSV format:
// slide_id,pec,sec,pbz,sbz,ei_grade,ei_stage,bzh_grade,bzh_stage,hss_total,severe
// HSS columns and `severe` may be empty (or the columns absent) for unlabeled cohorts.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eoe/biomarkers.hpp"
#include "eoe/error.hpp"
#include "eoe/io.hpp"

namespace eoe {

/// Peak count at or above which a slide is active; also the center of the routing window.
inline constexpr std::int64_t kSeverityPecThreshold = 15;
inline constexpr double kSeverityHssThreshold = 3.0;

/// Histologically severe: PEC >= 15 or HSS total > 3.
inline bool derive_severity(std::int64_t pec_clinical, double hss_total) {
  if (pec_clinical < 0 || hss_total < 0.0)
    throw ParameterError("derive_severity: inputs must be non-negative");
  return pec_clinical >= kSeverityPecThreshold || hss_total > kSeverityHssThreshold;
}

inline constexpr std::size_t kNumFeatures = 4;
using FeatureVector = std::array<double, kNumFeatures>;

inline FeatureVector to_features(const BiomarkerVector& b) {
  return {static_cast<double>(b.pec), b.sec, b.pbz, b.sbz};
}

struct SlideRecord {
  std::string slide_id;
  BiomarkerVector features;
  std::optional<HssLabels> hss;
  std::optional<bool> severe;
};

inline const std::vector<std::string>& cohort_columns() {
  static const std::vector<std::string> cols{"slide_id",  "pec",       "sec",      "pbz",
                                             "sbz",       "ei_grade",  "ei_stage", "bzh_grade",
                                             "bzh_stage", "hss_total", "severe"};
  return cols;
}

inline std::string cohort_csv_header() {
  std::string h;
  for (const auto& c : cohort_columns()) h += (h.empty() ? "" : ",") + c;
  return h + "\n";
}

inline std::string cohort_csv_row(const SlideRecord& r) {
  std::string s = r.slide_id + "," + std::to_string(r.features.pec) + "," +
                  format_double(r.features.sec) + "," + format_double(r.features.pbz) + "," +
                  format_double(r.features.sbz) + ",";
  if (r.hss)
    s += std::to_string(r.hss->ei_grade) + "," + std::to_string(r.hss->ei_stage) + "," +
         std::to_string(r.hss->bzh_grade) + "," + std::to_string(r.hss->bzh_stage) + "," +
         format_double(r.hss->hss_total) + ",";
  else
    s += ",,,,,";
  if (r.severe) s += *r.severe ? "1" : "0";
  return s + "\n";
}

inline std::string cohort_to_csv(const std::vector<SlideRecord>& records) {
  std::string out = cohort_csv_header();
  for (const auto& r : records) out += cohort_csv_row(r);
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(where + ": not a number: '" + s + "'");
  }
}

inline std::int64_t parse_int(const std::string& s, const std::string& where) {
  const double v = parse_number(s, where);
  if (v != static_cast<double>(static_cast<std::int64_t>(v)))
    throw DataError(where + ": expected an integer, got '" + s + "'");
  return static_cast<std::int64_t>(v);
}

}  // namespace detail

/// Parses a cohort CSV. With `require_labels`, a missing or empty `severe` value is a schema error.
inline std::vector<SlideRecord> cohort_from_csv(const std::string& text, const std::string& source,
                                                bool require_labels) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty cohort file");
  const auto header = detail::split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* needed : {"slide_id", "pec", "sec", "pbz", "sbz"})
    if (!col.count(needed)) throw DataError(source + ": missing column '" + std::string(needed) + "'");
  if (require_labels && !col.count("severe"))
    throw DataError(source + ": missing column 'severe' (required for training)");

  std::vector<SlideRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (f.size() != header.size())
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(f.size()));
    const auto field = [&](const char* name) -> const std::string& { return f[col.at(name)]; };
    const auto optional_field = [&](const char* name) -> std::optional<std::string> {
      auto it = col.find(name);
      if (it == col.end() || f[it->second].empty()) return std::nullopt;
      return f[it->second];
    };
    SlideRecord r;
    r.slide_id = field("slide_id");
    r.features.pec = detail::parse_int(field("pec"), where + " column 'pec'");
    r.features.sec = detail::parse_number(field("sec"), where + " column 'sec'");
    r.features.pbz = detail::parse_number(field("pbz"), where + " column 'pbz'");
    r.features.sbz = detail::parse_number(field("sbz"), where + " column 'sbz'");
    if (r.features.pec < 0) throw DataError(where + " column 'pec': negative count");
    for (auto [v, name] : {std::pair{r.features.sec, "sec"}, std::pair{r.features.pbz, "pbz"},
                           std::pair{r.features.sbz, "sbz"}})
      if (!(v >= 0.0 && v <= 1.0))
        throw DataError(where + " column '" + name + "': fraction outside [0, 1]");

    const auto total = optional_field("hss_total");
    if (total) {
      HssLabels h;
      h.hss_total = detail::parse_number(*total, where + " column 'hss_total'");
      const auto grade = [&](const char* name) {
        const auto v = optional_field(name);
        if (!v) return 0;
        const auto g = detail::parse_int(*v, where + " column '" + name + "'");
        if (g < 0 || g > 3) throw DataError(where + " column '" + name + "': must be 0-3");
        return static_cast<int>(g);
      };
      h.ei_grade = grade("ei_grade");
      h.ei_stage = grade("ei_stage");
      h.bzh_grade = grade("bzh_grade");
      h.bzh_stage = grade("bzh_stage");
      r.hss = h;
    }
    if (const auto sev = optional_field("severe")) {
      if (*sev == "1" || *sev == "true")
        r.severe = true;
      else if (*sev == "0" || *sev == "false")
        r.severe = false;
      else
        throw DataError(where + " column 'severe': expected 0/1, got '" + *sev + "'");
    } else if (require_labels) {
      throw DataError(where + " column 'severe': missing label (required for training)");
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<SlideRecord> load_cohort(const std::filesystem::path& path, bool require_labels) {
  return cohort_from_csv(read_text_file(path), path.string(), require_labels);
}

}  // namespace eoe
