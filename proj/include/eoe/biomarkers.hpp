#pragma once

// Whole-slide biomarkers from the two score maps:
//   PEC  peak eosinophil count over all HPFs
//   SEC  fraction of HPFs with at least 15 eosinophils
//   PBZ  peak basal-zone area fraction
//   SBZ  fraction of tissue HPFs with basal-zone fraction of at least 15%

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "eoe/scan.hpp"

namespace eoe {

inline constexpr std::int64_t kEosActiveThreshold = 15;
inline constexpr double kBzThreshold = 0.15;

struct BiomarkerVector {
  std::int64_t pec = 0;
  double sec = 0.0;
  double pbz = 0.0;
  double sbz = 0.0;
  friend bool operator==(const BiomarkerVector&, const BiomarkerVector&) = default;
};

/// HSS grade/stage scores for the two features with computed counterparts, plus the total.
struct HssLabels {
  int ei_grade = 0;
  int ei_stage = 0;
  int bzh_grade = 0;
  int bzh_stage = 0;
  double hss_total = 0.0;
  friend bool operator==(const HssLabels&, const HssLabels&) = default;
};

enum class Denominator { kAllCells, kTissueCells };

struct BiomarkerOptions {
  std::int64_t eos_threshold = kEosActiveThreshold;
  double bz_threshold = kBzThreshold;
  Denominator sec_denominator = Denominator::kAllCells;
  Denominator sbz_denominator = Denominator::kTissueCells;
};

struct BiomarkerResult {
  BiomarkerVector scores;
  /// SBZ had no tissue cells to average over and was set to 0.
  bool sbz_no_tissue = false;
  bool sec_no_tissue = false;
};

namespace detail {

// Cells passing `pass`, over the chosen denominator. The numerator is
// restricted to the same population so the result stays within [0, 1].
template <class Pass>
double spatial_fraction(const std::vector<LocalScore>& cells, Denominator d, Pass pass, bool& empty) {
  std::int64_t num = 0, den = 0;
  for (const auto& c : cells) {
    if (d == Denominator::kTissueCells && !c.is_tissue) continue;
    ++den;
    if (pass(c)) ++num;
  }
  empty = den == 0;
  return empty ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace detail

inline BiomarkerResult biomarkers(const ScoreMap& eos_map, const ScoreMap& bz_map,
                                  const BiomarkerOptions& opt = {}) {
  if (eos_map.cells.empty() || bz_map.cells.empty())
    throw ParameterError("biomarkers: empty score map");
  if (!(eos_map.grid == bz_map.grid) || eos_map.cells.size() != bz_map.cells.size())
    throw ParameterError("biomarkers: maps have different grid geometry");

  BiomarkerResult r;
  // Tissue flags come from the BZ map for both; the scan writes identical flags to each.
  std::vector<LocalScore> cells(eos_map.cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i)
    cells[i] = {eos_map.cells[i].eos_count, bz_map.cells[i].bz_fraction, bz_map.cells[i].is_tissue};

  for (const auto& c : cells) {
    r.scores.pec = std::max(r.scores.pec, c.eos_count);
    r.scores.pbz = std::max(r.scores.pbz, c.bz_fraction);
  }
  r.scores.sec = detail::spatial_fraction(
      cells, opt.sec_denominator, [&](const LocalScore& c) { return c.eos_count >= opt.eos_threshold; },
      r.sec_no_tissue);
  r.scores.sbz = detail::spatial_fraction(
      cells, opt.sbz_denominator, [&](const LocalScore& c) { return c.bz_fraction >= opt.bz_threshold; },
      r.sbz_no_tissue);
  return r;
}

inline BiomarkerResult biomarkers(const ScanMaps& maps, const BiomarkerOptions& opt = {}) {
  return biomarkers(maps.eos, maps.bz, opt);
}

/// Row-major indices of every cell attaining the map's maximum value.
inline std::vector<std::size_t> peak_cells(const ScoreMap& map) {
  std::vector<std::size_t> out;
  if (map.cells.empty()) return out;
  double best = map.value(0);
  for (std::size_t i = 1; i < map.cells.size(); ++i) best = std::max(best, map.value(i));
  for (std::size_t i = 0; i < map.cells.size(); ++i)
    if (map.value(i) == best) out.push_back(i);
  return out;
}

/// BZH grade bin of a basal-zone fraction: >15% and <33% is 1, 33-66% is 2, >66% is 3.
inline int bzh_grade_bin(double pbz) {
  if (!(pbz >= 0.0 && pbz <= 1.0)) throw ParameterError("bzh_grade_bin: fraction outside [0, 1]");
  if (pbz <= 0.15) return 0;
  if (pbz < 0.33) return 1;
  if (pbz <= 0.66) return 2;
  return 3;
}

inline json to_json(const BiomarkerVector& b) {
  return {{"pec", b.pec}, {"sec", b.sec}, {"pbz", b.pbz}, {"sbz", b.sbz}};
}

}  // namespace eoe
