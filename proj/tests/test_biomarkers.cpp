#include <gtest/gtest.h>

#include <cmath>

#include "eoe/biomarkers.hpp"

using namespace eoe;

namespace {

ScanMaps maps_from(const std::vector<LocalScore>& cells) {
  WindowGrid g{static_cast<std::int64_t>(cells.size()) * 10, 10, 10, 10, static_cast<std::int64_t>(cells.size()), 1};
  return {{Feature::kEosIntact, g, cells}, {Feature::kBasalZone, g, cells}};
}

}  // namespace

TEST(Biomarkers, PeakAndSpatialEos) {
  const auto r = biomarkers(maps_from({{3, 0, true}, {20, 0, true}, {7, 0, true}}));
  EXPECT_EQ(r.scores.pec, 20);
  EXPECT_DOUBLE_EQ(r.scores.sec, 1.0 / 3.0);
}

TEST(Biomarkers, SbzCountsTissueCellsOnly) {
  const auto r = biomarkers(maps_from({{0, 0.10, true}, {0, 0.15, true}, {0, 0.80, false}}));
  EXPECT_EQ(r.scores.pbz, 0.80);
  EXPECT_EQ(r.scores.sbz, 0.5);
  EXPECT_FALSE(r.sbz_no_tissue);
}

TEST(Biomarkers, ThresholdsAreInclusive) {
  const auto r = biomarkers(maps_from({{15, 0.15, true}, {14, 0.1499, true}}));
  EXPECT_EQ(r.scores.sec, 0.5);
  EXPECT_EQ(r.scores.sbz, 0.5);
}

TEST(Biomarkers, AllZeroAndNoTissue) {
  const auto z = biomarkers(maps_from({{0, 0, true}, {0, 0, true}}));
  EXPECT_EQ(z.scores, (BiomarkerVector{0, 0, 0, 0}));
  const auto n = biomarkers(maps_from({{20, 0.5, false}}));
  EXPECT_TRUE(n.sbz_no_tissue);
  EXPECT_EQ(n.scores.sbz, 0.0);
  EXPECT_EQ(n.scores.sec, 1.0);  // SEC counts every cell by default
  BiomarkerOptions opt;
  opt.sec_denominator = Denominator::kTissueCells;
  const auto t = biomarkers(maps_from({{20, 0.5, false}}), opt);
  EXPECT_TRUE(t.sec_no_tissue);
}

TEST(Biomarkers, BoundsAndErrors) {
  const auto r = biomarkers(maps_from({{30, 1.0, true}, {2, 0.2, false}}));
  EXPECT_GE(r.scores.sec, 0.0);
  EXPECT_LE(r.scores.sec, 1.0);
  EXPECT_LE(r.scores.sbz, 1.0);
  EXPECT_THROW(biomarkers(maps_from({})), ParameterError);
  auto m = maps_from({{1, 0, true}, {2, 0, true}});
  m.bz.grid.stride = 5;
  EXPECT_THROW(biomarkers(m), ParameterError);
}

TEST(Biomarkers, PeakCells) {
  const auto m = maps_from({{5, 0.2, true}, {9, 0.1, true}, {9, 0.2, true}});
  EXPECT_EQ(peak_cells(m.eos), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(peak_cells(m.bz), (std::vector<std::size_t>{0, 2}));
}

TEST(BzhGradeBin, BoundaryTable) {
  const double eps = 1e-9;
  EXPECT_EQ(bzh_grade_bin(0.0), 0);
  EXPECT_EQ(bzh_grade_bin(0.15), 0);
  EXPECT_EQ(bzh_grade_bin(0.15 + eps), 1);
  EXPECT_EQ(bzh_grade_bin(std::nextafter(0.33, 0.0)), 1);
  EXPECT_EQ(bzh_grade_bin(0.33), 2);
  EXPECT_EQ(bzh_grade_bin(0.66), 2);
  EXPECT_EQ(bzh_grade_bin(0.661), 3);
  EXPECT_EQ(bzh_grade_bin(0.66 + eps), 3);
  EXPECT_EQ(bzh_grade_bin(1.0), 3);
  EXPECT_THROW(bzh_grade_bin(-0.1), ParameterError);
  EXPECT_THROW(bzh_grade_bin(std::nan("")), ParameterError);
}

TEST(Biomarkers, Json) {
  const auto j = to_json(BiomarkerVector{12, 0.25, 0.5, 0.125});
  EXPECT_EQ(j.at("pec"), 12);
  EXPECT_EQ(j.at("sbz"), 0.125);
}
