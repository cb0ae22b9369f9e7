#include <gtest/gtest.h>

#include <filesystem>

#include "eoe/components.hpp"
#include "eoe/segmentation.hpp"

using namespace eoe;

namespace {

SlideAnnotation sample_annotation() {
  SlideAnnotation a;
  a.slide_id = "seg";
  a.width = 1000;
  a.height = 800;
  for (int i = 0; i < 6; ++i) a.eos_centers.push_back({100 + 120 * i, 150});
  a.eos_centers.push_back({500, 600});
  a.bz_polygons.push_back({{200, 300}, {700, 300}, {700, 500}, {200, 500}});
  return a;
}

}  // namespace

TEST(OracleBackend, EqualsRasterize) {
  const auto a = sample_annotation();
  const auto b = oracle_backend(a);
  EXPECT_EQ(b->bounds(), a.bounds());
  EXPECT_EQ(b->info().name, "oracle");
  for (const PixelRect r : {PixelRect{0, 0, 1000, 800}, PixelRect{77, 33, 448, 448}, PixelRect{900, 700, 100, 100}})
    EXPECT_EQ(b->segment(r), rasterize(a, r));
}

TEST(OracleBackend, EmptyRegionAndDiskCount) {
  const auto a = sample_annotation();
  const auto b = oracle_backend(a);
  const auto empty = b->segment({0, 700, 300, 100});
  EXPECT_EQ(empty.eos.count() + empty.bz.count(), 0);
  // Centers 120 px apart never touch, so one component per disk.
  EXPECT_EQ(connected_components(b->segment(a.bounds()).eos).count(), a.eos_centers.size());
}

TEST(OracleBackend, OverlappingDisksMerge) {
  SlideAnnotation a;
  a.slide_id = "overlap";
  a.width = a.height = 300;
  a.eos_centers = {{100, 100}, {140, 100}, {200, 200}, {251, 200}};
  const auto areas = component_areas(oracle_backend(a)->segment(a.bounds()).eos);
  // Distance 40 overlaps; distance 51 leaves the rims 8-adjacent at (225,200)/(226,200).
  EXPECT_EQ(areas.size(), 2u);
}

TEST(DegradedBackend, ZeroAndOneRates) {
  const auto base = oracle_backend(sample_annotation());
  const PixelRect r{100, 100, 300, 200};
  EXPECT_EQ(degraded_backend(base, 0.0, 1)->segment(r), base->segment(r));
  const auto all = degraded_backend(base, 1.0, 1)->segment(r);
  const auto m = base->segment(r);
  EXPECT_EQ(all.eos, m.eos.complement());
  EXPECT_EQ(all.bz, m.bz.complement());
}

TEST(DegradedBackend, FlipFractionConcentrates) {
  SlideAnnotation a;
  a.slide_id = "blank";
  a.width = a.height = 1000;
  const auto d = degraded_backend(oracle_backend(a), 0.1, 42)->segment(a.bounds());
  EXPECT_NEAR(static_cast<double>(d.eos.count()) / 1e6, 0.1, 0.003);
  EXPECT_NEAR(static_cast<double>(d.bz.count()) / 1e6, 0.1, 0.003);
  EXPECT_NE(d.eos, d.bz);
}

TEST(DegradedBackend, DeterministicPerSeedAndRegion) {
  const auto base = oracle_backend(sample_annotation());
  const PixelRect r{0, 0, 200, 200};
  EXPECT_EQ(degraded_backend(base, 0.3, 5)->segment(r), degraded_backend(base, 0.3, 5)->segment(r));
  EXPECT_NE(degraded_backend(base, 0.3, 5)->segment(r), degraded_backend(base, 0.3, 6)->segment(r));
  EXPECT_THROW(degraded_backend(base, 1.5, 0), ParameterError);
  EXPECT_THROW(degraded_backend(base, -0.1, 0), ParameterError);
  EXPECT_THROW(degraded_backend(nullptr, 0.1, 0), ParameterError);
}

TEST(MaskBackend, RoundTripThroughFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "eoe_test_maskbackend";
  std::filesystem::create_directories(dir);
  const auto a = sample_annotation();
  const auto full = rasterize(a, a.bounds());
  save_mask_pair(dir / "slide", full);
  const auto b = mask_backend(dir / "slide");
  EXPECT_EQ(b->bounds(), a.bounds());
  const PixelRect r{150, 120, 500, 400};
  EXPECT_EQ(b->segment(r), rasterize(a, r));
  EXPECT_THROW(b->segment({900, 0, 200, 10}), ParameterError);
  EXPECT_THROW(mask_backend(dir / "nope"), DataError);
  std::filesystem::remove_all(dir);
}

TEST(LuminanceBackend, ThresholdsByLuma) {
  RgbImage img(3, 1);
  img.set(0, 0, 50, 50, 50);     // dark: both
  img.set(1, 0, 120, 120, 120);  // mid: bz only
  img.set(2, 0, 250, 250, 250);  // background
  LuminanceBackend b(img);
  const auto m = b.segment({0, 0, 3, 1});
  EXPECT_TRUE(m.eos.get(0, 0));
  EXPECT_TRUE(m.bz.get(0, 0));
  EXPECT_FALSE(m.eos.get(1, 0));
  EXPECT_TRUE(m.bz.get(1, 0));
  EXPECT_FALSE(m.bz.get(2, 0));
  EXPECT_THROW(b.segment({0, 0, 4, 1}), ParameterError);
}
