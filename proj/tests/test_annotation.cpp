#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "eoe/annotation.hpp"
#include "eoe/io.hpp"
#include "eoe/rng.hpp"

using namespace eoe;

namespace {

// Point-in-polygon oracle: on an edge, or an odd number of ray crossings to the right.
bool on_edge(const Point& a, const Point& b, std::int64_t x, std::int64_t y) {
  const std::int64_t cr = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
  return cr == 0 && x >= std::min(a.x, b.x) && x <= std::max(a.x, b.x) && y >= std::min(a.y, b.y) &&
         y <= std::max(a.y, b.y);
}

bool inside(const Polygon& poly, std::int64_t x, std::int64_t y) {
  bool in = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if (on_edge(a, b, x, y)) return true;
    if ((a.y > y) != (b.y > y)) {
      // x < a.x + (y - a.y)(b.x - a.x)/(b.y - a.y), compared exactly
      const std::int64_t lhs = (x - a.x) * (b.y - a.y);
      const std::int64_t rhs = (y - a.y) * (b.x - a.x);
      if (b.y > a.y ? lhs < rhs : lhs > rhs) in = !in;
    }
  }
  return in;
}

Polygon random_star(Rng& rng, std::int64_t cx, std::int64_t cy, std::int64_t rmax) {
  const int n = static_cast<int>(rng.integer(3, 12));
  std::vector<double> angles;
  for (int i = 0; i < n; ++i) angles.push_back(rng.uniform(0.0, 6.283185307179586));
  std::sort(angles.begin(), angles.end());
  Polygon p;
  for (double a : angles) {
    const double r = rng.uniform(3.0, static_cast<double>(rmax));
    p.push_back({cx + std::llround(r * std::cos(a)), cy + std::llround(r * std::sin(a))});
  }
  return p;
}

SlideAnnotation blank(std::int64_t w, std::int64_t h) {
  SlideAnnotation a;
  a.slide_id = "s";
  a.width = w;
  a.height = h;
  return a;
}

}  // namespace

TEST(Rasterize, SingleDiskMatchesDistanceCount) {
  auto a = blank(200, 200);
  a.eos_centers.push_back({100, 100});
  const auto m = rasterize(a, {0, 0, 200, 200});
  std::int64_t expected = 0;
  for (std::int64_t y = 0; y < 200; ++y)
    for (std::int64_t x = 0; x < 200; ++x) {
      const bool in = (x - 100) * (x - 100) + (y - 100) * (y - 100) <= 625;
      expected += in;
      ASSERT_EQ(m.eos.get(x, y), in);
    }
  EXPECT_EQ(expected, 1961);
  EXPECT_EQ(m.eos.count(), 1961);
  EXPECT_EQ(m.bz.count(), 0);
}

TEST(Rasterize, EmptyAnnotationIsBlank) {
  const auto m = rasterize(blank(64, 48), {0, 0, 64, 48});
  EXPECT_EQ(m.eos.count(), 0);
  EXPECT_EQ(m.bz.count(), 0);
  EXPECT_EQ(m.eos.width(), 64);
  EXPECT_EQ(m.eos.height(), 48);
}

TEST(Rasterize, SquarePolygonCount) {
  auto a = blank(100, 100);
  a.bz_polygons.push_back({{10, 10}, {59, 10}, {59, 59}, {10, 59}});
  const auto m = rasterize(a, a.bounds());
  EXPECT_EQ(m.bz.count(), 2500);
  std::int64_t oracle = 0;
  for (std::int64_t y = 0; y < 100; ++y)
    for (std::int64_t x = 0; x < 100; ++x) oracle += inside(a.bz_polygons[0], x, y);
  EXPECT_EQ(oracle, 2500);
}

TEST(Rasterize, RandomPolygonsMatchPointInPolygon) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Polygon p = random_star(rng, 40, 40, 38);
    Bitmap bm(80, 80);
    fill_polygon(bm, {0, 0, 80, 80}, p);
    for (std::int64_t y = 0; y < 80; ++y)
      for (std::int64_t x = 0; x < 80; ++x) ASSERT_EQ(bm.get(x, y), inside(p, x, y)) << trial << " " << x << "," << y;
  }
}

TEST(Rasterize, SubRegionEqualsCropOfFull) {
  Rng rng(11);
  auto a = blank(300, 250);
  for (int i = 0; i < 12; ++i) a.eos_centers.push_back({rng.integer(0, 299), rng.integer(0, 249)});
  for (int i = 0; i < 4; ++i) a.bz_polygons.push_back(random_star(rng, rng.integer(60, 240), rng.integer(60, 190), 55));
  const auto full = rasterize(a, a.bounds());
  for (int t = 0; t < 30; ++t) {
    const std::int64_t w = rng.integer(1, 200), h = rng.integer(1, 200);
    const PixelRect r{rng.integer(0, 300 - w), rng.integer(0, 250 - h), w, h};
    const auto part = rasterize(a, r);
    EXPECT_EQ(part.eos, full.eos.crop(r));
    EXPECT_EQ(part.bz, full.bz.crop(r));
  }
}

TEST(Rasterize, DiskClippedAtSlideEdge) {
  auto a = blank(50, 50);
  a.eos_centers.push_back({0, 0});
  const auto m = rasterize(a, a.bounds());
  std::int64_t expected = 0;
  for (std::int64_t y = 0; y <= 25; ++y)
    for (std::int64_t x = 0; x <= 25; ++x) expected += x * x + y * y <= 625;
  EXPECT_EQ(m.eos.count(), expected);
}

TEST(Rasterize, RegionOutOfBoundsThrows) {
  EXPECT_THROW(rasterize(blank(100, 100), {50, 50, 100, 10}), ParameterError);
  EXPECT_THROW(rasterize(blank(100, 100), {0, 0, 0, 10}), ParameterError);
}

TEST(Validate, RejectsBadAnnotations) {
  auto a = blank(100, 100);
  a.eos_centers.push_back({100, 5});
  EXPECT_THROW(validate(a), DataError);
  a = blank(100, 100);
  a.bz_polygons.push_back({{0, 0}, {10, 10}, {10, 0}, {0, 10}});  // bow tie
  try {
    validate(a);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("bz_polygons[0]"), std::string::npos);
  }
  a = blank(100, 100);
  a.tissue_polygons.push_back({{0, 0}, {10, 10}});
  EXPECT_THROW(validate(a), DataError);
  EXPECT_THROW(validate(blank(0, 10)), DataError);
  a = blank(100, 100);
  a.bz_polygons.push_back({{0, 0}, {99, 0}, {99, 99}});
  EXPECT_NO_THROW(validate(a));
}

TEST(Tissue, FractionOfSimpleMasks) {
  TissueMask full{{0, 0, 100, 100}, Bitmap(100, 100, true)};
  TissueMask none{{0, 0, 100, 100}, Bitmap(100, 100, false)};
  EXPECT_EQ(tissue_fraction(full, {0, 0, 100, 100}), 1.0);
  EXPECT_EQ(tissue_fraction(none, {0, 0, 100, 100}), 0.0);
  TissueMask half{{0, 0, 100, 100}, Bitmap(100, 100)};
  for (std::int64_t y = 0; y < 50; ++y) half.bitmap.fill_span(y, 0, 100);
  EXPECT_EQ(tissue_fraction(half, {0, 0, 100, 100}), 0.5);
  EXPECT_EQ(tissue_fraction(half, {10, 0, 20, 50}), 1.0);
  EXPECT_THROW(tissue_fraction(half, {90, 0, 20, 10}), ParameterError);
}

TEST(Tissue, FromRgbThreshold) {
  RgbImage white(8, 8), black(8, 8), checker(8, 8);
  for (std::int64_t y = 0; y < 8; ++y)
    for (std::int64_t x = 0; x < 8; ++x) {
      white.set(x, y, 255, 255, 255);
      black.set(x, y, 0, 0, 0);
      const std::uint8_t v = (x + y) % 2 ? 255 : 128;
      checker.set(x, y, v, v, v);
    }
  EXPECT_EQ(tissue_from_rgb(white).bitmap.count(), 0);
  EXPECT_EQ(tissue_from_rgb(black).bitmap.count(), 64);
  const auto t = tissue_from_rgb(checker);
  EXPECT_EQ(tissue_fraction(t, {0, 0, 8, 8}), 0.5);
  // Gray 229 is exactly at the cutoff and so not tissue; 228 is.
  RgbImage edge(2, 1);
  edge.set(0, 0, 229, 229, 229);
  edge.set(1, 0, 228, 228, 228);
  const auto e = tissue_from_rgb(edge);
  EXPECT_FALSE(e.bitmap.get(0, 0));
  EXPECT_TRUE(e.bitmap.get(1, 0));
}

TEST(Tissue, FromPolygons) {
  auto a = blank(100, 100);
  a.tissue_polygons.push_back({{0, 0}, {49, 0}, {49, 99}, {0, 99}});
  const auto t = tissue_from_polygons(a, a.bounds());
  EXPECT_EQ(tissue_fraction(t, a.bounds()), 0.5);
}

TEST(AnnotationJson, RoundTrip) {
  auto a = blank(500, 400);
  a.slide_id = "slide-7";
  a.eos_centers = {{10, 20}, {300, 200}};
  a.bz_polygons.push_back({{1, 1}, {100, 1}, {50, 80}});
  a.tissue_polygons.push_back({{0, 0}, {499, 0}, {499, 399}, {0, 399}});
  const auto b = annotation_from_json(annotation_to_json(a));
  EXPECT_EQ(b.slide_id, a.slide_id);
  EXPECT_EQ(b.width, 500);
  EXPECT_EQ(b.eos_centers, a.eos_centers);
  EXPECT_EQ(b.bz_polygons, a.bz_polygons);
  EXPECT_EQ(b.tissue_polygons, a.tissue_polygons);
}

TEST(AnnotationJson, ErrorsNameTheField) {
  const auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      annotation_from_json(parse_json_text(text, "in.json"), "in.json");
      FAIL() << "no error for " << text;
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_error(R"({"width": 10, "height": 10, "eos_centers": [], "bz_polygons": []})", "slide_id");
  expect_error(R"({"slide_id": "a", "width": "10", "height": 10, "eos_centers": [], "bz_polygons": []})", "width");
  expect_error(R"({"slide_id": "a", "width": 10, "height": 10, "eos_centers": [[1]], "bz_polygons": []})",
               "eos_centers[0]");
  expect_error(R"({"slide_id": "a", "width": 10, "height": 10, "eos_centers": []})", "bz_polygons");
  try {
    parse_json_text("{\n\"a\": 1,\n oops}", "bad.json");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json:3:"), std::string::npos) << e.what();
  }
}

TEST(Pnm, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "eoe_test_pnm";
  std::filesystem::create_directories(dir);
  Rng rng(3);
  Bitmap bm(37, 21);
  for (std::int64_t y = 0; y < 21; ++y)
    for (std::int64_t x = 0; x < 37; ++x) bm.set(x, y, rng.uniform() < 0.4);
  write_pgm(dir / "m.pgm", bm);
  EXPECT_EQ(read_pgm(dir / "m.pgm"), bm);
  RgbImage img(5, 4);
  img.set(2, 3, 1, 2, 3);
  write_ppm(dir / "i.ppm", img);
  const auto back = read_ppm(dir / "i.ppm");
  EXPECT_EQ(back.rgb, img.rgb);
  write_text_file(dir / "bad.pgm", "P2\n1 1\n255\n0\n");
  EXPECT_THROW(read_pgm(dir / "bad.pgm"), DataError);
  EXPECT_THROW(read_pgm(dir / "missing.pgm"), DataError);
  std::filesystem::remove_all(dir);
}
