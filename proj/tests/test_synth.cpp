#include <gtest/gtest.h>

#include "eoe/classify/evaluation.hpp"
#include "eoe/io.hpp"
#include "eoe/synth.hpp"

using namespace eoe;

TEST(MakeSlide, TwentyDisksInOneHpf) {
  SlideSpec s;
  s.width = s.height = kHpfSize;
  s.clusters.push_back({{100, 100, 1200, 1200}, 20});
  s.seed = 4;
  const auto slide = make_slide(s);
  EXPECT_EQ(slide.annotation.eos_centers.size(), 20u);
  EXPECT_EQ(slide.expected.pec, 20);
  EXPECT_EQ(slide.expected.sec, 1.0);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = i + 1; j < 20; ++j) {
      const auto& a = slide.annotation.eos_centers[i];
      const auto& b = slide.annotation.eos_centers[j];
      EXPECT_GE((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y), 52 * 52);
    }
}

TEST(MakeSlide, EmptySpec) {
  SlideSpec s;
  s.width = 3000;
  s.height = 2500;
  const auto slide = make_slide(s);
  EXPECT_EQ(slide.expected, (BiomarkerVector{0, 0, 0, 0}));
}

TEST(MakeSlide, BzRectangleFraction) {
  SlideSpec s;
  s.width = s.height = kHpfSize;
  s.bz_rects.push_back({0, 0, kHpfSize, 858});  // 858 / 2144 of the window, about 40%
  s.tissue = PixelRect{0, 0, kHpfSize, kHpfSize};
  const auto slide = make_slide(s);
  EXPECT_EQ(slide.expected.pbz, 858.0 / 2144.0);
  EXPECT_EQ(slide.expected.sbz, 1.0);
}

TEST(MakeSlide, MatchesScanOnSmallGeometry) {
  ScanConfig cfg;
  cfg.kernel = 300;
  cfg.stride = 70;
  cfg.subpatch = 64;
  cfg.subpatch_overlap = 6;
  cfg.noise.bz_min_area = 500;
  cfg.noise.eos_min_area = 1800;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Rng rng(seed);
    SlideSpec s;
    s.seed = seed;
    s.width = rng.integer(300, 900);
    s.height = rng.integer(300, 900);
    s.clusters.push_back({{0, 0, s.width, s.height}, static_cast<int>(rng.integer(0, 20))});
    s.bz_rects.push_back({rng.integer(0, 100), rng.integer(0, 100), rng.integer(10, 150), rng.integer(10, 150)});
    s.tissue = PixelRect{0, 0, s.width - rng.integer(0, 50), s.height};
    const auto slide = make_slide(s, cfg);
    const auto maps = scan(OracleBackend(slide.annotation), slide.tissue_ptr(), s.width, s.height, cfg);
    const auto got = biomarkers(maps);
    EXPECT_EQ(got.scores.pec, slide.expected.pec) << seed;
    EXPECT_NEAR(got.scores.sec, slide.expected.sec, 1e-12);
    EXPECT_NEAR(got.scores.pbz, slide.expected.pbz, 1e-12);
    EXPECT_NEAR(got.scores.sbz, slide.expected.sbz, 1e-12);
  }
}

TEST(MakeSlide, GeneratedAnnotationsValidate) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto spec = random_slide_spec(seed, 3000);
    spec.clusters.clear();  // geometry only; keeps the oracle cheap
    SynthSlide slide;
    ASSERT_NO_THROW(slide = make_slide(spec));
    EXPECT_NO_THROW(annotation_from_json(annotation_to_json(slide.annotation)));
  }
}

TEST(MakeSlide, InfeasiblePlacementThrows) {
  SlideSpec s;
  s.width = s.height = 500;
  s.clusters.push_back({{0, 0, 120, 120}, 50});
  EXPECT_THROW(make_slide(s), DataError);
  s.clusters = {{{0, 0, 40, 40}, 1}};
  EXPECT_THROW(make_slide(s), ParameterError);
  s.clusters.clear();
  s.tissue = PixelRect{0, 0, 100, 100};
  s.bz_rects.push_back({50, 50, 100, 10});
  EXPECT_THROW(make_slide(s), ParameterError);
}

TEST(MakeCohort, DeterministicAndValid) {
  for (auto rule : {LabelRule::kDirect, LabelRule::kDeriveSeverity, LabelRule::kPecWindowSwitch}) {
    CohortSpec s;
    s.rule = rule;
    s.seed = 11;
    s.n_records = 200;
    const auto a = make_cohort(s);
    EXPECT_EQ(cohort_to_csv(a), cohort_to_csv(make_cohort(s)));
    std::size_t severe = 0;
    for (const auto& r : a) {
      EXPECT_GE(r.features.pec, 0);
      for (double f : {r.features.sec, r.features.pbz, r.features.sbz}) {
        EXPECT_GE(f, 0.0);
        EXPECT_LE(f, 1.0);
      }
      severe += *r.severe;
      if (rule == LabelRule::kDeriveSeverity) EXPECT_EQ(*r.severe, derive_severity(r.features.pec, r.hss->hss_total));
    }
    EXPECT_GT(severe, 0u);
    EXPECT_LT(severe, a.size());
  }
  CohortSpec bad;
  bad.n_records = 10;
  EXPECT_THROW(make_cohort(bad), ParameterError);
}

TEST(MakeCohort, SeparableBaselineIsPerfect) {
  CohortSpec s;
  s.severe.mean[0] = 40;
  s.severe.sd[0] = 3;
  s.non_severe.mean[0] = 3;
  s.non_severe.sd[0] = 1;
  s.seed = 2;
  EXPECT_EQ(baseline_sweep(make_cohort(s)).best_accuracy, 1.0);
}
