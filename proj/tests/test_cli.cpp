#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "eoe/eoe.hpp"

namespace fs = std::filesystem;
using namespace eoe;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("eoe_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) const {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(EOE_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_text_file(out);
    r.err = read_text_file(err);
    return r;
  }

  fs::path path(const std::string& name) const { return dir_ / name; }
  std::string p(const std::string& name) const { return path(name).string(); }

  fs::path dir_;
};

SlideAnnotation small_slide() {
  SlideAnnotation a;
  a.slide_id = "small";
  a.width = 400;
  a.height = 300;
  a.eos_centers = {{100, 100}, {200, 150}, {330, 60}};
  a.bz_polygons.push_back({{10, 10}, {150, 10}, {150, 200}, {10, 200}});
  return a;
}

const char* kSmallScan = "--kernel 200 --stride 50 --subpatch 64 --subpatch-overlap 8";

}  // namespace

TEST_F(Cli, RasterizeEmptyAnnotation) {
  SlideAnnotation a;
  a.slide_id = "empty";
  a.width = 37;
  a.height = 23;
  save_annotation(path("a.json"), a);
  const auto r = run("rasterize --annotation " + p("a.json") + " --out " + p("masks"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto eos = read_pgm(path("masks/empty.eos.pgm"));
  EXPECT_EQ(eos.width(), 37);
  EXPECT_EQ(eos.height(), 23);
  EXPECT_EQ(eos.count(), 0);
  EXPECT_EQ(read_pgm(path("masks/empty.bz.pgm")).count(), 0);
}

TEST_F(Cli, RasterizeMatchesLibrary) {
  const auto a = small_slide();
  save_annotation(path("a.json"), a);
  ASSERT_EQ(run("rasterize --annotation " + p("a.json") + " --out " + p("m")).code, 0);
  const auto m = rasterize(a, a.bounds());
  EXPECT_EQ(read_pgm(path("m/small.eos.pgm")), m.eos);
  EXPECT_EQ(read_pgm(path("m/small.bz.pgm")), m.bz);
}

TEST_F(Cli, MalformedAnnotationNamesField) {
  write_text_file(path("bad.json"), R"({"slide_id": "x", "width": 10, "height": 10, "eos_centers": [[1, "a"]], "bz_polygons": []})");
  const auto r = run("rasterize --annotation " + p("bad.json") + " --out " + p("m"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("eos_centers[0]"), std::string::npos) << r.err;
  write_text_file(path("broken.json"), "{\n\"slide_id\": \n");
  const auto b = run("rasterize --annotation " + p("broken.json") + " --out " + p("m"));
  EXPECT_EQ(b.code, 3);
  EXPECT_NE(b.err.find("broken.json:3"), std::string::npos) << b.err;
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("scan --stride 0 --annotation x.json").code, 2);
  EXPECT_EQ(run("report --cohort c.csv --out o --delta 13").code, 2);
  write_text_file(path("cfg.json"), R"({"strid": 5})");
  const auto r = run("scan --config " + p("cfg.json") + " --annotation x.json");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("strid"), std::string::npos);
}

TEST_F(Cli, ScanBlankSlideGivesZeroRow) {
  SlideAnnotation a;
  a.slide_id = "blank";
  a.width = a.height = 2144;
  save_annotation(path("a.json"), a);
  const auto r = run("scan --annotation " + p("a.json") + " --cohort " + p("c.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_text_file(path("c.csv")), cohort_csv_header() + "blank,0,0,0,0,,,,,,\n");
}

TEST_F(Cli, ScanMatchesSynthOracle) {
  SlideSpec s;
  s.slide_id = "synthetic";
  s.width = 3000;
  s.height = 2600;
  s.clusters.push_back({{200, 200, 1500, 1500}, 18});
  s.bz_rects.push_back({100, 1800, 2500, 600});
  s.tissue = PixelRect{0, 0, 3000, 2500};
  s.seed = 9;
  write_text_file(path("spec.json"), to_json(s).dump());
  ASSERT_EQ(run("synth slide --spec " + p("spec.json") + " --out " + p("slide")).code, 0);
  const auto expected = load_json(path("slide/synthetic.expected.json")).at("expected");
  const auto r = run("scan --annotation " + p("slide/synthetic.json") + " --out " + p("scan") + " --threads 2");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto got = load_json(path("scan/biomarkers.json"));
  EXPECT_EQ(got.at("biomarkers"), expected);
  EXPECT_EQ(got.at("biomarkers").at("pec"), 18);
  EXPECT_EQ(got.at("config").at("stride"), 500);
}

TEST_F(Cli, StrideOverrideChangesGrid) {
  SlideAnnotation a;
  a.slide_id = "wide";
  a.width = 5000;
  a.height = 2144;
  save_annotation(path("a.json"), a);
  ASSERT_EQ(run("scan --annotation " + p("a.json") + " --stride 536 --out " + p("o")).code, 0);
  const auto j = load_json(path("o/score_map.json"));
  EXPECT_EQ(j.at("grid").at("n_cols"), 6);  // x0 in {0, 536, ..., 2680}
  EXPECT_EQ(j.at("config").at("stride"), 536);
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  save_annotation(path("a.json"), small_slide());
  write_text_file(path("cfg.json"), R"({"kernel": 200, "stride": 100, "subpatch": 64, "subpatch_overlap": 8})");
  ASSERT_EQ(run("scan --annotation " + p("a.json") + " --config " + p("cfg.json") + " --stride 50 --out " + p("o")).code, 0);
  const auto j = load_json(path("o/score_map.json"));
  EXPECT_EQ(j.at("config").at("kernel"), 200);
  EXPECT_EQ(j.at("config").at("stride"), 50);
  EXPECT_EQ(j.at("grid").at("n_cols"), 5);
}

TEST_F(Cli, ScanIsDeterministicAcrossThreads) {
  save_annotation(path("a.json"), small_slide());
  const std::string base = "scan --annotation " + p("a.json") + " " + kSmallScan + " --eos-noise-area 100 --bz-noise-area 100";
  ASSERT_EQ(run(base + " --threads 1 --out " + p("o1")).code, 0);
  ASSERT_EQ(run(base + " --threads 3 --out " + p("o3")).code, 0);
  for (const char* f : {"score_map.csv", "score_map.json", "eos_heat.csv", "bz_heat.csv", "biomarkers.json"})
    EXPECT_EQ(read_text_file(path("o1") / f), read_text_file(path("o3") / f)) << f;
}

TEST_F(Cli, ScanMasksAndDegraded) {
  const auto a = small_slide();
  save_annotation(path("a.json"), a);
  ASSERT_EQ(run("rasterize --annotation " + p("a.json") + " --out " + p("m")).code, 0);
  const std::string opts = std::string(" ") + kSmallScan + " --eos-noise-area 100 --bz-noise-area 100";
  ASSERT_EQ(run("scan --annotation " + p("a.json") + opts + " --out " + p("oa")).code, 0);
  ASSERT_EQ(run("scan --masks " + p("m/small") + opts + " --out " + p("om")).code, 0);
  EXPECT_EQ(read_text_file(path("oa/score_map.csv")), read_text_file(path("om/score_map.csv")));
  EXPECT_EQ(run("scan --masks " + p("m/nothing") + opts).code, 3);
  EXPECT_EQ(run("scan --annotation " + p("a.json") + " --masks " + p("m/small")).code, 2);
  ASSERT_EQ(run("scan --annotation " + p("a.json") + opts + " --degrade 0.2 --out " + p("od")).code, 0);
  EXPECT_NE(read_text_file(path("oa/score_map.csv")), read_text_file(path("od/score_map.csv")));
}

TEST_F(Cli, EvalSeg) {
  const auto a = small_slide();
  save_annotation(path("a.json"), a);
  ASSERT_EQ(run("rasterize --annotation " + p("a.json") + " --out " + p("gt")).code, 0);
  ASSERT_EQ(run("rasterize --annotation " + p("a.json") + " --out " + p("pred")).code, 0);
  auto r = run("eval-seg --gt " + p("gt") + " --pred " + p("pred") + " --out " + p("o"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("overall,1,1,1,1,1"), std::string::npos) << r.out;

  const auto gt = rasterize(a, a.bounds());
  const auto deg = degraded_backend(oracle_backend(a), 0.05, 3)->segment(a.bounds());
  save_mask_pair(path("pred/small"), deg);
  r = run("eval-seg --gt " + p("gt") + " --pred " + p("pred") + " --out " + p("o"));
  ASSERT_EQ(r.code, 0);
  const auto j = load_json(path("o/seg_metrics.json"));
  EXPECT_LT(j.at("overall").at("miou").get<double>(), 1.0);
  EXPECT_EQ(j.at("eos_intact").at("miou").get<double>(), evaluate({{gt, deg}}).eos.miou);

  save_mask_pair(path("gt/other"), gt);
  r = run("eval-seg --gt " + p("gt") + " --pred " + p("pred"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("other"), std::string::npos) << r.err;
}

TEST_F(Cli, TrainClassifyReportDeterministic) {
  ASSERT_EQ(run("synth cohort --records 120 --seed 4 --out " + p("c.csv")).code, 0);
  const std::string train = "train --cohort " + p("c.csv") + " --kind lda --seed 2 --out ";
  ASSERT_EQ(run(train + p("m1.json")).code, 0);
  ASSERT_EQ(run(train + p("m2.json")).code, 0);
  EXPECT_EQ(read_text_file(path("m1.json")), read_text_file(path("m2.json")));
  ASSERT_EQ(run("classify --cohort " + p("c.csv") + " --model " + p("m1.json") + " --out " + p("pred.csv")).code, 0);
  EXPECT_EQ(read_text_file(path("pred.csv")).substr(0, 32), "slide_id,score,predicted,severe\n");

  const std::string report = "report --cohort " + p("c.csv") + " --kind svm --seeds 4 --out ";
  ASSERT_EQ(run(report + p("r1")).code, 0);
  ASSERT_EQ(run(report + p("r2") + " --threads 2").code, 0);
  for (const char* f : {"eval_report.json", "per_seed.csv", "distributions.json", "roc_pbz.csv"})
    EXPECT_EQ(read_text_file(path("r1") / f), read_text_file(path("r2") / f)) << f;
  const auto j = load_json(path("r1/eval_report.json"));
  EXPECT_GE(j.at("summary").at("accuracy").at("median").get<double>(), 0.95);
  const auto d = load_json(path("r1/distributions.json"));
  EXPECT_TRUE(d.at("ks_active_vs_non_active").at("pbz").contains("p_value"));
  EXPECT_TRUE(d.at("ks_active_vs_non_active").at("sbz").contains("d"));

  ASSERT_EQ(run("sweep-baseline --cohort " + p("c.csv") + " --out " + p("b")).code, 0);
  EXPECT_TRUE(fs::exists(path("b/roc_pec.csv")));
}

TEST_F(Cli, TrainingSchemaAndDegenerateErrors) {
  write_text_file(path("nolabel.csv"), "slide_id,pec,sec,pbz,sbz\na,1,0,0,0\nb,20,0.5,0.5,0.5\n");
  auto r = run("train --cohort " + p("nolabel.csv") + " --kind lda");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("'severe'"), std::string::npos) << r.err;
  write_text_file(path("one.csv"), "slide_id,pec,sec,pbz,sbz,severe\na,1,0,0,0,1\nb,20,0.5,0.5,0.5,1\nc,3,0,0,0,1\n");
  r = run("train --cohort " + p("one.csv") + " --kind lda");
  EXPECT_EQ(r.code, 4);
  r = run("train --cohort " + p("one.csv") + " --kind mlp --hidden 30");
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, WindowedModelSpecFile) {
  ASSERT_EQ(run("synth cohort --rule switch --records 200 --seed 1 --out " + p("c.csv")).code, 0);
  write_text_file(path("spec.json"), R"({"delta": 9, "inside": {"kind": "lda"}, "outside": {"kind": "lda"}})");
  ASSERT_EQ(run("train --cohort " + p("c.csv") + " --model-spec " + p("spec.json") + " --out " + p("m.json")).code, 0);
  EXPECT_EQ(load_json(path("m.json")).at("model").at("kind"), "windowed");
  ASSERT_EQ(run("classify --cohort " + p("c.csv") + " --model " + p("m.json")).code, 0);
}
