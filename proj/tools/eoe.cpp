// eoe: batch command-line front end for the slide scoring and severity
// classification pipeline. Data goes to files or stdout, diagnostics to stderr.
//
// Exit codes: 0 success, 2 usage/config, 3 data/schema, 4 numeric/training.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eoe/eoe.hpp"

namespace fs = std::filesystem;
using namespace eoe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// Flags that override RunConfig fields. Unset flags leave the config file value.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::int64_t> kernel, stride, subpatch, subpatch_overlap, eos_noise_area, bz_noise_area,
      eos_threshold, eos_radius;
  std::optional<double> bz_threshold, tissue_threshold, train_fraction;
  std::optional<int> delta, seeds;
  std::optional<std::uint64_t> first_seed;
  std::optional<unsigned> threads;
  bool filter_per_subpatch = false;

  void add_scan(CLI::App* app) {
    app->add_option("--kernel", kernel, "HPF window side in pixels (2144)");
    app->add_option("--stride", stride, "window stride in pixels (500)");
    app->add_option("--subpatch", subpatch, "segmentation sub-patch side (448)");
    app->add_option("--subpatch-overlap", subpatch_overlap, "sub-patch overlap (24)");
    app->add_option("--eos-noise-area", eos_noise_area, "minimum eosinophil component area (1800)");
    app->add_option("--bz-noise-area", bz_noise_area, "minimum basal-zone component area (2007)");
    app->add_option("--eos-threshold", eos_threshold, "per-HPF count for SEC (15)");
    app->add_option("--bz-threshold", bz_threshold, "per-HPF fraction for SBZ (0.15)");
    app->add_option("--tissue-threshold", tissue_threshold, "tissue fraction for a tissue HPF (0.15)");
    app->add_option("--eos-radius", eos_radius, "rasterized eosinophil disk radius (25)");
    app->add_flag("--filter-per-subpatch", filter_per_subpatch, "apply the noise filter to every sub-patch");
  }
  void add_protocol(CLI::App* app) {
    app->add_option("--delta", delta, "PEC window half-width for windowed models (9)");
    app->add_option("--seeds", seeds, "number of random splits (20)");
    app->add_option("--first-seed", first_seed, "first split seed (0)");
    app->add_option("--train-fraction", train_fraction, "training fraction per split (0.8)");
  }
  void add_common(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file; flags take precedence");
    app->add_option("--threads", threads, "worker threads, 0 = all cores (1)");
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config_path.empty()) {
      json j;
      try {
        j = load_json(config_path);
      } catch (const DataError& e) {
        throw ParameterError(e.what());
      }
      c = merge_config(c, j, config_path);
    }
    const auto set = [](auto& field, const auto& flag) {
      if (flag) field = *flag;
    };
    set(c.kernel, kernel);
    set(c.stride, stride);
    set(c.subpatch, subpatch);
    set(c.subpatch_overlap, subpatch_overlap);
    set(c.eos_noise_area, eos_noise_area);
    set(c.bz_noise_area, bz_noise_area);
    set(c.eos_threshold, eos_threshold);
    set(c.bz_threshold, bz_threshold);
    set(c.tissue_threshold, tissue_threshold);
    set(c.eos_radius, eos_radius);
    set(c.delta, delta);
    set(c.n_seeds, seeds);
    set(c.first_seed, first_seed);
    set(c.train_fraction, train_fraction);
    set(c.threads, threads);
    if (filter_per_subpatch) c.filter_per_subpatch = true;
    c.validate();
    return c;
  }
};

// The echoed config omits the thread count.
json config_echo(const RunConfig& c) {
  json j = to_json(c);
  j.erase("threads");
  return j;
}

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

// Model specification from --model-spec JSON, else from flags.
struct ModelFlags {
  std::string spec_path;
  std::string kind = "mlp";
  std::vector<int> hidden;
  std::optional<int> epochs;
  bool windowed = false;

  void add(CLI::App* app) {
    app->add_option("--model-spec", spec_path, "model spec JSON (kind, hidden, epochs, ...; delta/inside/outside)");
    app->add_option("--kind", kind, "lda | svm | mlp")->check(CLI::IsMember({"lda", "svm", "mlp"}));
    app->add_option("--hidden", hidden, "MLP hidden layer sizes from {10,20,50,100}")->delimiter(',');
    app->add_option("--epochs", epochs, "training epochs (2000)");
    app->add_flag("--windowed", windowed, "train separate models inside and outside the PEC window");
  }

  ProtocolModel resolve(const RunConfig& cfg) const {
    if (!spec_path.empty()) {
      json j;
      try {
        j = load_json(spec_path);
      } catch (const DataError& e) {
        throw ParameterError(e.what());
      }
      return protocol_model_from_json(j);
    }
    ModelSpec m;
    m.kind = model_kind_from_string(kind);
    if (!hidden.empty()) m.options.mlp_hidden = hidden;
    if (epochs) m.options.epochs = *epochs;
    if (m.kind == ModelKind::kMlp) validate_mlp_hidden(m.options.mlp_hidden);
    if (windowed) return WindowedSpec{cfg.delta, m, m};
    return m;
  }
};

BackendPtr open_backend(const std::string& annotation, const std::string& masks, const std::string& rgb,
                        const RunConfig& cfg, SlideAnnotation* loaded) {
  const int given = !annotation.empty() + !masks.empty() + !rgb.empty();
  if (given != 1) throw ParameterError("scan: give exactly one of --annotation, --masks, --rgb");
  if (!annotation.empty()) {
    *loaded = load_annotation(annotation);
    return oracle_backend(*loaded, cfg.eos_radius);
  }
  if (!masks.empty()) return mask_backend(masks);
  return std::make_shared<LuminanceBackend>(read_ppm(rgb));
}

// ---------------------------------------------------------------------------

int cmd_rasterize(const std::string& annotation_path, const fs::path& out_dir, const RunConfig& cfg) {
  const auto a = load_annotation(annotation_path);
  ensure_dir(out_dir);
  const auto m = rasterize(a, a.bounds(), cfg.eos_radius);
  const fs::path prefix = out_dir / a.slide_id;
  save_mask_pair(prefix, m);
  if (!a.tissue_polygons.empty()) write_pgm(prefix.string() + ".tissue.pgm", tissue_from_polygons(a, a.bounds()).bitmap);
  std::cout << prefix.string() << ".eos.pgm\n" << prefix.string() << ".bz.pgm\n";
  return kExitOk;
}

struct ScanArgs {
  std::string annotation, masks, rgb, tissue_pgm, cohort, slide_id;
  bool tissue_from_raster = false;
  std::optional<double> degrade;
  std::uint64_t degrade_seed = 0;
  std::optional<int> severe;
  fs::path out_dir;
};

int cmd_scan(const ScanArgs& args, const RunConfig& cfg) {
  SlideAnnotation annotation;
  BackendPtr backend = open_backend(args.annotation, args.masks, args.rgb, cfg, &annotation);
  if (args.degrade) backend = degraded_backend(backend, *args.degrade, args.degrade_seed);
  const PixelRect bounds = backend->bounds();

  std::optional<TissueMask> tissue;
  if (!args.tissue_pgm.empty()) {
    Bitmap bm = read_pgm(args.tissue_pgm);
    if (bm.width() != bounds.width || bm.height() != bounds.height)
      throw DataError(args.tissue_pgm + ": tissue mask size differs from the slide");
    tissue = TissueMask{bounds, std::move(bm)};
  } else if (args.tissue_from_raster) {
    if (args.rgb.empty()) throw ParameterError("scan: --tissue-from-rgb needs --rgb");
    tissue = tissue_from_rgb(read_ppm(args.rgb));
  } else if (!annotation.tissue_polygons.empty()) {
    tissue = tissue_from_polygons(annotation, bounds);
  }

  const std::string slide_id = !args.slide_id.empty()      ? args.slide_id
                               : !annotation.slide_id.empty() ? annotation.slide_id
                               : !args.masks.empty()          ? fs::path(args.masks).filename().string()
                                                              : fs::path(args.rgb).stem().string();

  const ScanMaps maps = scan(*backend, tissue ? &*tissue : nullptr, bounds.width, bounds.height, cfg.scan_config());
  BiomarkerResult bio;
  if (!maps.eos.cells.empty()) bio = biomarkers(maps, cfg.biomarker_options());

  json summary{{"slide_id", slide_id},
               {"backend", backend->info().name},
               {"biomarkers", to_json(bio.scores)},
               {"sbz_no_tissue", bio.sbz_no_tissue},
               {"empty_grid", maps.eos.cells.empty()},
               {"config", config_echo(cfg)}};
  if (!args.out_dir.empty()) {
    ensure_dir(args.out_dir);
    write_text_file(args.out_dir / "score_map.csv", score_map_csv(maps));
    json j = score_map_json(maps);
    j["slide_id"] = slide_id;
    j["biomarkers"] = to_json(bio.scores);
    j["config"] = config_echo(cfg);
    write_json(args.out_dir / "score_map.json", j);
    write_text_file(args.out_dir / "eos_heat.csv", heat_matrix_csv(maps.eos));
    write_text_file(args.out_dir / "bz_heat.csv", heat_matrix_csv(maps.bz));
    write_json(args.out_dir / "biomarkers.json", summary);
  }
  if (!args.cohort.empty()) {
    SlideRecord r;
    r.slide_id = slide_id;
    r.features = bio.scores;
    if (args.severe) r.severe = *args.severe != 0;
    const bool exists = fs::exists(args.cohort);
    std::ofstream out(args.cohort, std::ios::binary | std::ios::app);
    if (!out) throw DataError("cannot append to '" + args.cohort + "'");
    if (!exists) out << cohort_csv_header();
    out << cohort_csv_row(r);
  }
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

// Masks are matched by id: <dir>/<id>.eos.pgm and <dir>/<id>.bz.pgm.
std::map<std::string, fs::path> mask_ids(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("'" + dir.string() + "' is not a directory");
  std::map<std::string, fs::path> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    const std::string suffix = ".eos.pgm";
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      const std::string id = name.substr(0, name.size() - suffix.size());
      ids[id] = dir / id;
    }
  }
  return ids;
}

int cmd_eval_seg(const fs::path& gt_dir, const fs::path& pred_dir, const fs::path& out_dir,
                 const std::string& zero_division, const RunConfig& cfg) {
  const auto gt = mask_ids(gt_dir);
  const auto pred = mask_ids(pred_dir);
  std::vector<std::string> unmatched;
  for (const auto& [id, _] : gt)
    if (!pred.count(id)) unmatched.push_back(id + " (no prediction)");
  for (const auto& [id, _] : pred)
    if (!gt.count(id)) unmatched.push_back(id + " (no ground truth)");
  if (!unmatched.empty()) {
    std::string msg = "eval-seg: unmatched mask ids:";
    for (const auto& u : unmatched) msg += " " + u;
    throw DataError(msg);
  }
  if (gt.empty()) throw DataError("eval-seg: no *.eos.pgm masks in '" + gt_dir.string() + "'");
  std::vector<MaskPair> pairs;
  for (const auto& [id, prefix] : gt) {
    MaskPair p{load_mask_pair(prefix), load_mask_pair(pred.at(id))};
    if (!(p.gt.region == p.pred.region)) throw DataError("eval-seg: '" + id + "' ground truth and prediction differ in size");
    pairs.push_back(std::move(p));
  }
  const auto conv = zero_division == "skip" ? ZeroDivision::kSkipUndefined : ZeroDivision::kPerfectOnAbsence;
  const auto report = evaluate(pairs, conv);
  json j = to_json(report);
  j["config"] = config_echo(cfg);
  json ids = json::array();
  for (const auto& [id, _] : gt) ids.push_back(id);
  j["image_ids"] = ids;
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_json(out_dir / "seg_metrics.json", j);
    write_text_file(out_dir / "seg_metrics.csv", to_csv(report));
  }
  std::cout << to_csv(report);
  return kExitOk;
}

struct SynthArgs {
  std::string kind;  // slide | cohort
  fs::path out;
  std::uint64_t seed = 0;
  std::string spec_path;
  std::int64_t max_side = 6000;
  bool skip_oracle = false;
  std::size_t n_records = 500;
  double severe_fraction = 0.5;
  std::string rule = "direct";
  bool no_signal = false;
};

int cmd_synth(const SynthArgs& args, const RunConfig& cfg) {
  if (args.kind == "slide") {
    SlideSpec spec;
    if (!args.spec_path.empty())
      spec = slide_spec_from_json(load_json(args.spec_path), args.spec_path);
    else
      spec = random_slide_spec(args.seed, args.max_side);
    spec.eos_radius = cfg.eos_radius;
    const SynthSlide slide = args.skip_oracle ? build_slide(spec) : make_slide(spec, cfg.scan_config(), cfg.biomarker_options());
    ensure_dir(args.out);
    save_annotation(args.out / (spec.slide_id + ".json"), slide.annotation);
    json meta{{"spec", to_json(spec)}, {"config", config_echo(cfg)}};
    if (!args.skip_oracle) {
      meta["expected"] = to_json(slide.expected);
      meta["sbz_no_tissue"] = slide.sbz_no_tissue;
    }
    write_json(args.out / (spec.slide_id + ".expected.json"), meta);
    std::cout << (args.out / (spec.slide_id + ".json")).string() << "\n";
    return kExitOk;
  }
  CohortSpec spec;
  spec.n_records = args.n_records;
  spec.severe_fraction = args.severe_fraction;
  spec.seed = args.seed;
  spec.switch_delta = cfg.delta;
  if (args.rule == "direct")
    spec.rule = LabelRule::kDirect;
  else if (args.rule == "derive")
    spec.rule = LabelRule::kDeriveSeverity;
  else
    spec.rule = LabelRule::kPecWindowSwitch;
  if (args.no_signal) spec.severe = spec.non_severe;
  const auto cohort = make_cohort(spec);
  if (args.out.empty())
    std::cout << cohort_to_csv(cohort);
  else
    write_text_file(args.out, cohort_to_csv(cohort));
  return kExitOk;
}

int cmd_train(const std::string& cohort_path, const ModelFlags& mf, std::uint64_t seed, const fs::path& out,
              const RunConfig& cfg) {
  const auto records = canonical_order(load_cohort(cohort_path, true));
  const auto spec = mf.resolve(cfg);
  const TrainedModel model = train_model(spec, records, seed);
  json j{{"model", to_json(model)}, {"spec", to_json(spec)}, {"seed", seed}, {"config", config_echo(cfg)},
         {"n_records", records.size()}};
  if (out.empty())
    std::cout << j.dump(2) << "\n";
  else
    write_json(out, j);
  return kExitOk;
}

int cmd_classify(const std::string& cohort_path, const std::string& model_path, const fs::path& out) {
  const auto records = load_cohort(cohort_path, false);
  json j = load_json(model_path);
  TrainedModel model;
  try {
    model = trained_model_from_json(j.contains("model") ? j.at("model") : j);
  } catch (const json::exception& e) {
    throw DataError(model_path + ": " + e.what());
  }
  std::string csv = "slide_id,score,predicted,severe\n";
  std::vector<bool> pred, truth;
  for (const auto& r : records) {
    const bool p = predict(model, r.features);
    csv += r.slide_id + "," + format_double(score(model, r.features)) + "," + (p ? "1" : "0") + "," +
           (r.severe ? (*r.severe ? "1" : "0") : "") + "\n";
    if (r.severe) {
      pred.push_back(p);
      truth.push_back(*r.severe);
    }
  }
  if (out.empty())
    std::cout << csv;
  else
    write_text_file(out, csv);
  if (!truth.empty()) std::cerr << "accuracy " << format_double(classification_metrics(pred, truth).accuracy) << "\n";
  return kExitOk;
}

std::string roc_csv(const RocResult& r) {
  std::string s = "threshold,fpr,tpr\n";
  for (const auto& p : r.points)
    s += (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) + "," + format_double(p.fpr) +
         "," + format_double(p.tpr) + "\n";
  return s;
}

json metrics_summary_json(const EvalReport& r) {
  const auto m = [](const MetricSummary& s) { return json{{"median", s.median}, {"std", s.std}}; };
  return {{"accuracy", m(r.accuracy)},
          {"sensitivity", m(r.sensitivity)},
          {"specificity", m(r.specificity)},
          {"miss_rate", m(r.miss_rate)},
          {"false_alarm_rate", m(r.false_alarm_rate)}};
}

int cmd_report(const std::string& cohort_path, const ModelFlags& mf, const fs::path& out_dir, const RunConfig& cfg) {
  const auto records = load_cohort(cohort_path, true);
  const auto spec = mf.resolve(cfg);
  const EvalReport rep = evaluate_protocol(records, spec, cfg.protocol_options());
  ensure_dir(out_dir);

  json j = to_json(rep);
  j["spec"] = to_json(spec);
  j["config"] = config_echo(cfg);
  j["summary"] = metrics_summary_json(rep);
  write_json(out_dir / "eval_report.json", j);

  std::string per_seed = "seed,accuracy,sensitivity,specificity,miss_rate,false_alarm_rate\n";
  for (std::size_t i = 0; i < rep.per_seed.size(); ++i) {
    const auto& m = rep.per_seed[i];
    per_seed += std::to_string(rep.seeds[i]) + "," + format_double(m.accuracy) + "," + format_double(m.sensitivity) +
                "," + format_double(m.specificity) + "," + format_double(m.miss_rate) + "," +
                format_double(m.false_alarm_rate) + "\n";
  }
  write_text_file(out_dir / "per_seed.csv", per_seed);

  // Per-biomarker ROC against severity, and KS between active and non-active slides.
  std::vector<bool> severe;
  std::array<std::vector<double>, 4> values;
  std::array<std::vector<double>, 4> active, inactive;
  for (const auto& r : records) {
    severe.push_back(*r.severe);
    const auto f = to_features(r.features);
    for (std::size_t k = 0; k < 4; ++k) {
      values[k].push_back(f[k]);
      (r.features.pec >= kEosActiveThreshold ? active : inactive)[k].push_back(f[k]);
    }
  }
  const char* names[] = {"pec", "sec", "pbz", "sbz"};
  const auto n_pos = std::count(severe.begin(), severe.end(), true);
  json rocs = json::object(), ks = json::object();
  for (std::size_t k = 0; k < 4; ++k) {
    if (n_pos > 0 && n_pos < static_cast<std::ptrdiff_t>(severe.size())) {
      const auto r = roc(values[k], severe);
      write_text_file(out_dir / (std::string("roc_") + names[k] + ".csv"), roc_csv(r));
      rocs[names[k]] = r.auc;
    }
    if (k >= 2) {
      json entry{{"n_active", active[k].size()}, {"n_non_active", inactive[k].size()}};
      if (!active[k].empty() && !inactive[k].empty()) {
        const auto t = ks_two_sample(active[k], inactive[k]);
        entry["d"] = t.d;
        entry["p_value"] = t.p_value;
        entry["median_active"] = median(active[k]);
        entry["median_non_active"] = median(inactive[k]);
      }
      ks[names[k]] = entry;
    }
  }
  write_json(out_dir / "distributions.json",
             {{"roc_auc", rocs}, {"ks_active_vs_non_active", ks}, {"config", config_echo(cfg)}});
  std::cout << j["summary"].dump(2) << "\n";
  return kExitOk;
}

int cmd_sweep_baseline(const std::string& cohort_path, const fs::path& out_dir, const RunConfig& cfg) {
  const auto records = load_cohort(cohort_path, true);
  const auto res = baseline_sweep(records);
  ensure_dir(out_dir);
  std::string sweep = "threshold,accuracy\n";
  for (const auto& [t, acc] : res.sweep) sweep += std::to_string(t) + "," + format_double(acc) + "\n";
  write_text_file(out_dir / "baseline_sweep.csv", sweep);
  json j{{"best_threshold", res.best_threshold}, {"best_accuracy", res.best_accuracy}, {"config", config_echo(cfg)}};
  if (res.roc) {
    write_text_file(out_dir / "roc_pec.csv", roc_csv(*res.roc));
    j["auc"] = res.roc->auc;
  }
  write_json(out_dir / "baseline.json", j);
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_grid_mlp(const std::string& cohort_path, std::size_t max_layers, std::optional<int> epochs, bool windowed,
                 const fs::path& out, const RunConfig& cfg) {
  const auto records = load_cohort(cohort_path, true);
  std::string csv = "hidden,median_accuracy,std_accuracy,median_sensitivity,median_specificity\n";
  for (const auto& arch : mlp_architectures(max_layers)) {
    ModelSpec m{ModelKind::kMlp, {}};
    m.options.mlp_hidden = arch;
    if (epochs) m.options.epochs = *epochs;
    const ProtocolModel spec = windowed ? ProtocolModel{WindowedSpec{cfg.delta, m, m}} : ProtocolModel{m};
    const auto rep = evaluate_protocol(records, spec, cfg.protocol_options());
    std::string name;
    for (int h : arch) name += (name.empty() ? "" : "-") + std::to_string(h);
    csv += name + "," + format_double(rep.accuracy.median) + "," + format_double(rep.accuracy.std) + "," +
           format_double(rep.sensitivity.median) + "," + format_double(rep.specificity.median) + "\n";
  }
  if (out.empty())
    std::cout << csv;
  else
    write_text_file(out, csv);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eosinophil and basal-zone slide scoring, biomarkers and severity classification"};
  app.require_subcommand(1);

  ConfigFlags flags;
  std::string annotation_path;
  fs::path out_dir;

  auto* rasterize_cmd = app.add_subcommand("rasterize", "write full-slide .eos.pgm/.bz.pgm masks");
  rasterize_cmd->add_option("--annotation", annotation_path, "annotation JSON")->required();
  rasterize_cmd->add_option("--out", out_dir, "output directory")->required();

  ScanArgs scan_args;
  auto* scan_cmd = app.add_subcommand("scan", "score maps and slide biomarkers");
  scan_cmd->add_option("--annotation", scan_args.annotation, "annotation JSON (oracle segmentation)");
  scan_cmd->add_option("--masks", scan_args.masks, "mask prefix: <prefix>.eos.pgm and <prefix>.bz.pgm");
  scan_cmd->add_option("--rgb", scan_args.rgb, "binary PPM raster (luminance baseline)");
  scan_cmd->add_option("--tissue", scan_args.tissue_pgm, "tissue mask PGM");
  scan_cmd->add_flag("--tissue-from-rgb", scan_args.tissue_from_raster, "threshold the RGB raster for tissue");
  scan_cmd->add_option("--degrade", scan_args.degrade, "flip rate for a degraded segmentation");
  scan_cmd->add_option("--degrade-seed", scan_args.degrade_seed, "seed of the degradation");
  scan_cmd->add_option("--slide-id", scan_args.slide_id, "override the slide id");
  scan_cmd->add_option("--cohort", scan_args.cohort, "append the biomarker row to this cohort CSV");
  scan_cmd->add_option("--severe", scan_args.severe, "severity label for the appended row (0/1)");
  scan_cmd->add_option("--out", scan_args.out_dir, "output directory for score maps");

  std::string gt_dir, pred_dir, zero_division = "perfect";
  auto* eval_cmd = app.add_subcommand("eval-seg", "segmentation metrics over matching mask sets");
  eval_cmd->add_option("--gt", gt_dir, "ground-truth mask directory")->required();
  eval_cmd->add_option("--pred", pred_dir, "predicted mask directory")->required();
  eval_cmd->add_option("--out", out_dir, "output directory");
  eval_cmd->add_option("--zero-division", zero_division, "perfect | skip")->check(CLI::IsMember({"perfect", "skip"}));

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "synthetic slides and cohorts");
  synth_cmd->add_option("kind", synth_args.kind, "slide | cohort")->required()->check(CLI::IsMember({"slide", "cohort"}));
  synth_cmd->add_option("--out", synth_args.out, "slide: output directory; cohort: CSV path (default stdout)");
  synth_cmd->add_option("--seed", synth_args.seed, "generator seed");
  synth_cmd->add_option("--spec", synth_args.spec_path, "slide spec JSON (default: random from --seed)");
  synth_cmd->add_option("--max-side", synth_args.max_side, "largest random slide side");
  synth_cmd->add_flag("--skip-oracle", synth_args.skip_oracle, "do not compute the expected biomarkers");
  synth_cmd->add_option("--records", synth_args.n_records, "cohort size");
  synth_cmd->add_option("--severe-fraction", synth_args.severe_fraction, "fraction of severe records");
  synth_cmd->add_option("--rule", synth_args.rule, "direct | derive | switch")
      ->check(CLI::IsMember({"direct", "derive", "switch"}));
  synth_cmd->add_flag("--no-signal", synth_args.no_signal, "identical class distributions");

  std::string cohort_path, model_path;
  std::uint64_t train_seed = 0;
  ModelFlags model_flags;
  auto* train_cmd = app.add_subcommand("train", "train a classifier on a labeled cohort");
  train_cmd->add_option("--cohort", cohort_path, "cohort CSV")->required();
  train_cmd->add_option("--seed", train_seed, "training seed");
  train_cmd->add_option("--out", out_dir, "model JSON path (default stdout)");
  model_flags.add(train_cmd);

  auto* classify_cmd = app.add_subcommand("classify", "apply a trained model to a cohort");
  classify_cmd->add_option("--cohort", cohort_path, "cohort CSV")->required();
  classify_cmd->add_option("--model", model_path, "model JSON from train")->required();
  classify_cmd->add_option("--out", out_dir, "predictions CSV path (default stdout)");

  auto* report_cmd = app.add_subcommand("report", "repeated-split evaluation, ROC and KS summaries");
  report_cmd->add_option("--cohort", cohort_path, "cohort CSV")->required();
  report_cmd->add_option("--out", out_dir, "output directory")->required();
  model_flags.add(report_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep-baseline", "PEC threshold baseline");
  sweep_cmd->add_option("--cohort", cohort_path, "cohort CSV")->required();
  sweep_cmd->add_option("--out", out_dir, "output directory")->required();

  std::size_t max_layers = 1;
  std::optional<int> grid_epochs;
  bool grid_windowed = false;
  auto* grid_cmd = app.add_subcommand("grid-mlp", "evaluate every MLP architecture up to --max-layers");
  grid_cmd->add_option("--cohort", cohort_path, "cohort CSV")->required();
  grid_cmd->add_option("--max-layers", max_layers, "deepest stack to try (1-4)");
  grid_cmd->add_option("--epochs", grid_epochs, "training epochs");
  grid_cmd->add_flag("--windowed", grid_windowed, "evaluate windowed models");
  grid_cmd->add_option("--out", out_dir, "CSV path (default stdout)");

  for (auto* cmd : {rasterize_cmd, scan_cmd, eval_cmd, synth_cmd, train_cmd, classify_cmd, report_cmd, sweep_cmd, grid_cmd})
    flags.add_common(cmd);
  for (auto* cmd : {rasterize_cmd, scan_cmd, synth_cmd}) flags.add_scan(cmd);
  for (auto* cmd : {synth_cmd, train_cmd, report_cmd, grid_cmd}) flags.add_protocol(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const RunConfig cfg = flags.resolve();
    if (rasterize_cmd->parsed()) return cmd_rasterize(annotation_path, out_dir, cfg);
    if (scan_cmd->parsed()) return cmd_scan(scan_args, cfg);
    if (eval_cmd->parsed()) return cmd_eval_seg(gt_dir, pred_dir, out_dir, zero_division, cfg);
    if (synth_cmd->parsed()) return cmd_synth(synth_args, cfg);
    if (train_cmd->parsed()) return cmd_train(cohort_path, model_flags, train_seed, out_dir, cfg);
    if (classify_cmd->parsed()) return cmd_classify(cohort_path, model_path, out_dir);
    if (report_cmd->parsed()) return cmd_report(cohort_path, model_flags, out_dir, cfg);
    if (sweep_cmd->parsed()) return cmd_sweep_baseline(cohort_path, out_dir, cfg);
    if (grid_cmd->parsed()) return cmd_grid_mlp(cohort_path, max_layers, grid_epochs, grid_windowed, out_dir, cfg);
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ScanError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
