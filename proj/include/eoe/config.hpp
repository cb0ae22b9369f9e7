#pragma once

// Run configuration shared by the command-line tools. Every field has the
// pipeline default and can be overridden from a JSON object.

#include <cstdint>
#include <string>

#include "eoe/biomarkers.hpp"
#include "eoe/classify/evaluation.hpp"
#include "eoe/io.hpp"
#include "eoe/scan.hpp"

namespace eoe {

struct RunConfig {
  std::int64_t kernel = kHpfSize;
  std::int64_t stride = kHpfStride;
  std::int64_t subpatch = kSubPatchSize;
  std::int64_t subpatch_overlap = kSubPatchOverlap;
  std::int64_t eos_noise_area = kEosMinArea;
  std::int64_t bz_noise_area = kBzMinArea;
  std::int64_t eos_threshold = kEosActiveThreshold;
  double bz_threshold = kBzThreshold;
  double tissue_threshold = kTissueThreshold;
  std::int64_t eos_radius = kEosRadius;
  bool filter_per_subpatch = false;
  int delta = 9;
  int n_seeds = 20;
  std::uint64_t first_seed = 0;
  double train_fraction = 0.8;
  unsigned threads = 1;

  ScanConfig scan_config() const {
    ScanConfig c;
    c.kernel = kernel;
    c.stride = stride;
    c.subpatch = subpatch;
    c.subpatch_overlap = subpatch_overlap;
    c.noise.eos_min_area = eos_noise_area;
    c.noise.bz_min_area = bz_noise_area;
    c.tissue_threshold = tissue_threshold;
    c.placement = filter_per_subpatch ? FilterPlacement::kPerSubPatch : FilterPlacement::kAssembledHpf;
    c.threads = threads;
    return c;
  }

  BiomarkerOptions biomarker_options() const {
    BiomarkerOptions o;
    o.eos_threshold = eos_threshold;
    o.bz_threshold = bz_threshold;
    return o;
  }

  ProtocolOptions protocol_options() const {
    ProtocolOptions o;
    o.n_seeds = n_seeds;
    o.first_seed = first_seed;
    o.split = train_fraction;
    o.threads = threads;
    return o;
  }

  void validate() const {
    if (kernel <= 0 || stride <= 0) throw ParameterError("config: kernel and stride must be positive");
    if (subpatch <= 0 || subpatch_overlap < 0 || subpatch_overlap >= subpatch)
      throw ParameterError("config: need 0 <= subpatch_overlap < subpatch");
    if (eos_noise_area < 0 || bz_noise_area < 0) throw ParameterError("config: noise areas must be non-negative");
    if (eos_radius < 0) throw ParameterError("config: eos_radius must be non-negative");
    if (!(tissue_threshold >= 0.0 && tissue_threshold <= 1.0))
      throw ParameterError("config: tissue_threshold must be in [0, 1]");
    if (!(bz_threshold >= 0.0 && bz_threshold <= 1.0)) throw ParameterError("config: bz_threshold must be in [0, 1]");
    validate_delta(delta);
    if (n_seeds < 1) throw ParameterError("config: seeds must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      throw ParameterError("config: train_fraction must be in (0, 1)");
  }
};

inline json to_json(const RunConfig& c) {
  return {{"kernel", c.kernel},
          {"stride", c.stride},
          {"subpatch", c.subpatch},
          {"subpatch_overlap", c.subpatch_overlap},
          {"eos_noise_area", c.eos_noise_area},
          {"bz_noise_area", c.bz_noise_area},
          {"eos_threshold", c.eos_threshold},
          {"bz_threshold", c.bz_threshold},
          {"tissue_threshold", c.tissue_threshold},
          {"eos_radius", c.eos_radius},
          {"filter_per_subpatch", c.filter_per_subpatch},
          {"delta", c.delta},
          {"seeds", c.n_seeds},
          {"first_seed", c.first_seed},
          {"train_fraction", c.train_fraction},
          {"threads", c.threads}};
}

/// Applies the keys present in `j` on top of `base`. Unknown keys are rejected.
inline RunConfig merge_config(RunConfig base, const json& j, const std::string& source = "config") {
  if (!j.is_object()) throw ParameterError(source + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "kernel") base.kernel = value.get<std::int64_t>();
      else if (key == "stride") base.stride = value.get<std::int64_t>();
      else if (key == "subpatch") base.subpatch = value.get<std::int64_t>();
      else if (key == "subpatch_overlap") base.subpatch_overlap = value.get<std::int64_t>();
      else if (key == "eos_noise_area") base.eos_noise_area = value.get<std::int64_t>();
      else if (key == "bz_noise_area") base.bz_noise_area = value.get<std::int64_t>();
      else if (key == "eos_threshold") base.eos_threshold = value.get<std::int64_t>();
      else if (key == "bz_threshold") base.bz_threshold = value.get<double>();
      else if (key == "tissue_threshold") base.tissue_threshold = value.get<double>();
      else if (key == "eos_radius") base.eos_radius = value.get<std::int64_t>();
      else if (key == "filter_per_subpatch") base.filter_per_subpatch = value.get<bool>();
      else if (key == "delta") base.delta = value.get<int>();
      else if (key == "seeds") base.n_seeds = value.get<int>();
      else if (key == "first_seed") base.first_seed = value.get<std::uint64_t>();
      else if (key == "train_fraction") base.train_fraction = value.get<double>();
      else if (key == "threads") base.threads = value.get<unsigned>();
      else throw ParameterError(source + ": unknown key '" + key + "'");
    } catch (const json::exception& e) {
      throw ParameterError(source + ": bad value for '" + key + "': " + e.what());
    }
  }
  return base;
}

}  // namespace eoe
