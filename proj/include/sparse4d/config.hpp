#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sparse4d/augment.hpp"
#include "sparse4d/feature_extractor.hpp"
#include "sparse4d/fusion_eval.hpp"
#include "sparse4d/render.hpp"
#include "sparse4d/sequence_model.hpp"
#include "sparse4d/sparse_codec.hpp"
#include "sparse4d/synthetic_data.hpp"

namespace sparse4d {

struct DataSection {
  std::filesystem::path dataset;  // dataset index; empty means synthesize into <out>/data
  std::filesystem::path out = "out";
  SynthConfig synthetic;
};

struct RenderSection {
  int resolution = kDefaultResolution;
  double profile_angle = kDefaultProfileAngle;
  ClaheConfig clahe;
};

struct AugmentSection {
  std::size_t count = 5;
  std::size_t capacity = 16;
  WeightMode weight_mode = WeightMode::random;
};

struct SparseSection {
  ExtractorConfig extractor;
  int overcompleteness = 4;
  SearchConfig search;
  double expected_sparsity = kDefaultExpectedSparsity;
  double sigma2_scale = kDefaultSigma2Scale;
  int feature_count = kSparseFeatureCount;
};

struct EvalSection {
  int folds = 10;
  std::string ablation = "all";
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  DataSection data;
  RenderSection render;
  AugmentSection augment;
  SparseSection sparse;
  TrainConfig model;
  FusionConfig fusion;
  EvalSection eval;

  void validate() const;
  /// Cross-validation settings; the training seed is derived per model.
  CvConfig cv_config(int jobs) const;
};

/// Strict parse: unknown keys and wrong types raise ConfigError. Missing
/// keys keep their defaults.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical JSON with every field spelled out.
std::string dump_config(const PipelineConfig& cfg);
/// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const PipelineConfig& cfg);

}  // namespace sparse4d
