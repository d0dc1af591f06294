#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sparse4d/geometry.hpp"

namespace sparse4d {

struct SynthConfig {
  int subjects = 10;
  int sequences_per_class = 1;
  int frames = 16;
  int grid = 128;       // vertices per side of the sampling grid
  double noise = 0.004; // std of per-vertex and per-landmark jitter, model units
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr int kSynthLandmarkCount = 12;

/// Expression intensity at 1-based frame t of T: zero at both ends, one at
/// the apex, exactly symmetric in t and T+1-t.
double expression_intensity(int t, int frame_count);

/// Neutral face of a subject before jitter.
Frame neutral_face(const SynthConfig& cfg, int subject);

/// Displacement of the expression field of `e` at a neutral-face point, in
/// unscaled model units.
Point3 expression_displacement(Expression e, const Point3& p);

std::vector<Sequence4D> generate_dataset(const SynthConfig& cfg);

/// Writes `<seq>/frame_NN.obj|.lm`, `<seq>/manifest.tsv` and `dataset.tsv`.
std::vector<DatasetEntry> write_dataset(const std::vector<Sequence4D>& dataset, const std::filesystem::path& out_dir);

}  // namespace sparse4d
