#pragma once

#include <Eigen/Core>

#include "sparse4d/image.hpp"

namespace sparse4d {

/// Block-wise intensity and gradient-orientation descriptor. Stands in for a
/// pretrained CNN: any image -> fixed-length vector map can replace it.
struct ExtractorConfig {
  int grid = 8;
  int orientation_bins = 7;
  int pad_to = 512;

  int raw_length() const { return grid * grid * (orientation_bins + 1); }
  void validate() const;
};

/// Per-block [mean, orientation histogram] before padding and normalization.
/// Histograms are magnitude-weighted and sum to 1 (or are all zero).
Eigen::VectorXd block_descriptors(const RasterImage& img, const ExtractorConfig& cfg);

/// block_descriptors, zero-padded to pad_to and L2-normalized (unless zero).
Eigen::VectorXd extract(const RasterImage& img, const ExtractorConfig& cfg = {});

}  // namespace sparse4d
