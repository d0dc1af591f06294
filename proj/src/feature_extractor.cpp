#include "sparse4d/feature_extractor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sparse4d/augment.hpp"
#include "sparse4d/error.hpp"

namespace sparse4d {

void ExtractorConfig::validate() const {
  if (grid < 2) throw InvalidArgument("extractor grid must be at least 2");
  if (orientation_bins < 2) throw InvalidArgument("extractor needs at least 2 orientation bins");
  if (pad_to < raw_length()) throw InvalidArgument("pad_to is smaller than the raw descriptor");
}

Eigen::VectorXd block_descriptors(const RasterImage& input, const ExtractorConfig& cfg) {
  cfg.validate();
  if (input.channels != 1 && input.channels != 3)
    throw InvalidArgument("extractor expects 1 or 3 channels");
  if (input.width < cfg.grid || input.height < cfg.grid)
    throw ImageTooSmall("image is smaller than the block grid");
  const RasterImage img = input.channels == 3 ? luminance(input, kStandardWeights) : input;
  const int w = img.width, h = img.height;
  const int bw = w / cfg.grid, bh = h / cfg.grid;
  const int bins = cfg.orientation_bins;
  const int stride = bins + 1;

  Eigen::VectorXd out = Eigen::VectorXd::Zero(cfg.raw_length());
  for (int by = 0; by < cfg.grid; ++by) {
    for (int bx = 0; bx < cfg.grid; ++bx) {
      const Eigen::Index base = (by * cfg.grid + bx) * stride;
      double sum = 0.0, mass = 0.0;
      for (int y = by * bh; y < (by + 1) * bh; ++y) {
        for (int x = bx * bw; x < (bx + 1) * bw; ++x) {
          sum += img.at(x, y);
          // Central differences with edge replication.
          const double gx = 0.5 * (img.at(std::min(x + 1, w - 1), y) - img.at(std::max(x - 1, 0), y));
          const double gy = 0.5 * (img.at(x, std::min(y + 1, h - 1)) - img.at(x, std::max(y - 1, 0)));
          const double mag = std::hypot(gx, gy);
          if (mag == 0.0) continue;
          double theta = std::atan2(gy, gx);
          if (theta < 0.0) theta += std::numbers::pi;
          if (theta >= std::numbers::pi) theta -= std::numbers::pi;
          int b = static_cast<int>(theta / std::numbers::pi * bins);
          b = std::clamp(b, 0, bins - 1);
          out(base + 1 + b) += mag;
          mass += mag;
        }
      }
      out(base) = sum / static_cast<double>(bw * bh);
      if (mass > 0.0) out.segment(base + 1, bins) /= mass;
    }
  }
  return out;
}

Eigen::VectorXd extract(const RasterImage& img, const ExtractorConfig& cfg) {
  const Eigen::VectorXd raw = block_descriptors(img, cfg);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(cfg.pad_to);
  out.head(raw.size()) = raw;
  const double n = out.norm();
  if (n > 0.0) out /= n;
  return out;
}

}  // namespace sparse4d
