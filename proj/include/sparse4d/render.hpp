#pragma once

#include "sparse4d/geometry.hpp"
#include "sparse4d/image.hpp"

namespace sparse4d {

inline constexpr int kDefaultResolution = 128;
inline constexpr double kViewportMargin = 0.05;

/// Affine map from model xy to pixel coordinates. The mesh bounding square is
/// centered in a K x K raster and fills it minus a 5% margin on each side.
struct Viewport {
  int resolution = kDefaultResolution;
  double center_x = 0.0;
  double center_y = 0.0;
  double scale = 1.0;  // pixels per model unit

  /// Nearest pixel (column, row) for a model-space point; rows run top-down.
  std::pair<int, int> pixel_of(double x, double y) const;
};

Viewport fit_viewport(const Mesh& mesh, int resolution);

struct ClaheConfig {
  int tiles_per_side = 8;
  double clip_limit = 0.01;
  int bins = 256;

  void validate() const;
};

/// Orthographic point-splat render of vertex colors with a z-buffer
/// (larger z is nearer). Uncovered pixels are black.
RasterImage project_texture(const Mesh& mesh, int resolution);
RasterImage project_texture(const Mesh& mesh, const Viewport& vp);

/// Same rasterization; covered pixels hold (z - z_min) / (z_max - z_min), or 1
/// for a flat mesh.
RasterImage project_depth(const Mesh& mesh, int resolution);
RasterImage project_depth(const Mesh& mesh, const Viewport& vp);

/// Contrast-limited adaptive histogram equalization with bilinear blending
/// between tile mappings.
RasterImage sharpen_depth(const RasterImage& img, const ClaheConfig& cfg = {});

}  // namespace sparse4d
