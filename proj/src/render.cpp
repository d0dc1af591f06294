#include "sparse4d/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sparse4d/error.hpp"

namespace sparse4d {

std::pair<int, int> Viewport::pixel_of(double x, double y) const {
  const double half = 0.5 * resolution;
  const double px = half + (x - center_x) * scale;
  const double py = half - (y - center_y) * scale;
  const int col = std::clamp(static_cast<int>(std::floor(px)), 0, resolution - 1);
  const int row = std::clamp(static_cast<int>(std::floor(py)), 0, resolution - 1);
  return {col, row};
}

Viewport fit_viewport(const Mesh& mesh, int resolution) {
  if (resolution < 8) throw InvalidArgument("raster resolution must be at least 8");
  if (mesh.vertices.empty()) throw EmptyMesh("cannot render an empty mesh");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& v : mesh.vertices) {
    xmin = std::min(xmin, v.x());
    xmax = std::max(xmax, v.x());
    ymin = std::min(ymin, v.y());
    ymax = std::max(ymax, v.y());
  }
  if (!std::isfinite(xmax - xmin) || !std::isfinite(ymax - ymin))
    throw DegenerateExtent("mesh bounding box is not finite");
  Viewport vp;
  vp.resolution = resolution;
  vp.center_x = 0.5 * (xmin + xmax);
  vp.center_y = 0.5 * (ymin + ymax);
  const double side = std::max(xmax - xmin, ymax - ymin);
  // A zero-extent point set lands on the central pixel.
  vp.scale = side > 0.0 ? resolution * (1.0 - 2.0 * kViewportMargin) / side : 1.0;
  return vp;
}

namespace {

/// Index of the winning vertex per pixel, or -1.
std::vector<int> zbuffer(const Mesh& mesh, const Viewport& vp) {
  const int k = vp.resolution;
  std::vector<int> owner(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), -1);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& v = mesh.vertices[i];
    if (!v.allFinite()) throw DegenerateExtent("non-finite vertex");
    const auto [col, row] = vp.pixel_of(v.x(), v.y());
    auto& slot = owner[static_cast<std::size_t>(row) * static_cast<std::size_t>(k) + static_cast<std::size_t>(col)];
    if (slot < 0 || v.z() > mesh.vertices[static_cast<std::size_t>(slot)].z()) slot = static_cast<int>(i);
  }
  return owner;
}

}  // namespace

RasterImage project_texture(const Mesh& mesh, const Viewport& vp) {
  if (!mesh.colors) throw MissingColors("texture projection needs vertex colors");
  const auto owner = zbuffer(mesh, vp);
  RasterImage img(vp.resolution, vp.resolution, 3);
  for (std::size_t p = 0; p < owner.size(); ++p) {
    if (owner[p] < 0) continue;
    const auto& c = (*mesh.colors)[static_cast<std::size_t>(owner[p])];
    for (int ch = 0; ch < 3; ++ch) img.data[3 * p + static_cast<std::size_t>(ch)] = std::clamp(c[ch], 0.0, 1.0);
  }
  return img;
}

RasterImage project_texture(const Mesh& mesh, int resolution) {
  if (!mesh.colors) throw MissingColors("texture projection needs vertex colors");
  return project_texture(mesh, fit_viewport(mesh, resolution));
}

RasterImage project_depth(const Mesh& mesh, const Viewport& vp) {
  const auto owner = zbuffer(mesh, vp);
  double zmin = std::numeric_limits<double>::infinity(), zmax = -zmin;
  for (const auto& v : mesh.vertices) {
    zmin = std::min(zmin, v.z());
    zmax = std::max(zmax, v.z());
  }
  const double range = zmax - zmin;
  RasterImage img(vp.resolution, vp.resolution, 1);
  for (std::size_t p = 0; p < owner.size(); ++p) {
    if (owner[p] < 0) continue;
    const double z = mesh.vertices[static_cast<std::size_t>(owner[p])].z();
    img.data[p] = range > 0.0 ? (z - zmin) / range : 1.0;
  }
  return img;
}

RasterImage project_depth(const Mesh& mesh, int resolution) {
  return project_depth(mesh, fit_viewport(mesh, resolution));
}

void ClaheConfig::validate() const {
  if (tiles_per_side < 1) throw InvalidArgument("CLAHE needs at least one tile per side");
  if (!(clip_limit > 0.0 && clip_limit <= 1.0)) throw InvalidArgument("CLAHE clip limit must be in (0,1]");
  if (bins < 2) throw InvalidArgument("CLAHE needs at least two bins");
}

RasterImage sharpen_depth(const RasterImage& img, const ClaheConfig& cfg) {
  cfg.validate();
  if (img.channels != 1) throw DimensionMismatch("sharpen_depth expects a single-channel image");
  const int w = img.width, h = img.height;
  const int tx = std::min(cfg.tiles_per_side, w);
  const int ty = std::min(cfg.tiles_per_side, h);
  const int bins = cfg.bins;

  std::vector<int> xb(static_cast<std::size_t>(tx + 1)), yb(static_cast<std::size_t>(ty + 1));
  for (int i = 0; i <= tx; ++i) xb[static_cast<std::size_t>(i)] = i * w / tx;
  for (int i = 0; i <= ty; ++i) yb[static_cast<std::size_t>(i)] = i * h / ty;

  auto bin_of = [bins](double v) {
    const int b = static_cast<int>(std::floor(std::clamp(v, 0.0, 1.0) * bins));
    return std::min(b, bins - 1);
  };

  // Per-tile lookup tables from the clipped, redistributed histogram.
  std::vector<double> lut(static_cast<std::size_t>(tx * ty * bins));
  std::vector<double> hist(static_cast<std::size_t>(bins));
  for (int j = 0; j < ty; ++j) {
    for (int i = 0; i < tx; ++i) {
      std::fill(hist.begin(), hist.end(), 0.0);
      for (int y = yb[static_cast<std::size_t>(j)]; y < yb[static_cast<std::size_t>(j + 1)]; ++y)
        for (int x = xb[static_cast<std::size_t>(i)]; x < xb[static_cast<std::size_t>(i + 1)]; ++x)
          hist[static_cast<std::size_t>(bin_of(img.at(x, y)))] += 1.0;
      const double n = static_cast<double>((xb[static_cast<std::size_t>(i + 1)] - xb[static_cast<std::size_t>(i)]) *
                                           (yb[static_cast<std::size_t>(j + 1)] - yb[static_cast<std::size_t>(j)]));
      const double limit = cfg.clip_limit * n;
      double excess = 0.0;
      for (auto& c : hist) {
        if (c > limit) {
          excess += c - limit;
          c = limit;
        }
      }
      const double share = excess / bins;
      double cum = 0.0;
      double* t = &lut[static_cast<std::size_t>((j * tx + i) * bins)];
      for (int b = 0; b < bins; ++b) {
        cum += hist[static_cast<std::size_t>(b)] + share;
        t[b] = std::min(cum / n, 1.0);
      }
    }
  }

  // Position of a pixel center relative to the tile-center lattice.
  auto locate = [](const std::vector<int>& bounds, int tiles, double pos, int& i0, int& i1, double& wgt) {
    auto center = [&](int i) {
      return 0.5 * (bounds[static_cast<std::size_t>(i)] + bounds[static_cast<std::size_t>(i + 1)]);
    };
    if (pos <= center(0)) {
      i0 = i1 = 0;
      wgt = 0.0;
      return;
    }
    if (pos >= center(tiles - 1)) {
      i0 = i1 = tiles - 1;
      wgt = 0.0;
      return;
    }
    int i = 0;
    while (pos >= center(i + 1)) ++i;
    i0 = i;
    i1 = i + 1;
    wgt = (pos - center(i)) / (center(i + 1) - center(i));
  };

  RasterImage out(w, h, 1);
  std::vector<int> cx0(static_cast<std::size_t>(w)), cx1(static_cast<std::size_t>(w));
  std::vector<double> cwx(static_cast<std::size_t>(w));
  for (int x = 0; x < w; ++x)
    locate(xb, tx, x + 0.5, cx0[static_cast<std::size_t>(x)], cx1[static_cast<std::size_t>(x)],
           cwx[static_cast<std::size_t>(x)]);
  for (int y = 0; y < h; ++y) {
    int j0, j1;
    double wy;
    locate(yb, ty, y + 0.5, j0, j1, wy);
    for (int x = 0; x < w; ++x) {
      const auto ux = static_cast<std::size_t>(x);
      const int b = bin_of(img.at(x, y));
      auto map = [&](int j, int i) { return lut[static_cast<std::size_t>((j * tx + i) * bins + b)]; };
      auto lerp = [](double a, double b, double t) { return a + t * (b - a); };
      const double top = lerp(map(j0, cx0[ux]), map(j0, cx1[ux]), cwx[ux]);
      const double bottom = lerp(map(j1, cx0[ux]), map(j1, cx1[ux]), cwx[ux]);
      out.at(x, y) = std::clamp(lerp(top, bottom, wy), 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace sparse4d
