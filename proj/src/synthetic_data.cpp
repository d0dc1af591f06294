#include "sparse4d/synthetic_data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "sparse4d/error.hpp"
#include "sparse4d/random.hpp"

namespace sparse4d {

namespace fs = std::filesystem;

namespace {

constexpr double kHalfWidth = 1.0;
constexpr double kHalfHeight = 1.3;
constexpr double kDepth = 0.8;

double surface_z(double x, double y) {
  const double u = x / kHalfWidth, v = y / kHalfHeight;
  const double s = std::max(0.0, 1.0 - u * u - v * v);
  const double nose = 0.25 * std::exp(-(x * x + (y + 0.1) * (y + 0.1)) / (2.0 * 0.12 * 0.12));
  return kDepth * std::sqrt(s) + nose;
}

double gauss2(double x, double y, double cx, double cy, double r) {
  return std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2.0 * r * r));
}

Point3 face_color(double x, double y) {
  double dark = 0.0;
  for (double sx : {-1.0, 1.0}) {
    dark = std::max(dark, gauss2(x, y, sx * 0.4, 0.45, 0.08));   // brow
    dark = std::max(dark, gauss2(x, y, sx * 0.37, 0.25, 0.07));  // eye
  }
  dark = std::max(dark, gauss2(x, y, 0.0, -0.6, 0.1));
  dark = std::max(dark, gauss2(x, y, 0.15, -0.6, 0.08));
  dark = std::max(dark, gauss2(x, y, -0.15, -0.6, 0.08));
  const Point3 skin(0.86, 0.66, 0.55), feature(0.3, 0.16, 0.16);
  return skin + dark * (feature - skin);
}

constexpr std::array<std::array<double, 2>, kSynthLandmarkCount> kLandmarkXY = {{
    {-0.4, 0.45}, {0.4, 0.45},                                   // brows
    {-0.55, 0.25}, {-0.2, 0.25}, {0.2, 0.25}, {0.55, 0.25},      // eye corners
    {0.0, -0.1}, {0.0, -0.3},                                    // nose tip, base
    {-0.3, -0.6}, {0.3, -0.6},                                   // mouth corners
    {0.0, -0.5}, {0.0, -0.7},                                    // upper and lower lip
}};

struct Bump {
  double cx, cy, radius;
  double dx, dy, dz;
};

// Bumps with cx != 0 are mirrored to the other side with dx negated.
const std::vector<Bump>& field(Expression e) {
  static const std::array<std::vector<Bump>, kExpressionCount> fields = {{
      // angry: brows down and together, lips pressed, corners down
      {{0.35, 0.45, 0.15, -0.05, -0.12, 0.0}, {0.0, -0.5, 0.1, 0.0, -0.05, 0.0},
       {0.0, -0.7, 0.1, 0.0, 0.06, 0.0}, {0.3, -0.6, 0.1, 0.0, -0.06, 0.0}},
      // disgust: nose wrinkle, upper lip raise
      {{0.0, -0.3, 0.12, 0.0, 0.08, 0.05}, {0.0, -0.5, 0.12, 0.0, 0.1, 0.02},
       {0.4, 0.45, 0.15, 0.0, -0.05, 0.0}, {0.3, -0.6, 0.1, -0.03, 0.02, 0.0}},
      // fear: brows up and in, mouth stretched sideways
      {{0.35, 0.45, 0.15, -0.05, 0.1, 0.0}, {0.3, -0.6, 0.12, 0.1, -0.02, 0.0},
       {0.0, -0.7, 0.1, 0.0, -0.06, 0.0}},
      // happy: corners up and out, cheeks up, slight brow lift
      {{0.3, -0.6, 0.12, 0.08, 0.12, 0.02}, {0.45, -0.2, 0.18, 0.0, 0.06, 0.03},
       {0.4, 0.45, 0.15, 0.0, 0.04, 0.0}},
      // sad: inner brows up, corners down
      {{0.15, 0.42, 0.1, 0.0, 0.08, 0.0}, {0.3, -0.6, 0.12, 0.0, -0.12, 0.0},
       {0.0, -0.7, 0.1, 0.0, 0.03, 0.02}},
      // surprise: brows up, jaw drop
      {{0.4, 0.45, 0.2, 0.0, 0.15, 0.0}, {0.0, -0.75, 0.22, 0.0, -0.2, -0.02},
       {0.3, -0.6, 0.1, -0.04, -0.05, 0.0}},
  }};
  return fields[static_cast<std::size_t>(e)];
}

struct SubjectShape {
  Point3 scale;
};

SubjectShape subject_shape(const SynthConfig& cfg, int subject) {
  Rng rng(derive_seed(cfg.seed, {0, static_cast<std::uint64_t>(subject)}));
  SubjectShape s;
  for (int i = 0; i < 3; ++i) s.scale[i] = rng.uniform(0.9, 1.1);
  return s;
}

std::string two_digits(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (subjects < 1) throw ConfigError("synthetic data needs at least one subject");
  if (sequences_per_class < 1) throw ConfigError("synthetic data needs at least one sequence per class");
  if (frames < 3) throw ConfigError("synthetic sequences need at least 3 frames");
  if (grid < 4) throw ConfigError("synthetic mesh grid must be at least 4");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("synthetic noise must be nonnegative");
}

double expression_intensity(int t, int frame_count) {
  const int u = std::min(t - 1, frame_count - t);
  return std::sin(std::numbers::pi * u / (frame_count - 1));
}

Point3 expression_displacement(Expression e, const Point3& p) {
  Point3 d = Point3::Zero();
  for (const auto& b : field(e)) {
    const double w = gauss2(p.x(), p.y(), b.cx, b.cy, b.radius);
    d += w * Point3(b.dx, b.dy, b.dz);
    if (b.cx != 0.0) d += gauss2(p.x(), p.y(), -b.cx, b.cy, b.radius) * Point3(-b.dx, b.dy, b.dz);
  }
  return d;
}

namespace {

/// Unscaled neutral face; grid indices of kept vertices drive the faces.
Frame base_face(int n) {
  Frame f;
  std::vector<int> index(static_cast<std::size_t>(n * n), -1);
  std::vector<Point3> colors;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double u = -1.0 + 2.0 * c / (n - 1), v = 1.0 - 2.0 * r / (n - 1);
      if (u * u + v * v > 1.0) continue;
      const double x = u * kHalfWidth, y = v * kHalfHeight;
      index[static_cast<std::size_t>(r * n + c)] = static_cast<int>(f.mesh.vertices.size());
      f.mesh.vertices.emplace_back(x, y, surface_z(x, y));
      colors.push_back(face_color(x, y));
    }
  }
  f.mesh.colors = std::move(colors);
  for (int r = 0; r + 1 < n; ++r) {
    for (int c = 0; c + 1 < n; ++c) {
      const int a = index[static_cast<std::size_t>(r * n + c)], b = index[static_cast<std::size_t>(r * n + c + 1)];
      const int d = index[static_cast<std::size_t>((r + 1) * n + c)],
                e = index[static_cast<std::size_t>((r + 1) * n + c + 1)];
      if (a < 0 || b < 0 || d < 0 || e < 0) continue;
      f.mesh.faces.push_back({a, d, b});
      f.mesh.faces.push_back({b, d, e});
    }
  }
  for (const auto& xy : kLandmarkXY) f.landmarks.points.emplace_back(xy[0], xy[1], surface_z(xy[0], xy[1]));
  return f;
}

Frame scaled(const Frame& base, const Point3& scale) {
  Frame f = base;
  for (auto& v : f.mesh.vertices) v = v.cwiseProduct(scale);
  for (auto& p : f.landmarks.points) p = p.cwiseProduct(scale);
  return f;
}

}  // namespace

Frame neutral_face(const SynthConfig& cfg, int subject) {
  cfg.validate();
  return scaled(base_face(cfg.grid), subject_shape(cfg, subject).scale);
}

std::vector<Sequence4D> generate_dataset(const SynthConfig& cfg) {
  cfg.validate();
  const Frame base = base_face(cfg.grid);
  std::vector<std::vector<Point3>> vertex_fields, landmark_fields;
  for (int e = 0; e < kExpressionCount; ++e) {
    std::vector<Point3> vf, lf;
    for (const auto& v : base.mesh.vertices) vf.push_back(expression_displacement(static_cast<Expression>(e), v));
    for (const auto& p : base.landmarks.points) lf.push_back(expression_displacement(static_cast<Expression>(e), p));
    vertex_fields.push_back(std::move(vf));
    landmark_fields.push_back(std::move(lf));
  }

  std::vector<Sequence4D> out;
  for (int s = 0; s < cfg.subjects; ++s) {
    const Point3 scale = subject_shape(cfg, s).scale;
    for (int e = 0; e < kExpressionCount; ++e) {
      for (int k = 0; k < cfg.sequences_per_class; ++k) {
        Sequence4D seq;
        seq.subject_id = "s" + two_digits(s);
        seq.label = static_cast<Expression>(e);
        seq.id = seq.subject_id + "_" + expression_name(seq.label) + "_" + std::to_string(k);
        Rng rng(derive_seed(cfg.seed, {1, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(e),
                                       static_cast<std::uint64_t>(k)}));
        const double gain = rng.uniform(0.8, 1.2);
        const auto& vf = vertex_fields[static_cast<std::size_t>(e)];
        const auto& lf = landmark_fields[static_cast<std::size_t>(e)];
        for (int t = 1; t <= cfg.frames; ++t) {
          const double r = gain * expression_intensity(t, cfg.frames);
          Frame f;
          f.mesh.faces = base.mesh.faces;
          f.mesh.colors = base.mesh.colors;
          f.mesh.vertices.reserve(base.mesh.vertices.size());
          for (std::size_t i = 0; i < base.mesh.vertices.size(); ++i) {
            Point3 p = (base.mesh.vertices[i] + r * vf[i]).cwiseProduct(scale);
            if (cfg.noise > 0.0)
              for (int c = 0; c < 3; ++c) p[c] += cfg.noise * rng.normal();
            f.mesh.vertices.push_back(p);
          }
          for (std::size_t i = 0; i < base.landmarks.points.size(); ++i) {
            Point3 p = (base.landmarks.points[i] + r * lf[i]).cwiseProduct(scale);
            if (cfg.noise > 0.0)
              for (int c = 0; c < 3; ++c) p[c] += cfg.noise * rng.normal();
            f.landmarks.points.push_back(p);
          }
          seq.frames.push_back(std::move(f));
        }
        out.push_back(std::move(seq));
      }
    }
  }
  return out;
}

std::vector<DatasetEntry> write_dataset(const std::vector<Sequence4D>& dataset, const fs::path& out_dir) {
  std::vector<DatasetEntry> index;
  for (const auto& seq : dataset) {
    const fs::path dir = out_dir / seq.id;
    std::vector<ManifestEntry> manifest;
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      const std::string stem = "frame_" + two_digits(static_cast<int>(t + 1));
      save_obj(seq.frames[t].mesh, dir / (stem + ".obj"));
      save_landmarks(seq.frames[t].landmarks, dir / (stem + ".lm"));
      manifest.push_back({static_cast<int>(t + 1), stem + ".obj", stem + ".lm"});
    }
    save_manifest(manifest, dir / "manifest.tsv");
    index.push_back({seq.id, seq.subject_id, seq.label, fs::path(seq.id) / "manifest.tsv"});
  }
  save_dataset_index(index, out_dir / "dataset.tsv");
  return index;
}

}  // namespace sparse4d
