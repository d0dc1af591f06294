#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sparse4d {

using Point3 = Eigen::Vector3d;

/// Point cloud or triangle mesh with optional per-vertex RGB in [0,1].
struct Mesh {
  std::vector<Point3> vertices;
  std::optional<std::vector<Point3>> colors;
  std::vector<std::array<int, 3>> faces;

  std::size_t size() const { return vertices.size(); }
  bool has_colors() const { return colors.has_value(); }

  /// Throws EmptyMesh / MalformedFile when an invariant is broken.
  void validate() const;
};

struct LandmarkSet {
  std::vector<Point3> points;

  std::size_t size() const { return points.size(); }
  void validate() const;
};

enum class Expression : int { angry = 0, disgust, fear, happy, sad, surprise };

inline constexpr int kExpressionCount = 6;

const char* expression_name(Expression e);
Expression parse_expression(const std::string& name);

struct Frame {
  Mesh mesh;
  LandmarkSet landmarks;
};

struct Sequence4D {
  std::string id;
  std::string subject_id;
  Expression label = Expression::angry;
  std::vector<Frame> frames;

  std::size_t landmark_count() const {
    return frames.empty() ? 0 : frames.front().landmarks.size();
  }
  void validate() const;
};

enum class View : int { left = 0, front = 1, right = 2 };
inline constexpr std::array<View, 3> kAllViews = {View::left, View::front, View::right};
const char* view_name(View v);

struct MultiView {
  Sequence4D left;
  Sequence4D front;
  Sequence4D right;

  const Sequence4D& at(View v) const;
};

inline constexpr double kDefaultProfileAngle = 20.0;

// --- transforms -----------------------------------------------------------

Point3 vertex_centroid(const Mesh& mesh);

/// Rotation about the vertical (y) axis through `pivot`; positive angles turn
/// +x towards -z.
Point3 rotate_point_about_vertical(const Point3& p, double degrees, const Point3& pivot);

/// Rotates every vertex about the y axis through the vertex centroid.
Mesh rotate_about_vertical(const Mesh& mesh, double degrees);
LandmarkSet rotate_about_vertical(const LandmarkSet& lm, double degrees, const Point3& pivot);

/// Left (+angle), front (unchanged) and right (-angle) profiles. Each frame's
/// landmarks are rotated about the centroid of that frame's mesh.
MultiView multi_view(const Sequence4D& seq, double degrees = kDefaultProfileAngle);

// --- file formats ---------------------------------------------------------

/// OBJ subset (`v x y z [r g b]`, `f i j k`) or ASCII PLY.
Mesh load_mesh(const std::filesystem::path& path);
Mesh parse_obj(const std::string& text);
Mesh parse_ply(const std::string& text);
void save_obj(const Mesh& mesh, const std::filesystem::path& path);

/// m lines of `x y z`.
LandmarkSet load_landmarks(const std::filesystem::path& path);
void save_landmarks(const LandmarkSet& lm, const std::filesystem::path& path);

struct ManifestEntry {
  int frame_index = 0;
  std::filesystem::path mesh_path;
  std::filesystem::path landmark_path;
};

/// One line per frame: `frame_index<TAB>mesh_path<TAB>landmark_path`.
/// Relative paths are resolved against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);

/// Loads every frame listed in a manifest.
std::vector<Frame> load_frames(const std::filesystem::path& manifest);

/// Dataset index: `sequence_id<TAB>subject_id<TAB>label<TAB>manifest_path`.
struct DatasetEntry {
  std::string sequence_id;
  std::string subject_id;
  Expression label = Expression::angry;
  std::filesystem::path manifest;
};
std::vector<DatasetEntry> load_dataset_index(const std::filesystem::path& path);
void save_dataset_index(const std::vector<DatasetEntry>& entries, const std::filesystem::path& path);
Sequence4D load_sequence(const DatasetEntry& entry);

}  // namespace sparse4d
