#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "sparse4d/geometry.hpp"

namespace sparse4d {

enum class Plane { XY, XZ, YZ };

struct PlanarProjection {
  Plane plane = Plane::XY;
  std::vector<Eigen::Vector2d> points;
};

/// XY drops z, XZ drops y, YZ drops x. Point order is preserved.
std::array<PlanarProjection, 3> project_landmarks(const LandmarkSet& lm);

/// Centers on the 2D centroid and divides by the largest resulting norm.
/// Throws DegenerateConfiguration when all points coincide.
PlanarProjection normalize_projection(const PlanarProjection& p);

/// Per-landmark distances from the normalized origin for the XY, XZ and YZ
/// planes, concatenated in that order (length 3m, entries in [0,1]).
Eigen::VectorXd top_descriptor(const LandmarkSet& lm);

/// One descriptor per frame, stacked as rows.
Eigen::MatrixXd top_descriptor_sequence(const Sequence4D& seq);

}  // namespace sparse4d
