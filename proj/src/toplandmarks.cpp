#include "sparse4d/toplandmarks.hpp"

#include <algorithm>

#include "sparse4d/error.hpp"

namespace sparse4d {

std::array<PlanarProjection, 3> project_landmarks(const LandmarkSet& lm) {
  if (lm.size() < 3) throw InvalidArgument("TOP-landmarks need at least 3 landmarks");
  std::array<PlanarProjection, 3> out{
      PlanarProjection{Plane::XY, {}}, PlanarProjection{Plane::XZ, {}}, PlanarProjection{Plane::YZ, {}}};
  for (auto& p : out) p.points.reserve(lm.size());
  for (const auto& v : lm.points) {
    out[0].points.emplace_back(v.x(), v.y());
    out[1].points.emplace_back(v.x(), v.z());
    out[2].points.emplace_back(v.y(), v.z());
  }
  return out;
}

PlanarProjection normalize_projection(const PlanarProjection& p) {
  if (p.points.size() < 2) throw DegenerateConfiguration("normalization needs at least 2 points");
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& q : p.points) centroid += q;
  centroid /= static_cast<double>(p.points.size());
  PlanarProjection out{p.plane, {}};
  out.points.reserve(p.points.size());
  double max_norm = 0.0;
  for (const auto& q : p.points) {
    out.points.push_back(q - centroid);
    max_norm = std::max(max_norm, out.points.back().norm());
  }
  if (!(max_norm > 0.0)) throw DegenerateConfiguration("all projected landmarks coincide");
  for (auto& q : out.points) q /= max_norm;
  return out;
}

Eigen::VectorXd top_descriptor(const LandmarkSet& lm) {
  const auto planes = project_landmarks(lm);
  const auto m = static_cast<Eigen::Index>(lm.size());
  Eigen::VectorXd omega(3 * m);
  for (Eigen::Index b = 0; b < 3; ++b) {
    const auto normalized = normalize_projection(planes[static_cast<std::size_t>(b)]);
    for (Eigen::Index i = 0; i < m; ++i) omega(b * m + i) = normalized.points[static_cast<std::size_t>(i)].norm();
    // Rescale so the farthest landmark sits at exactly 1.
    omega.segment(b * m, m) /= omega.segment(b * m, m).maxCoeff();
  }
  return omega;
}

Eigen::MatrixXd top_descriptor_sequence(const Sequence4D& seq) {
  const auto m = static_cast<Eigen::Index>(seq.landmark_count());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(seq.frames.size()), 3 * m);
  for (std::size_t t = 0; t < seq.frames.size(); ++t)
    out.row(static_cast<Eigen::Index>(t)) = top_descriptor(seq.frames[t].landmarks).transpose();
  return out;
}

}  // namespace sparse4d
