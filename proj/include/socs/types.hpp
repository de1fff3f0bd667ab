#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "socs/errors.hpp"

namespace socs {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
// One point per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

enum class Frame { kCamera, kObject, kSocs };

std::string frame_name(Frame f);
Frame frame_from_name(const std::string& name);

struct PointCloud {
  PointMatrix points;
  Frame frame = Frame::kObject;

  Eigen::Index size() const { return points.rows(); }
  bool all_finite() const { return points.allFinite(); }
};

struct KeypointSet {
  PointMatrix keypoints;
  Frame frame = Frame::kObject;

  Eigen::Index size() const { return keypoints.rows(); }

  // At least 4 finite, pairwise-distinct points.
  void validate(double min_separation = 1e-9) const;
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  // Compositions since the rotation was last projected back onto SO(3).
  int chain_length = 0;
};

struct AnisoSimilarity {
  RigidTransform rigid;
  Vec3 scale = Vec3::Ones();  // applied before the rigid part, per axis
};

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
  Mat3 rotation = Mat3::Identity();
};

}  // namespace socs
