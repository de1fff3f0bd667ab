#include "socs/transforms.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "socs/rng.hpp"

namespace socs {

std::string frame_name(Frame f) {
  switch (f) {
    case Frame::kCamera: return "camera";
    case Frame::kObject: return "object";
    case Frame::kSocs: return "socs";
  }
  throw DataError("unknown frame");
}

Frame frame_from_name(const std::string& name) {
  if (name == "camera") return Frame::kCamera;
  if (name == "object") return Frame::kObject;
  if (name == "socs") return Frame::kSocs;
  throw DataError("unknown frame name: " + name);
}

void KeypointSet::validate(double min_separation) const {
  if (keypoints.rows() < 4)
    throw DimensionMismatch("keypoint set needs at least 4 points, got " +
                            std::to_string(keypoints.rows()));
  if (!keypoints.allFinite())
    throw DataError("keypoint set contains non-finite values");
  for (Eigen::Index i = 0; i < keypoints.rows(); ++i)
    for (Eigen::Index j = i + 1; j < keypoints.rows(); ++j)
      if ((keypoints.row(i) - keypoints.row(j)).norm() < min_separation)
        throw DataError("keypoints " + std::to_string(i) + " and " +
                        std::to_string(j) + " coincide");
}

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  const Mat3 err = R.transpose() * R - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() <= tol && R.determinant() > 0.0;
}

Mat3 orthonormalize(const Mat3& R) {
  Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) = -U.col(2);
  return U * V.transpose();
}

RigidTransform make_rigid(const Mat3& R, const Vec3& t) {
  if (!is_rotation(R))
    throw DataError("matrix is not a rotation within tolerance");
  return RigidTransform{R, t, 0};
}

Vec3 apply(const RigidTransform& T, const Vec3& p) {
  return T.rotation * p + T.translation;
}

PointMatrix apply(const RigidTransform& T, const PointMatrix& pts) {
  return (pts * T.rotation.transpose()).rowwise() + T.translation.transpose();
}

Vec3 apply_inverse(const RigidTransform& T, const Vec3& p) {
  return T.rotation.transpose() * (p - T.translation);
}

PointMatrix apply_inverse(const RigidTransform& T, const PointMatrix& pts) {
  return (pts.rowwise() - T.translation.transpose()) * T.rotation;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = b.rotation * a.rotation;
  out.translation = b.rotation * a.translation + b.translation;
  out.chain_length = a.chain_length + b.chain_length + 1;
  if (out.chain_length > kMaxChainLength) {
    out.rotation = orthonormalize(out.rotation);
    out.chain_length = 0;
  }
  return out;
}

RigidTransform inverse(const RigidTransform& T) {
  RigidTransform out;
  out.rotation = T.rotation.transpose();
  out.translation = -(T.rotation.transpose() * T.translation);
  out.chain_length = T.chain_length;
  return out;
}

Vec3 apply(const AnisoSimilarity& A, const Vec3& p) {
  return apply(A.rigid, Vec3(A.scale.asDiagonal() * p));
}

PointMatrix apply(const AnisoSimilarity& A, const PointMatrix& pts) {
  return apply(A.rigid, PointMatrix(pts * A.scale.asDiagonal()));
}

Vec3 apply_inverse(const AnisoSimilarity& A, const Vec3& p) {
  return apply_inverse(A.rigid, p).cwiseQuotient(A.scale);
}

PointMatrix apply_inverse(const AnisoSimilarity& A, const PointMatrix& pts) {
  PointMatrix out = apply_inverse(A.rigid, pts);
  out.array().rowwise() /= A.scale.transpose().array();
  return out;
}

AnisoSimilarity compose(const AnisoSimilarity& A, const RigidTransform& G) {
  AnisoSimilarity out;
  out.rigid = compose(A.rigid, G);
  out.scale = A.scale;
  return out;
}

RigidTransform random_rigid(std::uint64_t seed, double max_translation) {
  Rng rng(seed);
  RigidTransform out;
  out.rotation = rng.rotation();
  out.translation = Vec3(rng.uniform(-max_translation, max_translation),
                         rng.uniform(-max_translation, max_translation),
                         rng.uniform(-max_translation, max_translation));
  return out;
}

PointMatrix box_corners(const OrientedBox& box) {
  PointMatrix corners(8, 3);
  int row = 0;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) {
        const Vec3 local(sx * box.half_extents.x(), sy * box.half_extents.y(),
                         sz * box.half_extents.z());
        corners.row(row++) = (box.center + box.rotation * local).transpose();
      }
  return corners;
}

double box_volume(const OrientedBox& box) {
  return 8.0 * box.half_extents.prod();
}

bool box_contains(const OrientedBox& box, const Vec3& p) {
  const Vec3 local = box.rotation.transpose() * (p - box.center);
  return (local.cwiseAbs().array() <= box.half_extents.array()).all();
}

}  // namespace socs
