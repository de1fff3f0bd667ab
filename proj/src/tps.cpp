#include "socs/tps.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace socs {
namespace {

// Polynomial block rank threshold: smallest singular value below this
// fraction of the largest means the sources are coplanar or worse.
constexpr double kPolyRankTol = 1e-10;

Eigen::MatrixXd kernel_matrix(const PointMatrix& eval_at,
                              const PointMatrix& centers) {
  Eigen::MatrixXd K(eval_at.rows(), centers.rows());
  for (Eigen::Index i = 0; i < eval_at.rows(); ++i)
    for (Eigen::Index j = 0; j < centers.rows(); ++j)
      K(i, j) = tps_kernel((eval_at.row(i) - centers.row(j)).norm());
  return K;
}

Eigen::MatrixXd poly_block(const PointMatrix& pts) {
  Eigen::MatrixXd P(pts.rows(), 4);
  P.col(0).setOnes();
  P.rightCols<3>() = pts;
  return P;
}

}  // namespace

double tps_kernel(double r) {
  if (r <= 0.0) return 0.0;
  return r * r * std::log(r);
}

void TpsWarp::validate(double tol) const {
  if (w.rows() != centers.size() || w.cols() != 3)
    throw DimensionMismatch("warp weights must be m x 3 with m centers");
  if (centers.size() < 4)
    throw DimensionMismatch("warp needs at least 4 centers");
  const Eigen::RowVector3d ones_w = w.colwise().sum();
  const Mat3 centers_w = centers.keypoints.transpose() * w;
  if (ones_w.cwiseAbs().maxCoeff() > tol ||
      centers_w.cwiseAbs().maxCoeff() > tol)
    throw DataError("warp weights violate the side conditions");
}

TpsWarp fit_tps(const KeypointSet& source, const KeypointSet& target,
                double lambda, KernelCenters centers) {
  if (source.size() != target.size())
    throw DimensionMismatch("source and target keypoint counts differ: " +
                            std::to_string(source.size()) + " vs " +
                            std::to_string(target.size()));
  source.validate();
  target.validate();
  if (lambda < 0.0) throw ConfigError("regularization must be >= 0");

  const Eigen::Index m = source.size();
  const PointMatrix& src = source.keypoints;
  const PointMatrix center_pts =
      centers == KernelCenters::kSource ? src : target.keypoints;

  // Interpolation rows evaluate at the sources; the four side-condition
  // rows live on the kernel centers.
  const Eigen::MatrixXd P_src = poly_block(src);
  const Eigen::MatrixXd P_ctr = poly_block(center_pts);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(P_ctr);
  const auto& sigma = svd.singularValues();
  if (sigma(3) < kPolyRankTol * sigma(0))
    throw SingularSystem("kernel centers are coplanar within tolerance");

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 4, m + 4);
  A.topLeftCorner(m, m) = kernel_matrix(src, center_pts);
  A.topLeftCorner(m, m).diagonal().array() += lambda;
  A.topRightCorner(m, 4) = P_src;
  A.bottomLeftCorner(4, m) = P_ctr.transpose();

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m + 4, 3);
  rhs.topRows(m) = target.keypoints;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible())
    throw SingularSystem("warp system is singular");
  const Eigen::MatrixXd sol = lu.solve(rhs);

  TpsWarp out;
  out.w = sol.topRows(m);
  out.c = sol.row(m).transpose();
  out.b = sol.bottomRows(3);
  out.centers.keypoints = center_pts;
  out.centers.frame = source.frame;
  return out;
}

Vec3 warp(const TpsWarp& phi, const Vec3& x) {
  Vec3 out = phi.c + phi.b.transpose() * x;
  for (Eigen::Index j = 0; j < phi.centers.size(); ++j)
    out += phi.w.row(j).transpose() *
           tps_kernel((x.transpose() - phi.centers.keypoints.row(j)).norm());
  return out;
}

PointMatrix warp_points(const TpsWarp& phi, const PointMatrix& pts) {
  const Eigen::MatrixXd S = kernel_matrix(pts, phi.centers.keypoints);
  PointMatrix out = pts * phi.b;
  out.rowwise() += phi.c.transpose();
  out.noalias() += S * phi.w;
  return out;
}

PointCloud warp_cloud(const TpsWarp& phi, const PointCloud& pc) {
  PointCloud out;
  out.frame = Frame::kSocs;
  out.points = warp_points(phi, pc.points);
  return out;
}

Json to_json(const TpsWarp& phi) {
  return Json{{"c", vector_to_json(phi.c)},
              {"b", matrix_to_json(phi.b)},
              {"w", matrix_to_json(phi.w)},
              {"centers", matrix_to_json(phi.centers.keypoints)},
              {"centers_frame", frame_name(phi.centers.frame)}};
}

TpsWarp tps_from_json(const Json& j) {
  TpsWarp out;
  const Eigen::VectorXd c = vector_from_json(j.at("c"));
  if (c.size() != 3) throw DataError("warp c must be a 3-vector");
  out.c = c;
  const Eigen::MatrixXd b = matrix_from_json(j.at("b"));
  if (b.rows() != 3 || b.cols() != 3) throw DataError("warp b must be 3x3");
  out.b = b;
  out.w = matrix_from_json(j.at("w"));
  const Eigen::MatrixXd centers = matrix_from_json(j.at("centers"));
  if (centers.cols() != 3) throw DataError("warp centers must be m x 3");
  out.centers.keypoints = centers;
  if (j.contains("centers_frame"))
    out.centers.frame = frame_from_name(j.at("centers_frame").get<std::string>());
  out.validate();
  return out;
}

}  // namespace socs
