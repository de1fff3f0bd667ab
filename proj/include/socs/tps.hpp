#pragma once

#include "socs/io.hpp"
#include "socs/types.hpp"

namespace socs {

// Which keypoint set carries the radial kernels. Source-centered is the
// classical formulation and gives exact interpolation; target-centered is
// kept selectable for comparison.
enum class KernelCenters { kSource, kTarget };

inline constexpr double kTpsDefaultLambda = 1e-8;

// sigma(r) = r^2 log r, continuously extended to 0 at r = 0.
double tps_kernel(double r);

// Phi(x) = c + b^T x + w^T s(x), s(x) the kernel values at the distances
// from x to the centers.
struct TpsWarp {
  Vec3 c = Vec3::Zero();
  Mat3 b = Mat3::Identity();
  Eigen::MatrixXd w;        // m x 3
  KeypointSet centers;

  // Side conditions 1^T w = 0 and C^T w = 0 keep the bending energy of the
  // fitted deformation bounded.
  void validate(double tol = 1e-8) const;
};

TpsWarp fit_tps(const KeypointSet& source, const KeypointSet& target,
                double lambda,
                KernelCenters centers = KernelCenters::kSource);

Vec3 warp(const TpsWarp& phi, const Vec3& x);
PointCloud warp_cloud(const TpsWarp& phi, const PointCloud& pc);
PointMatrix warp_points(const TpsWarp& phi, const PointMatrix& pts);

Json to_json(const TpsWarp& phi);
TpsWarp tps_from_json(const Json& j);

}  // namespace socs
