#pragma once

#include <cstdint>

#include "socs/types.hpp"

namespace socs {

// Max ||R^T R - I|| entry for a matrix accepted as a rotation.
inline constexpr double kRotationTol = 1e-9;
// Compositions before the chained rotation is re-orthonormalized.
inline constexpr int kMaxChainLength = 100;

bool is_rotation(const Mat3& R, double tol = kRotationTol);

// Nearest rotation in Frobenius norm (polar factor, det forced to +1).
Mat3 orthonormalize(const Mat3& R);

RigidTransform make_rigid(const Mat3& R, const Vec3& t);

Vec3 apply(const RigidTransform& T, const Vec3& p);
PointMatrix apply(const RigidTransform& T, const PointMatrix& pts);
Vec3 apply_inverse(const RigidTransform& T, const Vec3& p);
PointMatrix apply_inverse(const RigidTransform& T, const PointMatrix& pts);

// a then b, i.e. compose(a, b)(p) == b(a(p)).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform inverse(const RigidTransform& T);

// p -> R diag(scale) p + t.
Vec3 apply(const AnisoSimilarity& A, const Vec3& p);
PointMatrix apply(const AnisoSimilarity& A, const PointMatrix& pts);
// The exact inverse map diag(1/scale) R^T (p - t); not itself expressible
// as scale-then-rigid, hence a function rather than an inverse() value.
Vec3 apply_inverse(const AnisoSimilarity& A, const Vec3& p);
PointMatrix apply_inverse(const AnisoSimilarity& A, const PointMatrix& pts);

// A then the rigid G; representable because the extra rotation folds left.
AnisoSimilarity compose(const AnisoSimilarity& A, const RigidTransform& G);

// Haar-uniform rotation, translation uniform in a centered cube.
RigidTransform random_rigid(std::uint64_t seed, double max_translation);

PointMatrix box_corners(const OrientedBox& box);
double box_volume(const OrientedBox& box);
bool box_contains(const OrientedBox& box, const Vec3& p);

}  // namespace socs
