#pragma once

#include <cstdint>
#include <vector>

#include "socs/io.hpp"
#include "socs/transforms.hpp"
#include "socs/types.hpp"

namespace socs {

// Canonical-coordinate / camera-point pairs the pose is solved from.
// Confidence weights are optional; when present they scale each pair's
// squared residual in every closed-form sub-step.
struct CorrespondenceSet {
  PointMatrix socs;    // n x 3
  PointMatrix camera;  // n x 3
  Eigen::VectorXd confidence;  // empty, or n positive weights

  Eigen::Index size() const { return socs.rows(); }
  void validate() const;
};

struct FitResult {
  AnisoSimilarity transform;  // camera = R * (s .* socs) + t
  std::vector<bool> inliers;
  double rms = 0.0;       // meters, over the rows the fit used
  int iterations = 0;
  bool converged = true;  // false: iteration cap with residual still moving
  bool scale_clamped = false;
};

struct RansacConfig {
  int iters = 256;
  double inlier_threshold = 0.0;  // meters, must be > 0
  int min_sample = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

// Sum of (weighted) squared residuals ||R (s .* a) + t - b||^2.
double fit_objective(const CorrespondenceSet& c, const AnisoSimilarity& t);

// Closed-form weighted absolute orientation with a single scale,
// reflection-corrected. Needs >= 3 non-collinear pairs.
FitResult fit_similarity_isotropic(const CorrespondenceSet& c);

// Alternating minimization for the anisotropic fit: rigid sub-step with the
// scales fixed, then per-axis closed-form scales with the rigid part fixed.
// Descends the objective every iteration; stops when the decrease falls
// below 1e-12 or after 100 iterations.
FitResult fit_aniso(const CorrespondenceSet& c,
                    const FitResult* init = nullptr);

// Seeded RANSAC over minimal samples with a final refit on the inlier set.
// Ties between hypotheses keep the earliest one.
FitResult fit_robust(const CorrespondenceSet& c, const RansacConfig& rc);

CorrespondenceSet correspondences_from_json(const Json& j);
Json to_json(const CorrespondenceSet& c);
Json to_json(const FitResult& r);

}  // namespace socs
