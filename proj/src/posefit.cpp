#include "socs/posefit.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "socs/errors.hpp"
#include "socs/rng.hpp"

namespace socs {

void CorrespondenceSet::validate() const {
  if (socs.rows() != camera.rows())
    throw ShapeMismatch("correspondences: socs/camera row counts differ");
  if (confidence.size() != 0 && confidence.size() != socs.rows())
    throw ShapeMismatch("correspondences: confidence length mismatch");
  if (!socs.allFinite() || !camera.allFinite() ||
      (confidence.size() != 0 && !confidence.allFinite()))
    throw DataError("correspondences: non-finite entries");
  for (Eigen::Index i = 0; i < confidence.size(); ++i)
    if (confidence(i) <= 0.0)
      throw DataError("correspondences: confidences must be positive");
}

void RansacConfig::validate() const {
  if (iters < 1) throw ConfigError("ransac iters must be >= 1");
  if (inlier_threshold <= 0.0)
    throw ConfigError("ransac inlier_threshold must be > 0");
  if (min_sample < 4) throw ConfigError("ransac min_sample must be >= 4");
}

double fit_objective(const CorrespondenceSet& c, const AnisoSimilarity& t) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const Vec3 pred = apply(t, Vec3(c.socs.row(i).transpose()));
    const double w = c.confidence.size() != 0 ? c.confidence(i) : 1.0;
    acc += w * (pred - Vec3(c.camera.row(i).transpose())).squaredNorm();
  }
  return acc;
}

namespace {

Eigen::VectorXd weights_of(const CorrespondenceSet& c) {
  if (c.confidence.size() != 0) return c.confidence;
  return Eigen::VectorXd::Ones(c.size());
}

// Weighted Kabsch between given point sets; throws on collapsed geometry.
void rigid_between(const PointMatrix& src, const PointMatrix& dst,
                   const Eigen::VectorXd& w, Mat3& rotation,
                   Vec3& translation) {
  const double wsum = w.sum();
  const Vec3 mu_src = (src.transpose() * w) / wsum;
  const Vec3 mu_dst = (dst.transpose() * w) / wsum;
  Mat3 cov = Mat3::Zero();
  for (Eigen::Index i = 0; i < src.rows(); ++i)
    cov += w(i) * (dst.row(i).transpose() - mu_dst) *
           (src.row(i) - mu_src.transpose());
  Eigen::JacobiSVD<Mat3> svd(cov,
                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) < 1e-12 * sv(0))
    throw DegenerateConfiguration(
        "pose fit: correspondences collinear or coincident");
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0)
    d(2, 2) = -1.0;
  rotation = svd.matrixU() * d * svd.matrixV().transpose();
  translation = mu_dst - rotation * mu_src;
}

double weighted_rms(const CorrespondenceSet& c, const AnisoSimilarity& t) {
  const Eigen::VectorXd w = weights_of(c);
  return std::sqrt(fit_objective(c, t) / w.sum());
}

}  // namespace

FitResult fit_similarity_isotropic(const CorrespondenceSet& c) {
  c.validate();
  if (c.size() < 3)
    throw DegenerateConfiguration(
        "isotropic fit needs at least 3 correspondences");
  const Eigen::VectorXd w = weights_of(c);
  const double wsum = w.sum();
  const Vec3 mu_a = (c.socs.transpose() * w) / wsum;
  const Vec3 mu_b = (c.camera.transpose() * w) / wsum;

  Mat3 cov = Mat3::Zero();
  double var_a = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const Vec3 da = c.socs.row(i).transpose() - mu_a;
    const Vec3 db = c.camera.row(i).transpose() - mu_b;
    cov += w(i) * db * da.transpose();
    var_a += w(i) * da.squaredNorm();
  }
  cov /= wsum;
  var_a /= wsum;

  Eigen::JacobiSVD<Mat3> svd(cov,
                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(var_a > 0.0) || !(sv(0) > 0.0) || sv(1) < 1e-12 * sv(0))
    throw DegenerateConfiguration(
        "isotropic fit: correspondences collinear or coincident");
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0)
    d(2, 2) = -1.0;

  FitResult r;
  r.transform.rigid.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  const double s = (sv.asDiagonal().toDenseMatrix() * d).trace() / var_a;
  if (!(s > 0.0))
    throw DegenerateConfiguration("isotropic fit: non-positive scale");
  r.transform.scale = Vec3::Constant(s);
  r.transform.rigid.translation =
      mu_b - s * (r.transform.rigid.rotation * mu_a);
  r.rms = weighted_rms(c, r.transform);
  r.iterations = 0;
  r.inliers.assign(std::size_t(c.size()), true);
  return r;
}

FitResult fit_aniso(const CorrespondenceSet& c, const FitResult* init) {
  c.validate();
  if (c.size() < 4)
    throw DegenerateConfiguration(
        "anisotropic fit needs at least 4 correspondences");
  const Eigen::VectorXd w = weights_of(c);

  // Per-axis energy of the canonical coordinates; a zero means that axis's
  // scale is unobservable.
  for (int k = 0; k < 3; ++k) {
    double e = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i)
      e += w(i) * c.socs(i, k) * c.socs(i, k);
    if (!(e > 1e-18))
      throw DegenerateConfiguration(
          "anisotropic fit: canonical coordinates flat along an axis");
  }

  FitResult r = init != nullptr ? *init : fit_similarity_isotropic(c);
  r.scale_clamped = false;
  double obj = fit_objective(c, r.transform);

  constexpr int kMaxIters = 100;
  constexpr double kStop = 1e-12;
  double last_decrease = 0.0;
  int it = 0;
  for (; it < kMaxIters; ++it) {
    // (a) scales fixed: rigid alignment of the pre-scaled coordinates.
    PointMatrix scaled = c.socs;
    for (int k = 0; k < 3; ++k) scaled.col(k) *= r.transform.scale(k);
    rigid_between(scaled, c.camera, w, r.transform.rigid.rotation,
                  r.transform.rigid.translation);

    // (b) rigid part fixed: closed-form per-axis scale on the back-rotated
    // targets.
    const Mat3& rot = r.transform.rigid.rotation;
    const Vec3& tr = r.transform.rigid.translation;
    for (int k = 0; k < 3; ++k) {
      double num = 0.0, den = 0.0;
      for (Eigen::Index i = 0; i < c.size(); ++i) {
        const Vec3 back =
            rot.transpose() *
            (Vec3(c.camera.row(i).transpose()) - tr);
        num += w(i) * c.socs(i, k) * back(k);
        den += w(i) * c.socs(i, k) * c.socs(i, k);
      }
      double s = num / den;
      if (s < 1e-6) {
        s = 1e-6;
        r.scale_clamped = true;
      }
      r.transform.scale(k) = s;
    }

    const double next = fit_objective(c, r.transform);
    last_decrease = obj - next;
    obj = next;
    if (last_decrease < kStop) {
      ++it;
      break;
    }
  }

  r.iterations = it;
  r.converged = !(it >= kMaxIters && last_decrease > 1e-6);
  r.rms = weighted_rms(c, r.transform);
  r.inliers.assign(std::size_t(c.size()), true);
  return r;
}

FitResult fit_robust(const CorrespondenceSet& c, const RansacConfig& rc) {
  c.validate();
  rc.validate();
  const Eigen::Index n = c.size();
  if (n < rc.min_sample)
    throw DegenerateConfiguration("ransac: fewer pairs than a minimal sample");

  Rng rng(derive_seed(rc.seed, 0x72736163));
  std::vector<int> best_inliers;
  for (int hyp = 0; hyp < rc.iters; ++hyp) {
    // Distinct indices for the minimal sample.
    std::vector<int> pick;
    while (int(pick.size()) < rc.min_sample) {
      const int cand = int(rng.uniform_int(std::uint64_t(n)));
      if (std::find(pick.begin(), pick.end(), cand) == pick.end())
        pick.push_back(cand);
    }
    CorrespondenceSet sub;
    sub.socs.resize(rc.min_sample, 3);
    sub.camera.resize(rc.min_sample, 3);
    if (c.confidence.size() != 0) sub.confidence.resize(rc.min_sample);
    for (int i = 0; i < rc.min_sample; ++i) {
      sub.socs.row(i) = c.socs.row(pick[std::size_t(i)]);
      sub.camera.row(i) = c.camera.row(pick[std::size_t(i)]);
      if (c.confidence.size() != 0)
        sub.confidence(i) = c.confidence(pick[std::size_t(i)]);
    }

    FitResult hyp_fit;
    try {
      hyp_fit = fit_aniso(sub);
    } catch (const DegenerateConfiguration&) {
      continue;  // collapsed minimal sample; try the next draw
    }

    std::vector<int> inl;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec3 pred =
          apply(hyp_fit.transform, Vec3(c.socs.row(i).transpose()));
      if ((pred - Vec3(c.camera.row(i).transpose())).norm() <
          rc.inlier_threshold)
        inl.push_back(int(i));
    }
    if (inl.size() > best_inliers.size()) best_inliers = std::move(inl);
  }

  if (int(best_inliers.size()) < rc.min_sample)
    throw NoModel("ransac: no hypothesis reached a minimal inlier set");

  CorrespondenceSet kept;
  kept.socs.resize(Eigen::Index(best_inliers.size()), 3);
  kept.camera.resize(Eigen::Index(best_inliers.size()), 3);
  if (c.confidence.size() != 0)
    kept.confidence.resize(Eigen::Index(best_inliers.size()));
  for (std::size_t i = 0; i < best_inliers.size(); ++i) {
    kept.socs.row(Eigen::Index(i)) = c.socs.row(best_inliers[i]);
    kept.camera.row(Eigen::Index(i)) = c.camera.row(best_inliers[i]);
    if (c.confidence.size() != 0)
      kept.confidence(Eigen::Index(i)) = c.confidence(best_inliers[i]);
  }

  FitResult r = fit_aniso(kept);
  r.inliers.assign(std::size_t(n), false);
  for (int i : best_inliers) r.inliers[std::size_t(i)] = true;
  return r;
}

CorrespondenceSet correspondences_from_json(const Json& j) {
  CorrespondenceSet c;
  const Eigen::MatrixXd socs = matrix_from_json(j.at("socs"));
  const Eigen::MatrixXd cam = matrix_from_json(j.at("camera"));
  if (socs.cols() != 3 || cam.cols() != 3)
    throw DataError("correspondences: expected n x 3 arrays");
  c.socs = socs;
  c.camera = cam;
  if (j.contains("confidence"))
    c.confidence = vector_from_json(j.at("confidence"));
  c.validate();
  return c;
}

Json to_json(const CorrespondenceSet& c) {
  Json j{{"socs", matrix_to_json(c.socs)},
         {"camera", matrix_to_json(c.camera)}};
  if (c.confidence.size() != 0)
    j["confidence"] = vector_to_json(c.confidence);
  return j;
}

Json to_json(const FitResult& r) {
  Json inl = Json::array();
  for (bool b : r.inliers) inl.push_back(b);
  return Json{{"transform", to_json(r.transform)},
              {"rms", r.rms},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"scale_clamped", r.scale_clamped},
              {"inliers", inl}};
}

}  // namespace socs
