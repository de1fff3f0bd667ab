#include "socs/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "socs/rng.hpp"
#include "socs/transforms.hpp"

namespace socs {

void EvalConfig::validate() const {
  if (split != "train" && split != "val")
    throw ConfigError("eval split must be train or val");
  if (n_queries < 1) throw ConfigError("n_queries must be positive");
  if (!(sd_sigma_fraction > 0.0))
    throw ConfigError("sd_sigma_fraction must be positive");
  if (min_confidence < 0.0 || min_confidence > 1.0)
    throw ConfigError("min_confidence must lie in [0, 1]");
  if (!(ransac_threshold_fraction > 0.0))
    throw ConfigError("ransac_threshold_fraction must be positive");
  if (ransac_iters < 1) throw ConfigError("ransac_iters must be positive");
  if (mc_samples < 1) throw ConfigError("mc_samples must be positive");
}

OrientedBox tight_box(const PointMatrix& pts) {
  if (pts.rows() == 0) throw ShapeMismatch("tight_box: empty point set");
  OrientedBox box;
  const Vec3 lo = pts.colwise().minCoeff().transpose();
  const Vec3 hi = pts.colwise().maxCoeff().transpose();
  box.center = 0.5 * (lo + hi);
  box.half_extents = (0.5 * (hi - lo)).cwiseMax(1e-9);
  box.rotation = Mat3::Identity();
  return box;
}

OrientedBox transform_box(const AnisoSimilarity& t, const OrientedBox& local) {
  OrientedBox out;
  out.center = apply(t, local.center);
  out.half_extents = t.scale.cwiseProduct(local.half_extents);
  out.rotation = t.rigid.rotation * local.rotation;
  return out;
}

DecodedView decode_view(const Dataset& data, const LoadedView& view,
                        Parameters<double>* params, const ModelConfig* mcfg,
                        const EvalConfig& cfg) {
  cfg.validate();
  if (!cfg.oracle_labels && (params == nullptr || mcfg == nullptr))
    throw ConfigError("decode_view needs a model unless oracle_labels is set");

  const std::uint64_t qseed =
      derive_seed(cfg.seed, 0x71756572ULL, view.meta.seed,
                  std::uint64_t(view.meta.view_index));
  const PointCloud queries =
      sample_queries(cfg.strategy, cfg.n_queries, view.cloud, data.bundle.tmpl,
                     cfg.sd_sigma_fraction, qseed);

  const InstanceRecord rec = data.record_for(view);
  DecodedView out;
  out.queries = queries.points;
  out.gt = label_points(queries.points, rec, data.bundle.codec);
  out.coords.resize(queries.points.rows(), 3);
  out.confidence.resize(queries.points.rows());

  if (cfg.oracle_labels) {
    for (Eigen::Index i = 0; i < queries.points.rows(); ++i) {
      out.coords.row(i) = data.bundle.codec.decode(out.gt[i].bins).transpose();
      out.confidence(i) = 1.0;
    }
    return out;
  }

  const Distributions<double> dist =
      predict_distributions(*params, *mcfg, view.cloud.points, queries.points);
  for (Eigen::Index i = 0; i < queries.points.rows(); ++i) {
    std::array<int, 3> bins{};
    double conf = 1.0;
    for (int a = 0; a < 3; ++a) {
      Eigen::Index best = 0;
      const double peak = dist.axes[a].row(i).maxCoeff(&best);
      bins[a] = int(best);
      conf *= peak;
    }
    out.coords.row(i) = data.bundle.codec.decode(bins).transpose();
    out.confidence(i) = conf;
  }
  return out;
}

EvalOutcome evaluate_split(const Dataset& data, Parameters<double>* params,
                           const ModelConfig* mcfg, const EvalConfig& cfg) {
  cfg.validate();
  const std::vector<const LoadedView*> views = data.split_views(cfg.split);
  if (views.empty()) throw EmptyEval("evaluate_split: split has no views");

  const OrientedBox canonical_box = tight_box(data.bundle.tmpl.mean_shape.points);
  EvalOutcome out;
  out.views.reserve(views.size());

  for (std::size_t v = 0; v < views.size(); ++v) {
    const LoadedView& view = *views[v];
    const DecodedView dec = decode_view(data, view, params, mcfg, cfg);
    const InstanceRecord rec = data.record_for(view);

    ViewEval ve;
    ve.instance_id = view.meta.instance_id;
    ve.view_index = view.meta.view_index;

    double err_sum = 0.0;
    for (Eigen::Index i = 0; i < dec.queries.rows(); ++i) {
      const double e =
          (dec.coords.row(i).transpose() - dec.gt[std::size_t(i)].coord).norm();
      out.coord_errors.push_back(e);
      err_sum += e;
    }
    ve.mean_coord_error = err_sum / double(dec.queries.rows());

    // Confidence gate, then robust fit in the camera frame.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < dec.queries.rows(); ++i)
      if (dec.confidence(i) >= cfg.min_confidence) keep.push_back(i);
    CorrespondenceSet corr;
    corr.socs.resize(Eigen::Index(keep.size()), 3);
    corr.camera.resize(Eigen::Index(keep.size()), 3);
    corr.confidence.resize(Eigen::Index(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
      corr.socs.row(Eigen::Index(i)) = dec.coords.row(keep[i]);
      corr.camera.row(Eigen::Index(i)) = dec.queries.row(keep[i]);
      corr.confidence(Eigen::Index(i)) = dec.confidence(keep[i]);
    }
    ve.used_correspondences = int(keep.size());

    RansacConfig rc;
    rc.iters = cfg.ransac_iters;
    rc.inlier_threshold =
        cfg.ransac_threshold_fraction * data.bundle.tmpl.category_diagonal;
    rc.seed = derive_seed(cfg.seed, 0x666974ULL, std::uint64_t(v));
    try {
      const FitResult fit = fit_robust(corr, rc);
      ve.record.gt_pose = rec.gt_pose;
      ve.record.pred_pose = fit.transform;
      ve.record.gt_box = transform_box(rec.gt_pose, tight_box(rec.shape.points));
      ve.record.pred_box = transform_box(fit.transform, canonical_box);
      ve.record.category = data.bundle.tmpl.name;
      ve.fit_ok = true;
      out.records.push_back(ve.record);
    } catch (const NumericalError&) {
      ve.fit_ok = false;
      ++out.failed_views;
    }
    out.views.push_back(ve);
  }

  out.report = compile_report(out.records, cfg.mc_samples,
                              derive_seed(cfg.seed, 0x696f75ULL));
  return out;
}

}  // namespace socs
