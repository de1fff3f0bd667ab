#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "socs/dataset.hpp"
#include "socs/metrics.hpp"
#include "socs/model.hpp"
#include "socs/posefit.hpp"
#include "socs/sampling.hpp"

namespace socs {

// Inference-and-evaluation settings for one dataset split.
struct EvalConfig {
  std::string split = "val";
  SamplingStrategy strategy = SamplingStrategy::kSurfaceIndependent;
  int n_queries = 2048;
  double sd_sigma_fraction = 0.05;
  // Correspondences whose confidence (product of the three per-axis peak
  // probabilities) falls below this are dropped before pose fitting.
  double min_confidence = 0.0;
  double ransac_threshold_fraction = 0.05;  // of the category diagonal
  int ransac_iters = 256;
  int mc_samples = 200000;  // per-record IoU sample count
  std::uint64_t seed = 0;
  // Replace network output with ground-truth bins; isolates the pose solver
  // and the quantization floor from network error.
  bool oracle_labels = false;

  void validate() const;
};

// Axis-aligned tight bounding box of a point set, identity orientation.
OrientedBox tight_box(const PointMatrix& pts);

// Maps an axis-aligned local box through scale-then-rigid; the per-axis
// scale acts in the box frame, so the result stays a valid oriented box.
OrientedBox transform_box(const AnisoSimilarity& t, const OrientedBox& local);

// Query points of one view with their decoded canonical coordinates,
// confidences, and the matching ground-truth labels.
struct DecodedView {
  PointMatrix queries;         // camera frame
  PointMatrix coords;          // decoded canonical coordinates
  Eigen::VectorXd confidence;  // in (0, 1]
  std::vector<SocsLabel> gt;
};

DecodedView decode_view(const Dataset& data, const LoadedView& view,
                        Parameters<double>* params, const ModelConfig* mcfg,
                        const EvalConfig& cfg);

struct ViewEval {
  std::string instance_id;
  int view_index = 0;
  EvalRecord record;
  double mean_coord_error = 0.0;
  int used_correspondences = 0;
  bool fit_ok = false;
};

struct EvalOutcome {
  std::vector<ViewEval> views;
  std::vector<EvalRecord> records;  // successful fits only
  MetricsReport report;
  std::vector<double> coord_errors;  // per query, every view, view order
  int failed_views = 0;
};

// Full pipeline over a split: sample queries, decode coordinates, fit a
// robust anisotropic similarity per view, box up the results, aggregate.
// With oracle_labels set, params/mcfg may be null.
EvalOutcome evaluate_split(const Dataset& data, Parameters<double>* params,
                           const ModelConfig* mcfg, const EvalConfig& cfg);

}  // namespace socs
