#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "socs/autodiff.hpp"
#include "socs/category.hpp"
#include "socs/io.hpp"
#include "socs/rng.hpp"
#include "socs/transforms.hpp"
#include "socs/types.hpp"

namespace socs {

enum class GlobalAttention { kJoint, kSeparate };

struct ModelConfig {
  int h = 64;                 // feature width
  int k = 16;                 // attention neighbors per block
  int num_bins = 128;
  // block_sizes[0] is the input size; each later entry is one pyramid block.
  std::vector<int> block_sizes = {1024, 512, 256, 128, 64, 32};
  std::uint64_t init_seed = 0;
  // kJoint folds the global slot into one softmax over k+1 logits; kSeparate
  // follows the two-softmax form, whose single-logit global softmax is
  // always 1.
  GlobalAttention global_attention = GlobalAttention::kJoint;
  bool use_global = true;   // drop the global slot entirely when false
  // true: concatenate every block's propagated feature; false: attend at
  // the last block only and emit its h-wide feature.
  bool multi_block = true;
  int head_hidden = 0;      // 0 -> 2*h

  int num_blocks() const { return int(block_sizes.size()) - 1; }
  int input_points() const { return block_sizes.front(); }
  int head_hidden_dim() const { return head_hidden > 0 ? head_hidden : 2 * h; }
  // Concatenated propagate output width.
  int feature_dim() const { return (multi_block ? num_blocks() : 1) * h; }

  void validate() const {
    if (h < 8) throw ConfigError("feature width must be >= 8");
    if (num_bins < 2) throw ConfigError("bins must be >= 2");
    if (block_sizes.size() < 2)
      throw ConfigError("need an input size plus at least one block");
    for (std::size_t i = 1; i < block_sizes.size(); ++i)
      if (block_sizes[i] < 1 || block_sizes[i] > block_sizes[i - 1])
        throw ConfigError("block sizes must be positive and non-increasing");
    if (k < 1 || k > block_sizes.back())
      throw ConfigError("k must lie in [1, smallest block size]");
  }
};

Json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const Json& j);

template <typename S>
struct BlockParams {
  ad::MatX<S> mlp_w1, mlp_b1, mlp_w2, mlp_b2;  // backbone shared MLP
  ad::MatX<S> wq, wk, wv;                      // attention projections
  ad::MatX<S> emb_w1, emb_b1, emb_w2, emb_b2;  // positional logit MLP 3->h->1
  ad::MatX<S> ln_gain, ln_bias;
};

template <typename S>
struct HeadParams {
  ad::MatX<S> w1, b1, w2, b2;
};

template <typename S>
struct Parameters {
  std::vector<BlockParams<S>> blocks;
  HeadParams<S> head_x, head_y, head_z;

  static Parameters init(const ModelConfig& cfg);

  template <typename Fn>
  void for_each_tensor(Fn&& fn);  // fixed visitation order; names stable

  bool all_finite();
  Parameters clone() const { return *this; }
};

template <typename S>
Parameters<S> Parameters<S>::init(const ModelConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.init_seed, 0x696e6974));
  auto dense = [&rng](Eigen::Index r, Eigen::Index c) {
    ad::MatX<S> m(r, c);
    const double sd = std::sqrt(2.0 / double(r));
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = S(sd * rng.normal());
    return m;
  };
  auto zeros = [](Eigen::Index r, Eigen::Index c) {
    return ad::MatX<S>::Zero(r, c).eval();
  };

  Parameters<S> p;
  const int h = cfg.h;
  for (int a = 1; a <= cfg.num_blocks(); ++a) {
    BlockParams<S> b;
    const int in_dim = a == 1 ? 3 : 3 + h;
    b.mlp_w1 = dense(in_dim, h);
    b.mlp_b1 = zeros(1, h);
    b.mlp_w2 = dense(h, h);
    b.mlp_b2 = zeros(1, h);
    b.wq = dense(h, h);
    b.wk = dense(h, h);
    b.wv = dense(h, h);
    b.emb_w1 = dense(3, h);
    b.emb_b1 = zeros(1, h);
    b.emb_w2 = dense(h, 1);
    b.emb_b2 = zeros(1, 1);
    b.ln_gain = ad::MatX<S>::Ones(1, h).eval();
    b.ln_bias = zeros(1, h);
    p.blocks.push_back(std::move(b));
  }
  const int fd = cfg.feature_dim(), hh = cfg.head_hidden_dim();
  for (HeadParams<S>* head : {&p.head_x, &p.head_y, &p.head_z}) {
    head->w1 = dense(fd, hh);
    head->b1 = zeros(1, hh);
    head->w2 = dense(hh, cfg.num_bins);
    head->b2 = zeros(1, cfg.num_bins);
  }
  return p;
}

template <typename S>
template <typename Fn>
void Parameters<S>::for_each_tensor(Fn&& fn) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string pre = "block" + std::to_string(i) + ".";
    BlockParams<S>& b = blocks[i];
    fn(pre + "mlp_w1", b.mlp_w1);
    fn(pre + "mlp_b1", b.mlp_b1);
    fn(pre + "mlp_w2", b.mlp_w2);
    fn(pre + "mlp_b2", b.mlp_b2);
    fn(pre + "wq", b.wq);
    fn(pre + "wk", b.wk);
    fn(pre + "wv", b.wv);
    fn(pre + "emb_w1", b.emb_w1);
    fn(pre + "emb_b1", b.emb_b1);
    fn(pre + "emb_w2", b.emb_w2);
    fn(pre + "emb_b2", b.emb_b2);
    fn(pre + "ln_gain", b.ln_gain);
    fn(pre + "ln_bias", b.ln_bias);
  }
  const char* names[3] = {"head_x.", "head_y.", "head_z."};
  HeadParams<S>* heads[3] = {&head_x, &head_y, &head_z};
  for (int i = 0; i < 3; ++i) {
    fn(names[i] + std::string("w1"), heads[i]->w1);
    fn(names[i] + std::string("b1"), heads[i]->b1);
    fn(names[i] + std::string("w2"), heads[i]->w2);
    fn(names[i] + std::string("b2"), heads[i]->b2);
  }
}

template <typename S>
bool Parameters<S>::all_finite() {
  bool ok = true;
  for_each_tensor([&ok](const std::string&, ad::MatX<S>& m) {
    ok = ok && m.allFinite();
  });
  return ok;
}

// Deterministic farthest-point sampling, seeded at row 0; ties take the
// lowest index.
std::vector<int> fps_indices(const PointMatrix& pts, int n);

// k nearest rows of `points` for each row of `queries`, nearest first;
// distance ties break by index.
std::vector<int> knn_indices(const PointMatrix& points,
                             const PointMatrix& queries, int k);

namespace detail {

template <typename S>
struct BoundBlock {
  ad::Var<S> mlp_w1, mlp_b1, mlp_w2, mlp_b2;
  ad::Var<S> wq, wk, wv;
  ad::Var<S> emb_w1, emb_b1, emb_w2, emb_b2;
  ad::Var<S> ln_gain, ln_bias;
};

template <typename S>
struct BoundHead {
  ad::Var<S> w1, b1, w2, b2;
};

template <typename S>
struct BoundParams {
  std::vector<BoundBlock<S>> blocks;
  BoundHead<S> head_x, head_y, head_z;
  std::vector<int> leaf_ids;  // tape ids in for_each_tensor order
};

template <typename S>
BoundParams<S> bind(ad::Tape<S>& tape, Parameters<S>& params) {
  BoundParams<S> out;
  std::vector<ad::Var<S>> vars;
  params.for_each_tensor([&](const std::string&, ad::MatX<S>& m) {
    ad::Var<S> v = ad::param(tape, m);
    out.leaf_ids.push_back(v.id);
    vars.push_back(v);
  });
  std::size_t at = 0;
  auto next = [&]() { return vars.at(at++); };
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    BoundBlock<S> b;
    b.mlp_w1 = next();
    b.mlp_b1 = next();
    b.mlp_w2 = next();
    b.mlp_b2 = next();
    b.wq = next();
    b.wk = next();
    b.wv = next();
    b.emb_w1 = next();
    b.emb_b1 = next();
    b.emb_w2 = next();
    b.emb_b2 = next();
    b.ln_gain = next();
    b.ln_bias = next();
    out.blocks.push_back(b);
  }
  for (BoundHead<S>* h : {&out.head_x, &out.head_y, &out.head_z}) {
    h->w1 = next();
    h->b1 = next();
    h->w2 = next();
    h->b2 = next();
  }
  return out;
}

template <typename S>
ad::MatX<S> to_scalar(const Eigen::MatrixXd& m) {
  return m.template cast<S>();
}

// Two-layer MLP with ReLU after each layer.
template <typename S>
ad::Var<S> backbone_mlp(const BoundBlock<S>& b, const ad::Var<S>& in) {
  auto h1 = ad::relu(ad::add_row_broadcast(ad::matmul(in, b.mlp_w1), b.mlp_b1));
  return ad::relu(ad::add_row_broadcast(ad::matmul(h1, b.mlp_w2), b.mlp_b2));
}

// 3 -> h -> 1, ReLU between layers only.
template <typename S>
ad::Var<S> emb_mlp(const BoundBlock<S>& b, const ad::Var<S>& offsets) {
  auto h1 =
      ad::relu(ad::add_row_broadcast(ad::matmul(offsets, b.emb_w1), b.emb_b1));
  return ad::add_row_broadcast(ad::matmul(h1, b.emb_w2), b.emb_b2);
}

}  // namespace detail

// One pyramid level: downsampled geometry (kept in double precision) plus
// tape-bound features and the precomputed key/value projections shared by
// every query.
template <typename S>
struct PyramidLevel {
  PointMatrix pts;        // centered object points
  Vec3 g = Vec3::Zero();  // mean of pts
  ad::Var<S> feat;        // n x h
  ad::Var<S> keys;        // n x h, feat * W_k
  ad::Var<S> values;      // n x h, feat * W_v
  ad::Var<S> g_feat;      // 1 x h, mean of feat
  ad::Var<S> g_key;       // 1 x h
  ad::Var<S> g_value;     // 1 x h
};

template <typename S>
struct FeaturePyramid {
  Vec3 origin = Vec3::Zero();  // input centroid subtracted up front
  std::vector<PyramidLevel<S>> levels;
};

template <typename S>
FeaturePyramid<S> aggregate(ad::Tape<S>& tape,
                            const detail::BoundParams<S>& bp,
                            const ModelConfig& cfg,
                            const PointMatrix& cloud) {
  cfg.validate();
  if (cloud.rows() != cfg.input_points())
    throw ShapeMismatch("aggregate: expected " +
                        std::to_string(cfg.input_points()) + " points, got " +
                        std::to_string(cloud.rows()));

  FeaturePyramid<S> pyr;
  pyr.origin = cloud.colwise().mean().transpose();
  PointMatrix prev_pts = cloud.rowwise() - pyr.origin.transpose();
  ad::Var<S> prev_feat;  // empty at block 1
  const int k = cfg.k;

  for (int a = 1; a <= cfg.num_blocks(); ++a) {
    const detail::BoundBlock<S>& b = bp.blocks[std::size_t(a - 1)];
    const int n = cfg.block_sizes[std::size_t(a)];
    const std::vector<int> sel = fps_indices(prev_pts, n);
    PointMatrix pts(n, 3);
    for (int i = 0; i < n; ++i) pts.row(i) = prev_pts.row(sel[std::size_t(i)]);

    const std::vector<int> nbr = knn_indices(prev_pts, pts, k);
    Eigen::MatrixXd offsets(Eigen::Index(n) * k, 3);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j)
        offsets.row(Eigen::Index(i) * k + j) =
            prev_pts.row(nbr[std::size_t(i) * k + std::size_t(j)]) -
            pts.row(i);
    auto off_var = ad::constant(tape, detail::to_scalar<S>(offsets));

    ad::Var<S> mlp_in;
    if (a == 1) {
      mlp_in = off_var;
    } else {
      auto gathered = ad::gather_rows(prev_feat, nbr);
      mlp_in = ad::concat_cols<S>({off_var, gathered});
    }
    auto activated = detail::backbone_mlp(b, mlp_in);

    PyramidLevel<S> level;
    level.pts = pts;
    level.g = pts.colwise().mean().transpose();
    level.feat = ad::group_max_rows(activated, k);
    level.keys = ad::matmul(level.feat, b.wk);
    level.values = ad::matmul(level.feat, b.wv);
    level.g_feat = ad::colwise_mean(level.feat);
    level.g_key = ad::matmul(level.g_feat, b.wk);
    level.g_value = ad::matmul(level.g_feat, b.wv);

    prev_pts = std::move(pts);
    prev_feat = level.feat;
    pyr.levels.push_back(std::move(level));
  }
  return pyr;
}

// Cross-attention feature propagation for a batch of query points.
// Returns (n_queries x feature_dim). Queries share the pyramid's centering.
template <typename S>
ad::Var<S> propagate(ad::Tape<S>& tape, const detail::BoundParams<S>& bp,
                     const ModelConfig& cfg, const FeaturePyramid<S>& pyr,
                     const PointMatrix& queries) {
  if (queries.rows() < 1) throw ShapeMismatch("propagate: no queries");
  const Eigen::Index q = queries.rows();
  const int k = cfg.k;
  const S inv_sqrt_h = S(1) / S(std::sqrt(double(cfg.h)));
  const PointMatrix centered = queries.rowwise() - pyr.origin.transpose();

  ad::Var<S> fx = ad::constant(
      tape, ad::MatX<S>::Zero(q, cfg.h).eval());  // F_x^0 = 0
  std::vector<ad::Var<S>> outputs;

  const int first_block = cfg.multi_block ? 1 : cfg.num_blocks();
  for (int a = first_block; a <= cfg.num_blocks(); ++a) {
    const detail::BoundBlock<S>& b = bp.blocks[std::size_t(a - 1)];
    const PyramidLevel<S>& level = pyr.levels[std::size_t(a - 1)];
    const bool with_global = cfg.use_global;
    const bool joint =
        with_global && cfg.global_attention == GlobalAttention::kJoint;
    // Attention slots per query: k neighbors, plus the global point when it
    // joins the same softmax.
    const int slots = joint ? k + 1 : k;

    const std::vector<int> nbr = knn_indices(level.pts, centered, k);
    const Eigen::Index n_level = level.pts.rows();

    std::vector<int> slot_idx;
    slot_idx.reserve(std::size_t(q) * std::size_t(slots));
    Eigen::MatrixXd offsets(q * slots, 3);
    for (Eigen::Index i = 0; i < q; ++i) {
      for (int j = 0; j < slots; ++j) {
        const bool global_slot = joint && j == k;
        const int src = global_slot
                            ? int(n_level)
                            : nbr[std::size_t(i) * k + std::size_t(j)];
        slot_idx.push_back(src);
        const Eigen::RowVector3d target =
            global_slot ? Eigen::RowVector3d(level.g.transpose())
                        : Eigen::RowVector3d(level.pts.row(src));
        offsets.row(i * slots + j) = centered.row(i) - target;
      }
    }
    auto off_var = ad::constant(tape, detail::to_scalar<S>(offsets));
    auto emb = detail::emb_mlp(b, off_var);  // (q*slots x 1)

    auto fq = ad::matmul(fx, b.wq);  // q x h
    ad::Var<S> key_bank = level.keys;
    ad::Var<S> value_bank = level.values;
    if (joint) {
      key_bank = ad::concat_rows(level.keys, level.g_key);
      value_bank = ad::concat_rows(level.values, level.g_value);
    }
    auto keys = ad::gather_rows(key_bank, slot_idx);
    auto dots = ad::rowwise_sum(ad::cmul(ad::repeat_rows(fq, slots), keys));
    auto logits = ad::scale(ad::fold_rows(ad::add(dots, emb), slots),
                            inv_sqrt_h);
    auto weights = ad::softmax_rows(logits);  // q x slots

    auto values = ad::gather_rows(value_bank, slot_idx);
    auto weighted = ad::mul_col_broadcast(values, ad::unfold_rows(weights));
    auto delta = ad::group_sum_rows(weighted, slots);  // q x h

    if (with_global && !joint) {
      // Literal two-softmax form: the global softmax covers one logit, so
      // its weight is exactly 1 and the term reduces to adding F_g W_v.
      delta = ad::add_row_broadcast(delta, level.g_value);
    }

    fx = ad::layer_norm_rows(ad::add(fx, delta), b.ln_gain, b.ln_bias);
    outputs.push_back(fx);
  }
  return outputs.size() == 1 ? outputs[0] : ad::concat_cols(outputs);
}

template <typename S>
std::array<ad::Var<S>, 3> head_logits(ad::Tape<S>& tape,
                                      const detail::BoundParams<S>& bp,
                                      const ModelConfig& cfg,
                                      const ad::Var<S>& features) {
  (void)tape;
  if (features.cols() != cfg.feature_dim())
    throw ShapeMismatch("heads: feature width mismatch");
  auto run = [&](const detail::BoundHead<S>& h) {
    auto h1 = ad::relu(ad::add_row_broadcast(ad::matmul(features, h.w1), h.b1));
    return ad::add_row_broadcast(ad::matmul(h1, h.w2), h.b2);
  };
  return {run(bp.head_x), run(bp.head_y), run(bp.head_z)};
}

// ---- Value-level conveniences (no gradient bookkeeping) ----

template <typename S>
struct Distributions {
  // one row per query, num_bins columns, rows sum to 1
  std::array<ad::MatX<S>, 3> axes;
};

// Mean over queries of the summed three-axis cross-entropy, computed from
// probabilities. The training path uses the fused logit version; this is
// the reference the two are cross-checked against.
template <typename S>
double loss_socs_value(const Distributions<S>& preds,
                       const std::vector<SocsLabel>& labels) {
  const Eigen::Index q = preds.axes[0].rows();
  if (Eigen::Index(labels.size()) != q)
    throw ShapeMismatch("loss_socs: prediction/label counts differ");
  double total = 0.0;
  for (Eigen::Index i = 0; i < q; ++i)
    for (int axis = 0; axis < 3; ++axis) {
      const int bin = labels[std::size_t(i)].bins[std::size_t(axis)];
      if (bin < 0 || bin >= int(preds.axes[std::size_t(axis)].cols()))
        throw InvalidBin("label bin outside head width");
      const double p =
          double(preds.axes[std::size_t(axis)](i, bin));
      total += -std::log(std::max(p, 1e-300));
    }
  return total / double(q);
}

template <typename S>
double loss_consistency_value(const ad::MatX<S>& f, const ad::MatX<S>& f2) {
  if (f.rows() != f2.rows() || f.cols() != f2.cols())
    throw ShapeMismatch("loss_consistency: feature shapes differ");
  return (f - f2).template cast<double>().rowwise().norm().mean();
}

inline double total_loss_value(double socs, double consistency,
                               double w_socs = 1.0,
                               double w_consistency = 0.1) {
  return w_socs * socs + w_consistency * consistency;
}

// ---- Tape-level losses ----

template <typename S>
ad::Var<S> loss_socs_node(ad::Tape<S>& tape,
                          const std::array<ad::Var<S>, 3>& logits,
                          const std::array<std::vector<int>, 3>& labels) {
  const Eigen::Index q = logits[0].rows();
  ad::Var<S> total;
  for (int axis = 0; axis < 3; ++axis) {
    auto ce = ad::softmax_xent_rows(logits[std::size_t(axis)],
                                    labels[std::size_t(axis)]);
    auto summed = ad::sum_all(ce);
    total = axis == 0 ? summed : ad::add(total, summed);
  }
  (void)tape;
  return ad::scale(total, S(1) / S(q));
}

template <typename S>
ad::Var<S> loss_consistency_node(const ad::Var<S>& f, const ad::Var<S>& f2) {
  if (f.rows() != f2.rows() || f.cols() != f2.cols())
    throw ShapeMismatch("loss_consistency: feature shapes differ");
  auto norms = ad::row_l2_norms(ad::sub(f, f2));
  return ad::scale(ad::sum_all(norms), S(1) / S(f.rows()));
}

// ---- Whole-model convenience passes ----

struct TrainSample {
  PointMatrix cloud;                     // camera frame, input_points rows
  PointMatrix queries;                   // camera frame
  std::array<std::vector<int>, 3> labels;
  RigidTransform t_r;                    // consistency transform
};

template <typename S>
struct LossBreakdown {
  double socs = 0.0;
  double consistency = 0.0;
  double total = 0.0;
};

template <typename S>
struct Gradients {
  std::vector<ad::MatX<S>> tensors;  // for_each_tensor order
};

// Builds the twin-pass graph for each sample and returns exact reverse-mode
// gradients of the mean total loss over the batch.
template <typename S>
std::pair<Gradients<S>, LossBreakdown<S>> gradients(
    Parameters<S>& params, const ModelConfig& cfg,
    const std::vector<TrainSample>& batch, double w_socs = 1.0,
    double w_consistency = 0.1) {
  if (batch.empty()) throw ShapeMismatch("gradients: empty batch");
  ad::Tape<S> tape;
  detail::BoundParams<S> bp = detail::bind(tape, params);

  ad::Var<S> total;
  double socs_sum = 0.0, cons_sum = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const TrainSample& sample = batch[s];
    auto pyr = aggregate(tape, bp, cfg, sample.cloud);
    auto feat = propagate(tape, bp, cfg, pyr, sample.queries);
    auto logits = head_logits(tape, bp, cfg, feat);
    auto l_socs = loss_socs_node(tape, logits, sample.labels);

    const PointMatrix cloud_t = apply(sample.t_r, sample.cloud);
    const PointMatrix queries_t = apply(sample.t_r, sample.queries);
    auto pyr_t = aggregate(tape, bp, cfg, cloud_t);
    auto feat_t = propagate(tape, bp, cfg, pyr_t, queries_t);
    auto l_cons = loss_consistency_node(feat, feat_t);

    socs_sum += double(l_socs.value()(0, 0));
    cons_sum += double(l_cons.value()(0, 0));
    auto l_total = ad::add(ad::scale(l_socs, S(w_socs)),
                           ad::scale(l_cons, S(w_consistency)));
    total = s == 0 ? l_total : ad::add(total, l_total);
  }
  total = ad::scale(total, S(1) / S(batch.size()));

  LossBreakdown<S> losses;
  losses.socs = socs_sum / double(batch.size());
  losses.consistency = cons_sum / double(batch.size());
  losses.total = double(total.value()(0, 0));
  if (!std::isfinite(losses.total))
    throw NonFiniteLoss("non-finite loss in gradient pass");

  tape.backward(total.id);
  Gradients<S> grads;
  for (int id : bp.leaf_ids) grads.tensors.push_back(tape.grad(id));
  return {std::move(grads), losses};
}

// Inference: per-query bin distributions for a single cloud.
template <typename S>
Distributions<S> predict_distributions(Parameters<S>& params,
                                       const ModelConfig& cfg,
                                       const PointMatrix& cloud,
                                       const PointMatrix& queries) {
  ad::Tape<S> tape;
  detail::BoundParams<S> bp = detail::bind(tape, params);
  auto pyr = aggregate(tape, bp, cfg, cloud);
  auto feat = propagate(tape, bp, cfg, pyr, queries);
  auto logits = head_logits(tape, bp, cfg, feat);
  Distributions<S> out;
  for (int axis = 0; axis < 3; ++axis)
    out.axes[std::size_t(axis)] =
        ad::softmax_rows(logits[std::size_t(axis)]).value();
  return out;
}

// Concatenated propagate features (used by the consistency probes).
template <typename S>
ad::MatX<S> predict_features(Parameters<S>& params, const ModelConfig& cfg,
                             const PointMatrix& cloud,
                             const PointMatrix& queries) {
  ad::Tape<S> tape;
  detail::BoundParams<S> bp = detail::bind(tape, params);
  auto pyr = aggregate(tape, bp, cfg, cloud);
  return propagate(tape, bp, cfg, pyr, queries).value();
}

}  // namespace socs
