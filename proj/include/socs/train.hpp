#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "socs/checkpoint.hpp"
#include "socs/dataset.hpp"
#include "socs/model.hpp"
#include "socs/sampling.hpp"

namespace socs {

enum class Optimizer { kAdam, kRangerLike };

std::string optimizer_name(Optimizer o);
Optimizer optimizer_from_name(const std::string& name);

struct TrainConfig {
  int batch_size = 16;
  double learning_rate = 0.001;
  int total_steps = 1000;
  double anneal_start_fraction = 0.5;
  Optimizer optimizer = Optimizer::kAdam;
  std::uint64_t seed = 0;
  SamplingConfig sampling;
  double w_socs = 1.0;
  double w_consistency = 0.1;
  double consistency_translation = 0.1;  // T_r translation radius, meters

  int checkpoint_every = 0;  // 0 keeps only final + best
  int val_every = 100;       // steps between validation probes
  int val_queries = 256;     // queries per validation view
  int max_val_views = 8;     // probe cap, keeps validation cheap

  void validate() const;
};

// Constant learning rate until the anneal point, then a half-cosine decay
// that reaches exactly zero at total_steps.
double lr_schedule(int step, const TrainConfig& cfg);

template <typename S>
struct OptimizerState {
  std::vector<ad::MatX<S>> m, v;     // Adam first/second moments
  std::vector<ad::MatX<S>> slow;     // lookahead anchor (RangerLike)
  long t = 0;

  static OptimizerState init(Parameters<S>& params, Optimizer opt) {
    OptimizerState st;
    params.for_each_tensor([&](const std::string&, ad::MatX<S>& mat) {
      st.m.push_back(ad::MatX<S>::Zero(mat.rows(), mat.cols()));
      st.v.push_back(ad::MatX<S>::Zero(mat.rows(), mat.cols()));
      if (opt == Optimizer::kRangerLike) st.slow.push_back(mat);
    });
    return st;
  }
};

// One optimizer update in place. Adam with beta1=0.9, beta2=0.999, eps=1e-8;
// RangerLike wraps it with lookahead (k=6, alpha=0.5). lr == 0 leaves the
// parameters bitwise untouched.
template <typename S>
void apply_update(Parameters<S>& params, const Gradients<S>& grads,
                  OptimizerState<S>& st, double lr, Optimizer opt) {
  const S beta1 = S(0.9), beta2 = S(0.999), eps = S(1e-8);
  st.t += 1;
  const S bc1 = S(1) - S(std::pow(double(beta1), double(st.t)));
  const S bc2 = S(1) - S(std::pow(double(beta2), double(st.t)));
  std::size_t i = 0;
  params.for_each_tensor([&](const std::string&, ad::MatX<S>& mat) {
    const ad::MatX<S>& g = grads.tensors.at(i);
    st.m[i] = beta1 * st.m[i] + (S(1) - beta1) * g;
    st.v[i] = beta2 * st.v[i] + (S(1) - beta2) * g.cwiseProduct(g);
    if (lr != 0.0) {
      const ad::MatX<S> mhat = st.m[i] / bc1;
      const ad::MatX<S> vhat = st.v[i] / bc2;
      mat -= S(lr) * (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
    }
    ++i;
  });
  if (opt == Optimizer::kRangerLike && st.t % 6 == 0) {
    std::size_t j = 0;
    params.for_each_tensor([&](const std::string&, ad::MatX<S>& mat) {
      if (lr != 0.0) {
        st.slow[j] += S(0.5) * (mat - st.slow[j]);
        mat = st.slow[j];
      }
      ++j;
    });
  }
}

struct MetricsRow {
  int step = 0;
  double lr = 0.0;
  double loss_socs = 0.0;
  double loss_consistency = 0.0;
  double val_error = 0.0;  // latest validation coordinate error
};

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows);

struct TrainResult {
  std::vector<MetricsRow> rows;
  double best_val_error = 0.0;
  int best_step = -1;
  std::string best_checkpoint;
  std::string final_checkpoint;
};

namespace detail {

// Mean distance between argmax-decoded coordinates and ground-truth
// canonical coordinates over a fixed probe set.
template <typename S>
double validation_error(Parameters<S>& params, const ModelConfig& mcfg,
                        const Dataset& data, const TrainConfig& cfg) {
  const auto val = data.split_views("val");
  const int n_views =
      int(std::min<std::size_t>(val.size(), std::size_t(cfg.max_val_views)));
  if (n_views == 0) throw DataError("validation split is empty");
  double total = 0.0;
  long count = 0;
  for (int v = 0; v < n_views; ++v) {
    const LoadedView& view = *val[std::size_t(v)];
    const PointCloud queries = sample_queries(
        cfg.sampling.strategy, cfg.val_queries, view.cloud, data.bundle.tmpl,
        cfg.sampling.sd_sigma_fraction,
        derive_seed(cfg.seed, 0x76616c, std::uint64_t(v)));
    const InstanceRecord rec = data.record_for(view);
    const auto labels = label_points(queries.points, rec, data.bundle.codec);
    auto dist = predict_distributions(params, mcfg, view.cloud.points,
                                      queries.points);
    for (Eigen::Index qi = 0; qi < queries.points.rows(); ++qi) {
      std::array<int, 3> bins{};
      for (int ax = 0; ax < 3; ++ax) {
        Eigen::Index best = 0;
        dist.axes[std::size_t(ax)].row(qi).maxCoeff(&best);
        bins[std::size_t(ax)] = int(best);
      }
      const Vec3 decoded = data.bundle.codec.decode(bins);
      total += (decoded - labels[std::size_t(qi)].coord).norm();
      ++count;
    }
  }
  return total / double(count);
}

}  // namespace detail

// Deterministic dataset-driven training: epochs walk the train split in
// seeded-shuffled order, each sample draws its own query set and rigid
// consistency transform from (seed, step, slot), and (config, seeds) fully
// determine every checkpoint byte.
template <typename S>
TrainResult train(const Dataset& data, const ModelConfig& mcfg,
                  const TrainConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  mcfg.validate();
  if (data.config.n_points != mcfg.input_points())
    throw ConfigError("model expects " + std::to_string(mcfg.input_points()) +
                      " input points but dataset views hold " +
                      std::to_string(data.config.n_points));
  if (data.bundle.codec.num_bins != mcfg.num_bins)
    throw ConfigError("model bin count differs from dataset codec");
  const auto train_views = data.split_views("train");
  if (train_views.empty()) throw DataError("training split is empty");

  std::filesystem::create_directories(out_dir);
  Parameters<S> params = Parameters<S>::init(mcfg);
  OptimizerState<S> opt = OptimizerState<S>::init(params, cfg.optimizer);

  TrainResult result;
  double latest_val = detail::validation_error(params, mcfg, data, cfg);
  result.best_val_error = latest_val;

  std::vector<std::size_t> order(train_views.size());
  std::size_t pos = order.size();  // forces a shuffle on first use
  std::uint64_t epoch = 0;

  for (int step = 0; step < cfg.total_steps; ++step) {
    std::vector<TrainSample> batch;
    std::vector<std::string> batch_ids;
    while (int(batch.size()) < cfg.batch_size) {
      if (pos == order.size()) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle(derive_seed(cfg.seed, 0x7368666c, epoch++));
        for (std::size_t i = order.size(); i > 1; --i)
          std::swap(order[i - 1], order[shuffle.uniform_int(i)]);
        pos = 0;
      }
      const LoadedView& view = *train_views[order[pos++]];
      const std::uint64_t sseed = derive_seed(
          cfg.seed, std::uint64_t(step), std::uint64_t(batch.size()));
      TrainSample s;
      s.cloud = view.cloud.points;
      const PointCloud queries = sample_queries(
          cfg.sampling.strategy, cfg.sampling.n_train, view.cloud,
          data.bundle.tmpl, cfg.sampling.sd_sigma_fraction,
          derive_seed(sseed, 0x71));
      s.queries = queries.points;
      const auto labels =
          label_points(s.queries, data.record_for(view), data.bundle.codec);
      for (int ax = 0; ax < 3; ++ax) {
        s.labels[std::size_t(ax)].resize(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i)
          s.labels[std::size_t(ax)][i] = labels[i].bins[std::size_t(ax)];
      }
      s.t_r = random_rigid(derive_seed(sseed, 0x74),
                           cfg.consistency_translation);
      batch.push_back(std::move(s));
      batch_ids.push_back(view.meta.instance_id + "/" +
                          std::to_string(view.meta.view_index));
    }

    const double lr = lr_schedule(step, cfg);
    LossBreakdown<S> losses;
    try {
      auto [grads, lb] = gradients(params, mcfg, batch, cfg.w_socs,
                                   cfg.w_consistency);
      losses = lb;
      apply_update(params, grads, opt, lr, cfg.optimizer);
    } catch (const NonFiniteLoss&) {
      std::string ids;
      for (const auto& id : batch_ids) ids += (ids.empty() ? "" : ", ") + id;
      throw NonFiniteLoss("non-finite loss at step " + std::to_string(step) +
                          " (views: " + ids + ")");
    }
    if (!params.all_finite())
      throw NonFiniteLoss("non-finite parameters after step " +
                          std::to_string(step));

    const bool last = step + 1 == cfg.total_steps;
    if ((step + 1) % cfg.val_every == 0 || last) {
      latest_val = detail::validation_error(params, mcfg, data, cfg);
      if (result.best_step < 0 || latest_val < result.best_val_error) {
        result.best_val_error = latest_val;
        result.best_step = step;
        result.best_checkpoint = out_dir + "/checkpoint_best.ckpt";
        save_checkpoint(result.best_checkpoint, params, mcfg);
      }
    }
    if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 &&
        !last)
      save_checkpoint(out_dir + "/checkpoint_" + std::to_string(step + 1) +
                          ".ckpt",
                      params, mcfg);

    result.rows.push_back(
        {step, lr, losses.socs, losses.consistency, latest_val});
  }

  result.final_checkpoint = out_dir + "/checkpoint_final.ckpt";
  save_checkpoint(result.final_checkpoint, params, mcfg);
  if (result.best_checkpoint.empty()) {
    result.best_checkpoint = result.final_checkpoint;
    result.best_step = cfg.total_steps - 1;
  }
  write_metrics_csv(out_dir + "/metrics.csv", result.rows);
  return result;
}

}  // namespace socs
