#include "socs/model.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace socs {

std::vector<int> fps_indices(const PointMatrix& pts, int n) {
  const Eigen::Index total = pts.rows();
  if (n < 1 || Eigen::Index(n) > total)
    throw ShapeMismatch("fps: sample count outside [1, points]");
  std::vector<int> out;
  out.reserve(std::size_t(n));
  Eigen::VectorXd min_d2 =
      Eigen::VectorXd::Constant(total, std::numeric_limits<double>::infinity());
  int current = 0;
  out.push_back(current);
  for (int picked = 1; picked < n; ++picked) {
    const auto d2 =
        (pts.rowwise() - pts.row(current)).rowwise().squaredNorm();
    min_d2 = min_d2.cwiseMin(d2);
    int best = 0;
    double best_d = -1.0;
    for (Eigen::Index i = 0; i < total; ++i)
      if (min_d2(i) > best_d) {
        best_d = min_d2(i);
        best = int(i);
      }
    out.push_back(best);
    current = best;
  }
  return out;
}

std::vector<int> knn_indices(const PointMatrix& points,
                             const PointMatrix& queries, int k) {
  const Eigen::Index n = points.rows();
  if (k < 1 || Eigen::Index(k) > n)
    throw ShapeMismatch("knn: k outside [1, points]");
  std::vector<int> out;
  out.reserve(std::size_t(queries.rows()) * std::size_t(k));
  std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
  for (Eigen::Index qi = 0; qi < queries.rows(); ++qi) {
    const auto d2 =
        (points.rowwise() - queries.row(qi)).rowwise().squaredNorm();
    for (Eigen::Index i = 0; i < n; ++i)
      dist[std::size_t(i)] = {d2(i), int(i)};
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (int j = 0; j < k; ++j) out.push_back(dist[std::size_t(j)].second);
  }
  return out;
}

Json model_config_to_json(const ModelConfig& c) {
  return Json{{"h", c.h},
              {"k", c.k},
              {"num_bins", c.num_bins},
              {"block_sizes", c.block_sizes},
              {"init_seed", c.init_seed},
              {"global_attention",
               c.global_attention == GlobalAttention::kJoint ? "joint"
                                                             : "separate"},
              {"use_global", c.use_global},
              {"multi_block", c.multi_block},
              {"head_hidden", c.head_hidden}};
}

ModelConfig model_config_from_json(const Json& j) {
  ModelConfig c;
  c.h = j.at("h").get<int>();
  c.k = j.at("k").get<int>();
  c.num_bins = j.at("num_bins").get<int>();
  c.block_sizes = j.at("block_sizes").get<std::vector<int>>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  const std::string ga = j.at("global_attention").get<std::string>();
  if (ga == "joint")
    c.global_attention = GlobalAttention::kJoint;
  else if (ga == "separate")
    c.global_attention = GlobalAttention::kSeparate;
  else
    throw ConfigError("global_attention must be joint or separate");
  c.use_global = j.at("use_global").get<bool>();
  c.multi_block = j.at("multi_block").get<bool>();
  c.head_hidden = j.at("head_hidden").get<int>();
  c.validate();
  return c;
}

}  // namespace socs
