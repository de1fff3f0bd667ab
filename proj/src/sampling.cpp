#include "socs/sampling.hpp"

#include "socs/rng.hpp"

namespace socs {

std::string strategy_name(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::kOnSurface: return "P";
    case SamplingStrategy::kSurfaceDependent: return "SD";
    case SamplingStrategy::kSurfaceIndependent: return "SI";
  }
  throw ConfigError("unknown sampling strategy");
}

SamplingStrategy strategy_from_name(const std::string& name) {
  if (name == "P") return SamplingStrategy::kOnSurface;
  if (name == "SD") return SamplingStrategy::kSurfaceDependent;
  if (name == "SI") return SamplingStrategy::kSurfaceIndependent;
  throw ConfigError("unknown sampling strategy: " + name);
}

void SamplingConfig::validate() const {
  if (n_train < 1 || n_inference < 1)
    throw ConfigError("query counts must be >= 1");
  if (sd_sigma_fraction <= 0.0)
    throw ConfigError("SD sigma fraction must be > 0");
}

PointCloud sample_queries(SamplingStrategy strategy, int n_samples,
                          const PointCloud& input_cloud,
                          const CategoryTemplate& tmpl,
                          double sd_sigma_fraction, std::uint64_t seed) {
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  if (input_cloud.size() == 0)
    throw DataError("cannot sample queries around an empty cloud");

  Rng rng(derive_seed(seed, 0x71756572));
  PointCloud out;
  out.frame = input_cloud.frame;
  out.points.resize(n_samples, 3);
  const Eigen::Index n_in = input_cloud.size();

  switch (strategy) {
    case SamplingStrategy::kOnSurface: {
      if (Eigen::Index(n_samples) <= n_in) {
        // uniform subset without replacement via partial Fisher-Yates
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_in));
        for (Eigen::Index i = 0; i < n_in; ++i) idx[std::size_t(i)] = i;
        for (int k = 0; k < n_samples; ++k) {
          const int j = k + rng.uniform_int(int(n_in) - k);
          std::swap(idx[std::size_t(k)], idx[std::size_t(j)]);
          out.points.row(k) = input_cloud.points.row(idx[std::size_t(k)]);
        }
      } else {
        for (int k = 0; k < n_samples; ++k)
          out.points.row(k) =
              input_cloud.points.row(rng.uniform_int(int(n_in)));
      }
      break;
    }
    case SamplingStrategy::kSurfaceDependent: {
      const Vec3 lo = input_cloud.points.colwise().minCoeff().transpose();
      const Vec3 hi = input_cloud.points.colwise().maxCoeff().transpose();
      const double sigma = sd_sigma_fraction * (hi - lo).norm();
      if (!(sigma > 0.0))
        throw DataError("degenerate input cloud for SD sampling");
      for (int k = 0; k < n_samples; ++k)
        out.points.row(k) =
            input_cloud.points.row(rng.uniform_int(int(n_in))) +
            rng.normal3(sigma).transpose();
      break;
    }
    case SamplingStrategy::kSurfaceIndependent: {
      const Vec3 centroid =
          input_cloud.points.colwise().mean().transpose();
      const double radius = 0.5 * tmpl.category_diagonal;
      for (int k = 0; k < n_samples; ++k)
        out.points.row(k) = rng.in_ball(centroid, radius).transpose();
      break;
    }
  }
  return out;
}

}  // namespace socs
