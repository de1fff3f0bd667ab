#pragma once

#include <cstdint>
#include <string>

#include "socs/category.hpp"
#include "socs/types.hpp"

namespace socs {

// Query-point sampling strategies. P draws from the visible surface, SD
// perturbs visible points with isotropic noise, SI fills the ball whose
// center is the input centroid and whose diameter is the category diagonal,
// independent of which part of the surface happens to be visible.
enum class SamplingStrategy { kOnSurface, kSurfaceDependent, kSurfaceIndependent };

std::string strategy_name(SamplingStrategy s);
SamplingStrategy strategy_from_name(const std::string& name);

struct SamplingConfig {
  SamplingStrategy strategy = SamplingStrategy::kSurfaceIndependent;
  int n_train = 512;          // queries per view while training
  int n_inference = 2048;     // queries per view at evaluation
  // SD noise scale as a fraction of the input cloud's bbox diagonal.
  double sd_sigma_fraction = 0.05;

  void validate() const;
};

PointCloud sample_queries(SamplingStrategy strategy, int n_samples,
                          const PointCloud& input_cloud,
                          const CategoryTemplate& tmpl,
                          double sd_sigma_fraction, std::uint64_t seed);

}  // namespace socs
