#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "socs/transforms.hpp"
#include "socs/types.hpp"

namespace socs {

enum class Category { kLamp, kCamera, kChair, kBox };

std::string category_name(Category c);
Category category_from_name(const std::string& name);

struct ParamSpec {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

// Bounds of every part parameter of a family, in meters.
const std::vector<ParamSpec>& param_specs(Category category);

struct ShapeParams {
  Category category = Category::kLamp;
  std::map<std::string, double> values;
  std::uint64_t seed = 0;

  double at(const std::string& name) const;
  void validate() const;  // InvalidParams on missing or out-of-range entries
};

// Mid-range parameters; the template instance of each family.
ShapeParams median_params(Category category, std::uint64_t seed = 0);

// Parameters drawn uniformly from ranges shrunk around their midpoints by
// `spread` in [0, 1]; spread = 1 uses the full documented range.
ShapeParams sample_params(Category category, double spread,
                          std::uint64_t seed);

// A named analytic landmark in the raw (unnormalized) shape frame.
struct Landmark {
  std::string name;
  std::string part;
  Vec3 position = Vec3::Zero();
};

// Fixed-order pool of at least 64 landmarks; keypoint sets are prefixes, so
// ordering is consistent across every instance of a family.
std::vector<Landmark> landmark_pool(const ShapeParams& params);

struct GeneratedInstance {
  PointCloud cloud;        // normalized into the unit cube
  KeypointSet keypoints;   // same normalization, pool prefix order
  std::vector<std::string> keypoint_parts;
  // raw = normalized * norm_scale + norm_center
  double norm_scale = 1.0;
  Vec3 norm_center = Vec3::Zero();
};

GeneratedInstance generate_instance(const ShapeParams& params,
                                    int n_surface, int n_keypoints = 32);

struct ViewSpec {
  RigidTransform camera_pose;   // object -> camera; combined with gt scale
  int resolution_x = 96;
  int resolution_y = 96;
  double occluder_fraction = 0.0;
  double noise_sigma = 0.0;     // isotropic, applied after visibility
  std::uint64_t seed = 0;
  int n_output = 1024;

  void validate() const;
};

// Projects gt_pose(shape) into a z-buffer, keeps the nearest point per
// pixel, drops a camera-facing occluder strip over the screen bounding
// box, and resamples the survivors to exactly n_output camera-frame points.
PointCloud render_partial(const PointCloud& shape, const ViewSpec& view,
                          const AnisoSimilarity& gt_pose);

// 0.5 * (mean_a min_b + mean_b min_a) of pairwise distances.
double chamfer_distance(const PointMatrix& a, const PointMatrix& b);

// Mean symmetric chamfer distance from each instance to the template.
double variation_degree(const std::vector<PointCloud>& instances,
                        const PointCloud& tmpl);

}  // namespace socs
