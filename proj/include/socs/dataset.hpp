#pragma once

#include <map>
#include <string>
#include <vector>

#include "socs/category.hpp"
#include "socs/synth.hpp"

namespace socs {

// Everything a dataset build needs; stored verbatim in manifest.json so a
// build is reproducible byte for byte from (config, seed).
struct DatasetConfig {
  Category category = Category::kLamp;
  std::string label_space = "socs";  // "socs" | "nocs"
  int n_keypoints = 32;
  double spread = 1.0;               // parameter variation in [0, 1]
  std::uint64_t seed = 0;

  int n_instances_train = 16;
  int n_instances_val = 4;
  int views_per_instance = 8;

  int n_surface = 4096;   // dense samples per instance before rendering
  int n_points = 1024;    // rendered view size
  int resolution = 96;
  double occluder_fraction = 0.0;
  double noise_sigma = 0.0;

  // Per-view isotropic scale jitter U[1-j, 1+j] on top of the instance's
  // metric size; aniso_scale adds per-axis factors U[0.8, 1.25].
  double scale_jitter = 0.1;
  bool aniso_scale = false;
  // All instances are the median-parameter template (oracle-label runs).
  bool template_only = false;

  int num_bins = 128;

  void validate() const;
};

Json dataset_config_to_json(const DatasetConfig& c);
DatasetConfig dataset_config_from_json(const Json& j);

struct ViewEntry {
  std::string instance_id;
  int view_index = 0;
  std::string split;              // "train" | "val"
  AnisoSimilarity pose;           // object frame -> camera frame
  std::uint64_t seed = 0;
};

struct LoadedView {
  ViewEntry meta;
  PointCloud cloud;               // camera frame, exactly n_points rows
};

struct Dataset {
  DatasetConfig config;
  CategoryBundle bundle;
  std::vector<LoadedView> views;
  std::map<std::string, std::size_t> instance_index;  // id -> bundle slot

  const InstanceRecord& instance(const std::string& id) const;
  // The bundle record with the view's own pose substituted in.
  InstanceRecord record_for(const LoadedView& view) const;
  std::vector<const LoadedView*> split_views(const std::string& split) const;
};

// Layout under dir: manifest.json, bundle/..., views/<iid>/<k>/cloud.ply
// and pose.json. Rebuilding with the same config yields identical bytes.
void build_dataset(const DatasetConfig& config, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace socs
