#include "socs/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "socs/io.hpp"
#include "socs/rng.hpp"

namespace fs = std::filesystem;

namespace socs {
namespace {

constexpr std::uint64_t kTagTemplate = 0x746d706c;
constexpr std::uint64_t kTagInstance = 0x696e7374;
constexpr std::uint64_t kTagView = 0x76696577;

std::string pad3(int v) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%03d", v);
  return buf;
}

TpsWarp identity_warp(const KeypointSet& centers) {
  TpsWarp w;
  w.c = Vec3::Zero();
  w.b = Mat3::Identity();
  w.w = Eigen::MatrixXd::Zero(centers.size(), 3);
  w.centers = centers;
  return w;
}

double raw_bbox_diagonal(const GeneratedInstance& g) {
  const Vec3 lo = g.cloud.points.colwise().minCoeff().transpose();
  const Vec3 hi = g.cloud.points.colwise().maxCoeff().transpose();
  return (hi - lo).norm() * g.norm_scale;
}

AnisoSimilarity draw_view_pose(const DatasetConfig& cfg, double norm_scale,
                               std::uint64_t seed) {
  Rng rng(seed);
  AnisoSimilarity pose;
  pose.rigid.rotation = rng.rotation();
  const double z = rng.uniform(1.0, 1.5);
  pose.rigid.translation =
      Vec3(rng.uniform(-0.12, 0.12) * z, rng.uniform(-0.12, 0.12) * z, z);
  const double jitter =
      rng.uniform(1.0 - cfg.scale_jitter, 1.0 + cfg.scale_jitter);
  Vec3 axes = Vec3::Ones();
  if (cfg.aniso_scale)
    axes = Vec3(rng.uniform(0.8, 1.25), rng.uniform(0.8, 1.25),
                rng.uniform(0.8, 1.25));
  pose.scale = norm_scale * jitter * axes;
  return pose;
}

}  // namespace

void DatasetConfig::validate() const {
  if (label_space != "socs" && label_space != "nocs")
    throw ConfigError("label_space must be socs or nocs, got " + label_space);
  if (n_keypoints < 4) throw ConfigError("n_keypoints must be >= 4");
  if (spread < 0.0 || spread > 1.0)
    throw ConfigError("spread must lie in [0, 1]");
  if (n_instances_train < 0 || n_instances_val < 0 ||
      n_instances_train + n_instances_val < 1)
    throw ConfigError("dataset needs at least one instance");
  if (views_per_instance < 1)
    throw ConfigError("views_per_instance must be >= 1");
  if (n_surface < n_points)
    throw ConfigError("n_surface must be >= n_points");
  if (n_points < 1) throw ConfigError("n_points must be >= 1");
  if (resolution < 8) throw ConfigError("resolution must be >= 8");
  if (occluder_fraction < 0.0 || occluder_fraction >= 1.0)
    throw ConfigError("occluder_fraction must lie in [0, 1)");
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
  if (scale_jitter < 0.0 || scale_jitter >= 1.0)
    throw ConfigError("scale_jitter must lie in [0, 1)");
  if (num_bins < 2) throw ConfigError("num_bins must be >= 2");
}

Json dataset_config_to_json(const DatasetConfig& c) {
  return Json{{"category", category_name(c.category)},
              {"label_space", c.label_space},
              {"n_keypoints", c.n_keypoints},
              {"spread", c.spread},
              {"seed", c.seed},
              {"n_instances_train", c.n_instances_train},
              {"n_instances_val", c.n_instances_val},
              {"views_per_instance", c.views_per_instance},
              {"n_surface", c.n_surface},
              {"n_points", c.n_points},
              {"resolution", c.resolution},
              {"occluder_fraction", c.occluder_fraction},
              {"noise_sigma", c.noise_sigma},
              {"scale_jitter", c.scale_jitter},
              {"aniso_scale", c.aniso_scale},
              {"template_only", c.template_only},
              {"num_bins", c.num_bins}};
}

DatasetConfig dataset_config_from_json(const Json& j) {
  DatasetConfig c;
  c.category = category_from_name(j.at("category").get<std::string>());
  c.label_space = j.at("label_space").get<std::string>();
  c.n_keypoints = j.at("n_keypoints").get<int>();
  c.spread = j.at("spread").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.n_instances_train = j.at("n_instances_train").get<int>();
  c.n_instances_val = j.at("n_instances_val").get<int>();
  c.views_per_instance = j.at("views_per_instance").get<int>();
  c.n_surface = j.at("n_surface").get<int>();
  c.n_points = j.at("n_points").get<int>();
  c.resolution = j.at("resolution").get<int>();
  c.occluder_fraction = j.at("occluder_fraction").get<double>();
  c.noise_sigma = j.at("noise_sigma").get<double>();
  c.scale_jitter = j.at("scale_jitter").get<double>();
  c.aniso_scale = j.at("aniso_scale").get<bool>();
  c.template_only = j.at("template_only").get<bool>();
  c.num_bins = j.at("num_bins").get<int>();
  c.validate();
  return c;
}

const InstanceRecord& Dataset::instance(const std::string& id) const {
  const auto it = instance_index.find(id);
  if (it == instance_index.end())
    throw DataError("unknown instance id: " + id);
  return bundle.instances[it->second];
}

InstanceRecord Dataset::record_for(const LoadedView& view) const {
  InstanceRecord rec = instance(view.meta.instance_id);
  rec.gt_pose = view.meta.pose;
  return rec;
}

std::vector<const LoadedView*> Dataset::split_views(
    const std::string& split) const {
  std::vector<const LoadedView*> out;
  for (const auto& v : views)
    if (v.meta.split == split) out.push_back(&v);
  return out;
}

void build_dataset(const DatasetConfig& config, const std::string& dir) {
  config.validate();
  fs::create_directories(dir);

  const ShapeParams tmpl_params =
      median_params(config.category, derive_seed(config.seed, kTagTemplate));
  const GeneratedInstance tmpl_gen =
      generate_instance(tmpl_params, config.n_surface, config.n_keypoints);

  CategoryBundle bundle;
  bundle.tmpl.mean_shape = tmpl_gen.cloud;
  bundle.tmpl.template_keypoints = tmpl_gen.keypoints;
  bundle.tmpl.name = category_name(config.category);
  bundle.codec.num_bins = config.num_bins;

  struct Built {
    GeneratedInstance gen;
    ShapeParams params;
    std::string id;
    std::string split;
  };
  std::vector<Built> built;
  double max_diag = raw_bbox_diagonal(tmpl_gen);
  int instance_counter = 0;
  for (const auto& [split, count] :
       {std::pair<std::string, int>{"train", config.n_instances_train},
        std::pair<std::string, int>{"val", config.n_instances_val}}) {
    for (int i = 0; i < count; ++i, ++instance_counter) {
      const std::uint64_t iseed =
          derive_seed(config.seed, kTagInstance, std::uint64_t(instance_counter));
      ShapeParams params =
          config.template_only
              ? median_params(config.category, iseed)
              : sample_params(config.category, config.spread, iseed);
      params.seed = iseed;
      Built b;
      b.gen = generate_instance(params, config.n_surface, config.n_keypoints);
      b.params = params;
      b.id = split + "_" + pad3(i);
      b.split = split;
      max_diag = std::max(max_diag, raw_bbox_diagonal(b.gen));
      built.push_back(std::move(b));
    }
  }

  const double max_scale_factor =
      (1.0 + config.scale_jitter) * (config.aniso_scale ? 1.25 : 1.0);
  bundle.tmpl.category_diagonal = max_diag * max_scale_factor;

  for (const auto& b : built) {
    InstanceRecord rec;
    rec.id = b.id;
    rec.shape = b.gen.cloud;
    rec.keypoints = b.gen.keypoints;
    rec.warp = config.label_space == "socs"
                   ? build_instance_warp(b.gen.keypoints, bundle.tmpl)
                   : identity_warp(b.gen.keypoints);
    rec.gt_pose = AnisoSimilarity{};  // views carry the actual poses
    bundle.instances.push_back(std::move(rec));
  }
  save_bundle(dir + "/bundle", bundle);

  Json views_json = Json::array();
  for (std::size_t bi = 0; bi < built.size(); ++bi) {
    const auto& b = built[bi];
    for (int k = 0; k < config.views_per_instance; ++k) {
      const std::uint64_t vseed =
          derive_seed(config.seed, kTagView, std::uint64_t(bi),
                      std::uint64_t(k));
      const AnisoSimilarity pose =
          draw_view_pose(config, b.gen.norm_scale, vseed);
      ViewSpec spec;
      spec.resolution_x = config.resolution;
      spec.resolution_y = config.resolution;
      spec.occluder_fraction = config.occluder_fraction;
      spec.noise_sigma = config.noise_sigma;
      spec.seed = derive_seed(vseed, 1);
      spec.n_output = config.n_points;
      const PointCloud cloud = render_partial(b.gen.cloud, spec, pose);

      const std::string vdir = dir + "/views/" + b.id + "/" + pad3(k);
      fs::create_directories(vdir);
      save_ply(vdir + "/cloud.ply", cloud);
      save_json_file(vdir + "/pose.json", to_json(pose));
      views_json.push_back(Json{{"instance_id", b.id},
                                {"view_index", k},
                                {"split", b.split},
                                {"seed", vseed}});
    }
  }

  Json instances_json = Json::array();
  for (const auto& b : built) {
    Json params = Json::object();
    for (const auto& [k, v] : b.params.values) params[k] = v;
    instances_json.push_back(Json{{"id", b.id},
                                  {"split", b.split},
                                  {"seed", b.params.seed},
                                  {"params", params},
                                  {"norm_scale", b.gen.norm_scale}});
  }
  save_json_file(dir + "/manifest.json",
                 Json{{"config", dataset_config_to_json(config)},
                      {"category_diagonal", bundle.tmpl.category_diagonal},
                      {"instances", instances_json},
                      {"views", views_json}});
}

Dataset load_dataset(const std::string& dir) {
  Dataset ds;
  const Json manifest = load_json_file(dir + "/manifest.json");
  ds.config = dataset_config_from_json(manifest.at("config"));
  ds.bundle = load_bundle(dir + "/bundle");
  for (std::size_t i = 0; i < ds.bundle.instances.size(); ++i)
    ds.instance_index[ds.bundle.instances[i].id] = i;

  for (const auto& vj : manifest.at("views")) {
    LoadedView v;
    v.meta.instance_id = vj.at("instance_id").get<std::string>();
    v.meta.view_index = vj.at("view_index").get<int>();
    v.meta.split = vj.at("split").get<std::string>();
    v.meta.seed = vj.at("seed").get<std::uint64_t>();
    const std::string vdir =
        dir + "/views/" + v.meta.instance_id + "/" + pad3(v.meta.view_index);
    v.cloud = load_ply(vdir + "/cloud.ply", Frame::kCamera);
    v.meta.pose = aniso_from_json(load_json_file(vdir + "/pose.json"));
    if (v.cloud.size() != ds.config.n_points)
      throw DataError("view " + vdir + " has wrong point count");
    if (ds.instance_index.find(v.meta.instance_id) == ds.instance_index.end())
      throw DataError("view references unknown instance " +
                      v.meta.instance_id);
    ds.views.push_back(std::move(v));
  }
  return ds;
}

}  // namespace socs
