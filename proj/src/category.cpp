#include "socs/category.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "socs/io.hpp"

namespace fs = std::filesystem;

namespace socs {

void BinCodec::validate() const {
  if (num_bins < 2) throw ConfigError("codec needs at least 2 bins");
  if (!(lo < hi)) throw ConfigError("codec range is empty");
}

int BinCodec::encode_axis(double v) const {
  const int i = int(std::floor((v - lo) / bin_width()));
  return std::clamp(i, 0, num_bins - 1);
}

double BinCodec::decode_axis(int bin) const {
  if (bin < 0 || bin >= num_bins)
    throw InvalidBin("bin index " + std::to_string(bin) + " outside [0, " +
                     std::to_string(num_bins) + ")");
  return lo + (double(bin) + 0.5) * bin_width();
}

std::array<int, 3> BinCodec::encode(const Vec3& coord) const {
  return {encode_axis(coord.x()), encode_axis(coord.y()),
          encode_axis(coord.z())};
}

Vec3 BinCodec::decode(const std::array<int, 3>& bins) const {
  return {decode_axis(bins[0]), decode_axis(bins[1]), decode_axis(bins[2])};
}

Vec3 BinCodec::clamp(const Vec3& coord) const {
  return coord.cwiseMax(lo).cwiseMin(hi);
}

void CategoryTemplate::validate() const {
  if (mean_shape.size() == 0) throw DataError("template mean shape is empty");
  if (!mean_shape.all_finite())
    throw DataError("template mean shape has non-finite points");
  if (mean_shape.points.cwiseAbs().maxCoeff() > 0.5 + 1e-9)
    throw DataError("template mean shape exceeds the unit cube");
  template_keypoints.validate();
  const Vec3 lo = mean_shape.points.colwise().minCoeff().transpose();
  const Vec3 hi = mean_shape.points.colwise().maxCoeff().transpose();
  const Vec3 pad = 0.1 * (hi - lo).cwiseMax(1e-6);
  const auto& k = template_keypoints.keypoints;
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    const Vec3 p = k.row(i).transpose();
    if ((p.array() < (lo - pad).array()).any() ||
        (p.array() > (hi + pad).array()).any())
      throw DataError("template keypoint " + std::to_string(i) +
                      " outside the inflated shape bounds");
  }
  if (!(category_diagonal > 0.0))
    throw DataError("category diagonal must be positive");
}

TpsWarp build_instance_warp(const KeypointSet& instance_kps,
                            const CategoryTemplate& tmpl, double lambda) {
  if (instance_kps.size() != tmpl.template_keypoints.size())
    throw DimensionMismatch("instance/template keypoint counts differ");
  return fit_tps(instance_kps, tmpl.template_keypoints, lambda);
}

SocsLabel label_point(const Vec3& x_cam, const InstanceRecord& rec,
                      const BinCodec& codec) {
  const Vec3 x_obj = apply_inverse(rec.gt_pose, x_cam);
  SocsLabel out;
  out.coord = codec.clamp(warp(rec.warp, x_obj));
  out.bins = codec.encode(out.coord);
  return out;
}

std::vector<SocsLabel> label_points(const PointMatrix& x_cam,
                                    const InstanceRecord& rec,
                                    const BinCodec& codec) {
  // Delegates row by row: a vectorized path can differ from the scalar one
  // in the last bit, which is enough to flip a bin at a boundary.
  std::vector<SocsLabel> out(std::size_t(x_cam.rows()));
  for (Eigen::Index i = 0; i < x_cam.rows(); ++i)
    out[std::size_t(i)] = label_point(x_cam.row(i).transpose(), rec, codec);
  return out;
}

void save_bundle(const std::string& dir, const CategoryBundle& bundle) {
  bundle.tmpl.validate();
  bundle.codec.validate();
  fs::create_directories(dir);
  save_ply(dir + "/template.ply", bundle.tmpl.mean_shape);
  save_json_file(dir + "/template_keypoints.json",
                 to_json(bundle.tmpl.template_keypoints));
  save_json_file(dir + "/category.json",
                 Json{{"name", bundle.tmpl.name},
                      {"category_diagonal", bundle.tmpl.category_diagonal},
                      {"codec",
                       {{"num_bins", bundle.codec.num_bins},
                        {"lo", bundle.codec.lo},
                        {"hi", bundle.codec.hi}}}});
  for (const auto& rec : bundle.instances) {
    const std::string idir = dir + "/instances/" + rec.id;
    fs::create_directories(idir);
    save_ply(idir + "/shape.ply", rec.shape);
    save_json_file(idir + "/keypoints.json", to_json(rec.keypoints));
    save_json_file(idir + "/warp.json", to_json(rec.warp));
    save_json_file(idir + "/pose.json", to_json(rec.gt_pose));
  }
}

CategoryBundle load_bundle(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw DataError("category bundle directory missing: " + dir);
  CategoryBundle out;
  out.tmpl.mean_shape = load_ply(dir + "/template.ply", Frame::kObject);
  out.tmpl.template_keypoints =
      keypoints_from_json(load_json_file(dir + "/template_keypoints.json"));
  const Json cat = load_json_file(dir + "/category.json");
  out.tmpl.name = cat.at("name").get<std::string>();
  out.tmpl.category_diagonal = cat.at("category_diagonal").get<double>();
  out.codec.num_bins = cat.at("codec").at("num_bins").get<int>();
  out.codec.lo = cat.at("codec").at("lo").get<double>();
  out.codec.hi = cat.at("codec").at("hi").get<double>();
  out.codec.validate();
  out.tmpl.validate();

  const std::string idir = dir + "/instances";
  std::vector<std::string> ids;
  if (fs::is_directory(idir))
    for (const auto& entry : fs::directory_iterator(idir))
      if (entry.is_directory()) ids.push_back(entry.path().filename().string());
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    InstanceRecord rec;
    rec.id = id;
    const std::string p = idir + "/" + id;
    rec.shape = load_ply(p + "/shape.ply", Frame::kObject);
    rec.keypoints = keypoints_from_json(load_json_file(p + "/keypoints.json"));
    rec.warp = tps_from_json(load_json_file(p + "/warp.json"));
    rec.gt_pose = aniso_from_json(load_json_file(p + "/pose.json"));
    if (rec.keypoints.size() != out.tmpl.template_keypoints.size())
      throw DataError("instance " + id + " keypoint count mismatch");
    out.instances.push_back(std::move(rec));
  }
  return out;
}

}  // namespace socs
