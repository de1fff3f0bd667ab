#pragma once

#include <array>
#include <string>
#include <vector>

#include "socs/tps.hpp"
#include "socs/transforms.hpp"
#include "socs/types.hpp"

namespace socs {

// Uniform per-axis binning of the canonical coordinate cube. Encoding uses
// the lower-edge convention with a top clamp so the range is fully covered;
// decoding returns bin centers, so roundtrip error is at most half a bin.
struct BinCodec {
  int num_bins = 128;
  double lo = -0.5;
  double hi = 0.5;

  void validate() const;
  double bin_width() const { return (hi - lo) / num_bins; }
  int encode_axis(double v) const;
  double decode_axis(int bin) const;
  std::array<int, 3> encode(const Vec3& coord) const;
  Vec3 decode(const std::array<int, 3>& bins) const;
  Vec3 clamp(const Vec3& coord) const;
};

struct CategoryTemplate {
  PointCloud mean_shape;           // object frame, inside the unit cube
  KeypointSet template_keypoints;
  double category_diagonal = 0.0;  // bbox diagonal of the largest instance, m
  std::string name;

  void validate() const;
};

struct InstanceRecord {
  std::string id;
  PointCloud shape;        // object frame
  KeypointSet keypoints;   // ordered to match the template
  TpsWarp warp;            // object frame -> canonical coordinates
  AnisoSimilarity gt_pose; // object frame -> camera frame
};

struct SocsLabel {
  Vec3 coord;               // continuous canonical coordinate, clamped
  std::array<int, 3> bins;
};

TpsWarp build_instance_warp(const KeypointSet& instance_kps,
                            const CategoryTemplate& tmpl,
                            double lambda = kTpsDefaultLambda);

// Camera-frame query -> canonical coordinate and its bin triplet.
SocsLabel label_point(const Vec3& x_cam, const InstanceRecord& rec,
                      const BinCodec& codec);

// Batched labeling; one row per query.
std::vector<SocsLabel> label_points(const PointMatrix& x_cam,
                                    const InstanceRecord& rec,
                                    const BinCodec& codec);

// Category bundle directory layout:
//   template.ply, template_keypoints.json, category.json,
//   instances/<id>/{shape.ply, keypoints.json, warp.json, pose.json}
struct CategoryBundle {
  CategoryTemplate tmpl;
  BinCodec codec;
  std::vector<InstanceRecord> instances;
};

void save_bundle(const std::string& dir, const CategoryBundle& bundle);
CategoryBundle load_bundle(const std::string& dir);

}  // namespace socs
