#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "socs/io.hpp"
#include "socs/types.hpp"

namespace socs {

struct EvalRecord {
  AnisoSimilarity gt_pose;
  AnisoSimilarity pred_pose;
  OrientedBox gt_box;
  OrientedBox pred_box;
  std::string category;
  bool has_symmetry_axis = false;
  Vec3 symmetry_axis = Vec3::UnitZ();  // object frame
};

struct MetricsReport {
  double iou50 = 0.0;
  double iou75 = 0.0;
  double p_5deg_2cm = 0.0;
  double p_5deg_5cm = 0.0;
  double p_10deg_2cm = 0.0;
  double p_10deg_5cm = 0.0;
  double rot_mean_deg = 0.0;
  double rot_median_deg = 0.0;
  double trans_mean = 0.0;    // meters
  double trans_median = 0.0;  // meters
  double p_5deg_005 = 0.0;    // translation normalized by gt box diagonal
  long count = 0;
};

// Geodesic rotation distance in degrees. With a symmetry axis, the minimum
// over all rotations of the prediction about that axis, in closed form:
// trace(Q·Rot(a,phi)) = c0 + c1 cos(phi) + c2 sin(phi) peaks at
// c0 + sqrt(c1^2 + c2^2).
double rotation_error_deg(const Mat3& gt, const Mat3& pred);
double rotation_error_deg(const Mat3& gt, const Mat3& pred,
                          const Vec3& symmetry_axis);

// Euclidean distance between box centers, meters.
double translation_error(const EvalRecord& r);

// Monte-Carlo IoU: uniform samples in box a against membership in b.
// Deterministic for a given seed; standard error at the default sample
// count is at most ~0.004 near IoU 0.5.
double box_iou_3d(const OrientedBox& a, const OrientedBox& b,
                  int mc_samples = 200000, std::uint64_t seed = 0);

// Aggregates precision/err statistics; throws EmptyEval on no records.
MetricsReport compile_report(const std::vector<EvalRecord>& records,
                             int mc_samples = 200000, std::uint64_t seed = 0);

Json to_json(const MetricsReport& r);
void write_report_csv(const std::string& path, const MetricsReport& r);
// One row per record: rotation/translation errors and IoU, for plotting.
void write_records_csv(const std::string& path,
                       const std::vector<EvalRecord>& records,
                       int mc_samples = 200000, std::uint64_t seed = 0);

}  // namespace socs
