#include "socs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "socs/errors.hpp"
#include "socs/rng.hpp"
#include "socs/transforms.hpp"

namespace socs {

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;

// atan2 on (sin, cos) of the angle; acos((tr-1)/2) loses half the digits
// near zero angle, which matters at the 1e-6 degree scale.
double rotation_angle(const Mat3& q) {
  const Vec3 v(q(2, 1) - q(1, 2), q(0, 2) - q(2, 0), q(1, 0) - q(0, 1));
  return std::atan2(0.5 * v.norm(), 0.5 * (q.trace() - 1.0));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

}  // namespace

double rotation_error_deg(const Mat3& gt, const Mat3& pred) {
  return rotation_angle(gt.transpose() * pred) * kRadToDeg;
}

double rotation_error_deg(const Mat3& gt, const Mat3& pred,
                          const Vec3& symmetry_axis) {
  const double n = symmetry_axis.norm();
  if (!(n > 0.0)) throw DataError("symmetry axis must be nonzero");
  const Vec3 a = symmetry_axis / n;
  // The prediction is equivalent to pred * Rot(a, phi) for any phi, with the
  // axis expressed in the object frame. Relative rotation Q = gt^T * pred;
  // trace(Q * Rot(a, phi)) = c0 + c1 cos(phi) + c2 sin(phi) with
  //   Rot(a, phi) = a a^T + cos(phi) (I - a a^T) + sin(phi) [a]_x,
  // and the maximal trace (minimal angle) is c0 + sqrt(c1^2 + c2^2).
  const Mat3 q = gt.transpose() * pred;
  Mat3 skew;
  skew << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  const double c0 = a.dot(q * a);
  const double c1 = q.trace() - c0;
  const double c2 = (q * skew).trace();
  const double phi = std::atan2(c2, c1);
  const Mat3 residual = q * Eigen::AngleAxisd(phi, a).toRotationMatrix();
  return rotation_angle(residual) * kRadToDeg;
}

double translation_error(const EvalRecord& r) {
  return (r.pred_box.center - r.gt_box.center).norm();
}

double box_iou_3d(const OrientedBox& a, const OrientedBox& b, int mc_samples,
                  std::uint64_t seed) {
  if (mc_samples <= 0) throw ConfigError("mc_samples must be positive");
  const double vol_a = box_volume(a);
  const double vol_b = box_volume(b);
  if (!(vol_a > 0.0) || !(vol_b > 0.0)) {
    throw DataError("box_iou_3d requires boxes with positive volume");
  }
  Rng rng(derive_seed(seed, 0x696f7533ULL));
  long inside = 0;
  for (int i = 0; i < mc_samples; ++i) {
    const Vec3 local(rng.uniform(-a.half_extents.x(), a.half_extents.x()),
                     rng.uniform(-a.half_extents.y(), a.half_extents.y()),
                     rng.uniform(-a.half_extents.z(), a.half_extents.z()));
    const Vec3 p = a.center + a.rotation * local;
    if (box_contains(b, p)) ++inside;
  }
  const double inter = vol_a * double(inside) / double(mc_samples);
  const double denom = vol_a + vol_b - inter;
  return denom > 0.0 ? inter / denom : 0.0;
}

MetricsReport compile_report(const std::vector<EvalRecord>& records,
                             int mc_samples, std::uint64_t seed) {
  if (records.empty()) throw EmptyEval("compile_report: no records");
  MetricsReport rep;
  rep.count = long(records.size());
  std::vector<double> rots, trans;
  rots.reserve(records.size());
  trans.reserve(records.size());
  long iou50 = 0, iou75 = 0;
  long p52 = 0, p55 = 0, p102 = 0, p105 = 0, p5n = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const EvalRecord& r = records[i];
    const double rot =
        r.has_symmetry_axis
            ? rotation_error_deg(r.gt_pose.rigid.rotation,
                                 r.pred_pose.rigid.rotation, r.symmetry_axis)
            : rotation_error_deg(r.gt_pose.rigid.rotation,
                                 r.pred_pose.rigid.rotation);
    const double t = translation_error(r);
    const double iou = box_iou_3d(r.gt_box, r.pred_box, mc_samples,
                                  derive_seed(seed, std::uint64_t(i)));
    rots.push_back(rot);
    trans.push_back(t);
    if (iou >= 0.50) ++iou50;
    if (iou >= 0.75) ++iou75;
    if (rot < 5.0 && t < 0.02) ++p52;
    if (rot < 5.0 && t < 0.05) ++p55;
    if (rot < 10.0 && t < 0.02) ++p102;
    if (rot < 10.0 && t < 0.05) ++p105;
    const double diag = 2.0 * r.gt_box.half_extents.norm();
    const double t_norm = diag > 0.0 ? t / diag : t;
    if (rot < 5.0 && t_norm < 0.05) ++p5n;
  }
  const double n = double(records.size());
  rep.iou50 = double(iou50) / n;
  rep.iou75 = double(iou75) / n;
  rep.p_5deg_2cm = double(p52) / n;
  rep.p_5deg_5cm = double(p55) / n;
  rep.p_10deg_2cm = double(p102) / n;
  rep.p_10deg_5cm = double(p105) / n;
  rep.p_5deg_005 = double(p5n) / n;
  rep.rot_mean_deg = mean_of(rots);
  rep.rot_median_deg = median_of(rots);
  rep.trans_mean = mean_of(trans);
  rep.trans_median = median_of(trans);
  return rep;
}

Json to_json(const MetricsReport& r) {
  return Json{{"count", r.count},
              {"iou_50", r.iou50},
              {"iou_75", r.iou75},
              {"precision_5deg_2cm", r.p_5deg_2cm},
              {"precision_5deg_5cm", r.p_5deg_5cm},
              {"precision_10deg_2cm", r.p_10deg_2cm},
              {"precision_10deg_5cm", r.p_10deg_5cm},
              {"precision_5deg_005", r.p_5deg_005},
              {"rotation_mean_deg", r.rot_mean_deg},
              {"rotation_median_deg", r.rot_median_deg},
              {"translation_mean", r.trans_mean},
              {"translation_median", r.trans_median}};
}

void write_report_csv(const std::string& path, const MetricsReport& r) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path);
  out << "metric,value\n";
  const Json j = to_json(r);
  for (const auto& [key, value] : j.items()) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", value.get<double>());
    out << key << ',' << buf << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

void write_records_csv(const std::string& path,
                       const std::vector<EvalRecord>& records, int mc_samples,
                       std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path);
  out << "index,category,rotation_deg,translation,iou\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const EvalRecord& r = records[i];
    const double rot =
        r.has_symmetry_axis
            ? rotation_error_deg(r.gt_pose.rigid.rotation,
                                 r.pred_pose.rigid.rotation, r.symmetry_axis)
            : rotation_error_deg(r.gt_pose.rigid.rotation,
                                 r.pred_pose.rigid.rotation);
    const double t = translation_error(r);
    const double iou = box_iou_3d(r.gt_box, r.pred_box, mc_samples,
                                  derive_seed(seed, std::uint64_t(i)));
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g", rot, t, iou);
    out << i << ',' << r.category << ',' << buf << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace socs
