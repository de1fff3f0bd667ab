#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "socs/metrics.hpp"
#include "socs/rng.hpp"
#include "socs/transforms.hpp"

using namespace socs;

namespace {

Mat3 rot_about(const Vec3& axis, double degrees) {
  return Eigen::AngleAxisd(degrees * M_PI / 180.0, axis.normalized())
      .toRotationMatrix();
}

OrientedBox unit_box(const Vec3& center) {
  OrientedBox b;
  b.center = center;
  b.rotation = Mat3::Identity();
  b.half_extents = Vec3::Constant(0.5);
  return b;
}

OrientedBox random_box(Rng& rng, std::uint64_t seed) {
  OrientedBox b;
  b.center = Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                  rng.uniform(-0.5, 0.5));
  b.rotation = random_rigid(seed, 0.0).rotation;
  b.half_extents = Vec3(rng.uniform(0.2, 0.6), rng.uniform(0.2, 0.6),
                        rng.uniform(0.2, 0.6));
  return b;
}

// Discrete sweep over the symmetry circle; an upper bound on the true
// minimum that the closed form must match to within the sweep resolution.
double sweep_min_deg(const Mat3& gt, const Mat3& pred, const Vec3& axis,
                     int steps = 3600) {
  double best = 1e9;
  for (int i = 0; i < steps; ++i) {
    const double phi = 360.0 * double(i) / double(steps);
    best = std::min(best, rotation_error_deg(gt, pred * rot_about(axis, phi)));
  }
  return best;
}

EvalRecord make_record(double rot_deg, double trans) {
  EvalRecord r;
  r.gt_pose.rigid = make_rigid(Mat3::Identity(), Vec3::Zero());
  r.gt_pose.scale = Vec3::Ones();
  r.pred_pose.rigid =
      make_rigid(rot_about(Vec3::UnitZ(), rot_deg), Vec3::Zero());
  r.pred_pose.scale = Vec3::Ones();
  r.gt_box = unit_box(Vec3::Zero());
  r.pred_box = unit_box(Vec3(trans, 0.0, 0.0));
  r.category = "lamp";
  return r;
}

}  // namespace

TEST_CASE("rotation distance reproduces known angles") {
  CHECK(rotation_error_deg(Mat3::Identity(), Mat3::Identity()) == 0.0);
  CHECK(std::abs(rotation_error_deg(Mat3::Identity(),
                                    rot_about(Vec3::UnitZ(), 10.0)) -
                 10.0) < 1e-9);
  CHECK(std::abs(rotation_error_deg(Mat3::Identity(),
                                    rot_about(Vec3::UnitX(), 180.0)) -
                 180.0) < 1e-9);
  // Composition with the gt on both sides leaves the distance unchanged.
  const Mat3 g = rot_about(Vec3(1, 2, 3), 37.0);
  CHECK(std::abs(rotation_error_deg(g, g * rot_about(Vec3::UnitY(), 25.0)) -
                 25.0) < 1e-9);
  // Always within [0, 180], no NaN even at the antipode.
  for (std::uint64_t t = 0; t < 100; ++t) {
    const Mat3 a = random_rigid(derive_seed(10, t), 0.0).rotation;
    const Mat3 b = random_rigid(derive_seed(11, t), 0.0).rotation;
    const double d = rotation_error_deg(a, b);
    CHECK(std::isfinite(d));
    CHECK(d >= 0.0);
    CHECK(d <= 180.0);
    CHECK(std::abs(rotation_error_deg(b, a) - d) < 1e-9);
  }
}

TEST_CASE("yaw about the symmetry axis costs nothing") {
  const Vec3 axis = Vec3::UnitZ();
  const Mat3 base = rot_about(Vec3(0.3, -1.0, 0.4), 52.0);
  for (double phi : {0.0, 15.0, 90.0, 179.0, 311.0}) {
    const Mat3 pred = base * rot_about(axis, phi);
    CHECK(rotation_error_deg(base, pred, axis) < 1e-6);
    // A tilted axis does not excuse the yaw.
    if (phi > 1.0)
      CHECK(rotation_error_deg(base, pred, Vec3::UnitX()) > 1.0);
  }
  CHECK_THROWS_AS(
      rotation_error_deg(base, base, Vec3::Zero()), DataError);
}

TEST_CASE("closed-form symmetry minimum matches a brute-force sweep") {
  for (std::uint64_t t = 0; t < 25; ++t) {
    Rng rng(derive_seed(20, t));
    const Mat3 gt = random_rigid(derive_seed(21, t), 0.0).rotation;
    const Mat3 pred = random_rigid(derive_seed(22, t), 0.0).rotation;
    const Vec3 axis = Vec3(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                           rng.uniform(-1.0, 1.0) + 2.0)
                          .normalized();
    const double closed = rotation_error_deg(gt, pred, axis);
    const double sweep = sweep_min_deg(gt, pred, axis);
    CHECK(closed <= sweep + 1e-9);         // continuous min under discrete min
    CHECK(sweep - closed <= 0.1);          // within the sweep's resolution
    CHECK(closed <= rotation_error_deg(gt, pred) + 1e-9);
  }
}

TEST_CASE("volume overlap handles the textbook configurations") {
  const OrientedBox a = unit_box(Vec3::Zero());
  CHECK(box_iou_3d(a, a) == 1.0);
  CHECK(box_iou_3d(a, unit_box(Vec3(10, 0, 0))) == 0.0);
  // Unit cubes offset by half an edge share half their volume: IoU 1/3.
  const double third = box_iou_3d(a, unit_box(Vec3(0.5, 0.0, 0.0)));
  CHECK(std::abs(third - 1.0 / 3.0) < 0.01);
  // A square footprint turned a quarter is the same box.
  OrientedBox sq = a;
  sq.half_extents = Vec3(0.3, 0.3, 0.5);
  OrientedBox sq_turned = sq;
  sq_turned.rotation = rot_about(Vec3::UnitZ(), 90.0);
  CHECK(box_iou_3d(sq, sq_turned) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("volume overlap is near-symmetric and seed-stable") {
  for (std::uint64_t t = 0; t < 5; ++t) {
    Rng rng(derive_seed(30, t));
    const OrientedBox a = random_box(rng, derive_seed(31, t));
    const OrientedBox b = random_box(rng, derive_seed(32, t));
    const double ab = box_iou_3d(a, b, 200000, 9);
    const double ba = box_iou_3d(b, a, 200000, 9);
    CHECK(std::abs(ab - ba) <= 0.01);
    CHECK(box_iou_3d(a, b, 200000, 9) == ab);  // bitwise repeatable
    CHECK(std::abs(box_iou_3d(a, b, 200000, 10) - ab) <= 0.01);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
  }
  const OrientedBox a = unit_box(Vec3::Zero());
  CHECK_THROWS_AS(box_iou_3d(a, a, 0), ConfigError);
  OrientedBox flat = a;
  flat.half_extents.z() = 0.0;
  CHECK_THROWS_AS(box_iou_3d(a, flat), DataError);
}

TEST_CASE("perfect detections score perfectly") {
  std::vector<EvalRecord> records(4, make_record(0.0, 0.0));
  const MetricsReport rep = compile_report(records, 20000, 1);
  CHECK(rep.count == 4);
  CHECK(rep.iou50 == 1.0);
  CHECK(rep.iou75 == 1.0);
  CHECK(rep.p_5deg_2cm == 1.0);
  CHECK(rep.p_10deg_5cm == 1.0);
  CHECK(rep.p_5deg_005 == 1.0);
  CHECK(rep.rot_mean_deg == 0.0);
  CHECK(rep.trans_median == 0.0);
}

TEST_CASE("a 6-degree 1-cm error lands in the wide bucket only") {
  const std::vector<EvalRecord> records{make_record(6.0, 0.01)};
  const MetricsReport rep = compile_report(records, 20000, 1);
  CHECK(rep.p_5deg_2cm == 0.0);
  CHECK(rep.p_5deg_5cm == 0.0);
  CHECK(rep.p_10deg_2cm == 1.0);
  CHECK(rep.p_10deg_5cm == 1.0);
}

TEST_CASE("a ten-record report matches the spreadsheet") {
  // rot(deg), trans(m) pairs; unit boxes offset by trans along x, so the
  // overlap is (1-d)/(1+d) for d < 1 and zero beyond.
  const double rows[10][2] = {{0, 0},    {3, 0.01}, {4, 0.04},  {6, 0.01},
                              {6, 0.04}, {12, 0.01}, {2, 0.10}, {8, 0.30},
                              {90, 0.80}, {170, 1.50}};
  std::vector<EvalRecord> records;
  for (const auto& r : rows) records.push_back(make_record(r[0], r[1]));
  const MetricsReport rep = compile_report(records, 200000, 3);

  CHECK(rep.count == 10);
  CHECK(rep.p_5deg_2cm == 0.2);   // (0,0), (3,0.01)
  CHECK(rep.p_5deg_5cm == 0.3);   // + (4,0.04)
  CHECK(rep.p_10deg_2cm == 0.3);  // (0,0), (3,0.01), (6,0.01)
  CHECK(rep.p_10deg_5cm == 0.5);  // + (4,0.04), (6,0.04)
  // Unit cube diagonal is sqrt(3); 5% of it is ~0.0866 meters.
  CHECK(rep.p_5deg_005 == 0.3);   // (0,0), (3,0.01), (4,0.04)
  CHECK(rep.iou50 == 0.8);        // all but d=0.8 (0.11) and d=1.5 (0)
  CHECK(rep.iou75 == 0.7);        // d <= 0.10 keep at least 0.81
  CHECK(std::abs(rep.rot_mean_deg - 30.1) < 1e-9);
  CHECK(std::abs(rep.rot_median_deg - 6.0) < 1e-9);
  CHECK(std::abs(rep.trans_mean - 0.281) < 1e-12);
  CHECK(std::abs(rep.trans_median - 0.04) < 1e-12);

  // Same records, same seed: bitwise identical report.
  const MetricsReport again = compile_report(records, 200000, 3);
  CHECK(again.iou50 == rep.iou50);
  CHECK(again.rot_mean_deg == rep.rot_mean_deg);
}

TEST_CASE("precision buckets nest by construction") {
  std::vector<EvalRecord> records;
  Rng rng(40);
  for (std::uint64_t t = 0; t < 50; ++t)
    records.push_back(
        make_record(rng.uniform(0.0, 15.0), rng.uniform(0.0, 0.08)));
  const MetricsReport rep = compile_report(records, 2000, 7);
  CHECK(rep.p_5deg_2cm <= rep.p_5deg_5cm);
  CHECK(rep.p_5deg_5cm <= rep.p_10deg_5cm);
  CHECK(rep.p_5deg_2cm <= rep.p_10deg_2cm);
  CHECK(rep.p_10deg_2cm <= rep.p_10deg_5cm);
}

TEST_CASE("the symmetry flag forgives yaw inside the report") {
  EvalRecord r = make_record(40.0, 0.0);
  r.has_symmetry_axis = true;
  r.symmetry_axis = Vec3::UnitZ();
  const MetricsReport rep = compile_report({r}, 20000, 1);
  CHECK(rep.rot_mean_deg < 1e-6);
  CHECK(rep.p_5deg_2cm == 1.0);
}

TEST_CASE("empty evaluations refuse to fabricate a report") {
  CHECK_THROWS_AS(compile_report({}, 1000, 0), EmptyEval);
}

TEST_CASE("reports serialize to JSON and CSV faithfully") {
  const std::vector<EvalRecord> records{make_record(6.0, 0.01),
                                        make_record(2.0, 0.0)};
  const MetricsReport rep = compile_report(records, 20000, 5);
  const Json j = to_json(rep);
  CHECK(j.at("count").get<long>() == 2);
  CHECK(j.at("precision_10deg_2cm").get<double>() == rep.p_10deg_2cm);
  CHECK(j.at("rotation_mean_deg").get<double>() == rep.rot_mean_deg);
  CHECK(j.at("translation_median").get<double>() == rep.trans_median);
  CHECK(j.at("iou_50").get<double>() == rep.iou50);

  namespace fs = std::filesystem;
  const std::string dir = "/tmp/socs_test_metrics";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_report_csv(dir + "/report.csv", rep);
  std::ifstream in(dir + "/report.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "metric,value");
  int rows = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == int(j.size()));

  write_records_csv(dir + "/records.csv", records, 20000, 5);
  std::ifstream rin(dir + "/records.csv");
  std::getline(rin, header);
  CHECK(header == "index,category,rotation_deg,translation,iou");
  rows = 0;
  for (std::string line; std::getline(rin, line);) {
    if (line.empty()) continue;
    ++rows;
    CHECK(line.find("lamp") != std::string::npos);
  }
  CHECK(rows == 2);
  fs::remove_all(dir);
}
