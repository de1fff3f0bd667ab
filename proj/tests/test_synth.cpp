#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "socs/rng.hpp"
#include "socs/synth.hpp"

using namespace socs;

namespace {

// Nearest input index for every rendered point; -1 when nothing is close.
int nearest_index(const PointMatrix& cloud, const Vec3& p, double tol) {
  int best = -1;
  double best_d = tol;
  for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
    const double d = (cloud.row(i).transpose() - p).norm();
    if (d < best_d) {
      best_d = d;
      best = int(i);
    }
  }
  return best;
}

PointCloud sphere_cloud(int n, double radius, std::uint64_t seed) {
  PointCloud pc;
  pc.points.resize(n, 3);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    v.normalize();
    pc.points.row(i) = (radius * v).transpose();
  }
  return pc;
}

}  // namespace

TEST_CASE("generation is deterministic and respects the keypoint budget") {
  const ShapeParams p = sample_params(Category::kLamp, 0.7, 123);
  const GeneratedInstance a = generate_instance(p, 512);
  const GeneratedInstance b = generate_instance(p, 512);
  CHECK(a.cloud.points == b.cloud.points);
  CHECK(a.keypoints.keypoints == b.keypoints.keypoints);
  CHECK(a.keypoints.size() == 32);

  const GeneratedInstance c = generate_instance(p, 512, 16);
  CHECK(c.keypoints.size() == 16);
  // Keypoint prefixes agree: same pool, same order.
  CHECK((a.keypoints.keypoints.topRows(16) - c.keypoints.keypoints)
            .cwiseAbs()
            .maxCoeff() < 1e-15);
}

TEST_CASE("every family produces normalized shapes with valid keypoints") {
  for (Category cat : {Category::kLamp, Category::kCamera, Category::kChair,
                       Category::kBox}) {
    const GeneratedInstance g =
        generate_instance(median_params(cat), 1024, 32);
    CHECK(g.cloud.points.cwiseAbs().maxCoeff() <= 0.5 + 1e-12);
    CHECK(g.cloud.all_finite());
    g.keypoints.validate();
    CHECK(landmark_pool(median_params(cat)).size() >= 64);
    // Raw positions reconstruct through the recorded normalization.
    CHECK(g.norm_scale > 0.0);
  }
}

TEST_CASE("keypoints stay on the same named part across instances") {
  const GeneratedInstance a =
      generate_instance(sample_params(Category::kLamp, 1.0, 5), 256, 32);
  const GeneratedInstance b =
      generate_instance(sample_params(Category::kLamp, 1.0, 99), 256, 32);
  REQUIRE(a.keypoint_parts.size() == 32);
  REQUIRE(b.keypoint_parts.size() == 32);
  CHECK(a.keypoint_parts == b.keypoint_parts);
}

TEST_CASE("parameters outside their documented bounds are rejected") {
  ShapeParams p = median_params(Category::kLamp);
  const auto& specs = param_specs(Category::kLamp);
  p.values.at("stem_height") = 10.0 * specs.front().hi + 100.0;
  CHECK_THROWS_AS(p.validate(), InvalidParams);

  ShapeParams missing = median_params(Category::kLamp);
  missing.values.erase("stem_height");
  CHECK_THROWS_AS(missing.validate(), InvalidParams);

  Rng rng(41);
  for (int i = 0; i < 50; ++i)
    sample_params(Category::kChair, rng.uniform(), rng.next()).validate();
}

TEST_CASE("stem-tip landmark follows the stem height in closed form") {
  double sh_lo = 0, sh_hi = 0, bh = 0;
  for (const ParamSpec& s : param_specs(Category::kLamp)) {
    if (s.name == "stem_height") {
      sh_lo = s.lo;
      sh_hi = s.hi;
    }
  }
  REQUIRE(sh_hi > 2.0 * sh_lo);

  ShapeParams p1 = median_params(Category::kLamp);
  const double h1 = std::max(sh_lo, 0.45 * sh_hi);
  p1.values.at("stem_height") = h1;
  ShapeParams p2 = p1;
  p2.values.at("stem_height") = 2.0 * h1;
  bh = p1.at("base_height");

  for (const ShapeParams& p : {p1, p2}) {
    const GeneratedInstance g = generate_instance(p, 256, 32);
    const std::vector<Landmark> pool = landmark_pool(p);
    int stem_top = -1;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (pool[i].name == "stem_top") stem_top = int(i);
    REQUIRE(stem_top >= 0);
    REQUIRE(stem_top < 32);
    // De-normalize the keypoint and compare with base + stem height.
    const Vec3 raw =
        g.norm_scale * Vec3(g.keypoints.keypoints.row(stem_top)) +
        g.norm_center;
    CHECK(raw.z() ==
          doctest::Approx(p.at("base_height") + p.at("stem_height"))
              .epsilon(1e-9));
  }
  (void)bh;
}

TEST_CASE("a pixel-spaced plane renders fully visible") {
  // One grid point per pixel: 30x30 plane at z=1, spacing 3 pixels.
  PointCloud plane;
  plane.points.resize(900, 3);
  int idx = 0;
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 30; ++j)
      plane.points.row(idx++) << -0.435 + 0.03 * i, -0.435 + 0.03 * j, 1.0;

  ViewSpec view;
  view.n_output = 900;
  AnisoSimilarity id;
  const PointCloud got = render_partial(plane, view, id);
  REQUIRE(got.points.rows() == 900);
  std::set<int> seen;
  for (Eigen::Index i = 0; i < got.points.rows(); ++i) {
    const int src = nearest_index(plane.points, got.points.row(i), 1e-9);
    REQUIRE(src >= 0);
    seen.insert(src);
  }
  CHECK(double(seen.size()) >= 0.99 * 900);
}

TEST_CASE("z-buffer visibility keeps the near hemisphere at coarse resolution") {
  // Point visibility is resolution-relative: when several samples land in one
  // pixel the depth buffer keeps the nearest, so back faces are buried; when
  // every sample owns a pixel, nothing is culled.
  const int n = 800;
  const double radius = 0.5, dist = 12.0;
  PointCloud sphere = sphere_cloud(n, radius, 42);
  AnisoSimilarity pose;
  pose.rigid.translation = Vec3(0, 0, dist);
  const PointMatrix cam = sphere.points.rowwise() + Vec3(0, 0, dist).transpose();

  // Coarse raster: the sphere covers a handful of pixels, each holding many
  // samples from both hemispheres, so every winner faces the camera.
  ViewSpec coarse;
  coarse.resolution_x = 64;
  coarse.resolution_y = 64;
  coarse.n_output = 256;
  const PointCloud near_side = render_partial(sphere, coarse, pose);
  REQUIRE(near_side.points.rows() == 256);
  double mean_facing = 0.0;
  for (Eigen::Index i = 0; i < near_side.points.rows(); ++i) {
    // Facing = outward normal against the viewing ray: -1 dead-on, +1 back.
    const Vec3 p = near_side.points.row(i);
    const Vec3 normal = (p - Vec3(0, 0, dist)) / radius;
    const double facing = normal.dot(p.normalized());
    CHECK(facing < 0.12);  // slack for grazing winners at the silhouette rim
    mean_facing += facing;
  }
  CHECK(mean_facing / double(near_side.points.rows()) < -0.35);

  // Fine raster: one pixel per sample, so both hemispheres survive and the
  // resample draws distinct survivors.
  ViewSpec fine;
  fine.resolution_x = 2048;
  fine.resolution_y = 2048;
  fine.n_output = 512;
  const PointCloud full = render_partial(sphere, fine, pose);
  REQUIRE(full.points.rows() == 512);
  std::set<int> seen;
  int far_side = 0;
  for (Eigen::Index i = 0; i < full.points.rows(); ++i) {
    const int src = nearest_index(cam, full.points.row(i), 1e-9);
    REQUIRE(src >= 0);  // outputs are copies of inputs when noise is off
    seen.insert(src);
    if (sphere.points(src, 2) > 0.0) ++far_side;
  }
  CHECK(int(seen.size()) == 512);  // enough survivors: drawn w/o replacement
  CHECK(far_side > 150);           // the far hemisphere is present in force
}

TEST_CASE("rendered views resample to the requested size") {
  const GeneratedInstance g =
      generate_instance(median_params(Category::kLamp), 4096, 32);
  AnisoSimilarity pose;
  pose.rigid = random_rigid(7, 0.1);
  pose.rigid.translation.z() += 2.0;
  ViewSpec view;
  const PointCloud got = render_partial(g.cloud, view, pose);
  CHECK(got.points.rows() == 1024);

  ViewSpec small = view;
  small.n_output = 64;
  CHECK(render_partial(g.cloud, small, pose).points.rows() == 64);
}

TEST_CASE("views with nothing on screen raise an empty-view error") {
  PointCloud behind;
  behind.points.resize(10, 3);
  behind.points.setRandom();
  behind.points.col(2).array() -= 5.0;  // all z < 0
  ViewSpec view;
  AnisoSimilarity id;
  CHECK_THROWS_AS(render_partial(behind, view, id), EmptyView);
}

TEST_CASE("the occluder removes a visible strip") {
  const GeneratedInstance g =
      generate_instance(median_params(Category::kLamp), 4096, 32);
  AnisoSimilarity pose;
  pose.rigid.translation = Vec3(0, 0, 2.5);

  auto unique_visible = [&](double fraction) {
    ViewSpec view;
    view.occluder_fraction = fraction;
    view.n_output = 2048;
    const PointCloud got = render_partial(g.cloud, view, pose);
    const PointMatrix cam =
        g.cloud.points.rowwise() + Vec3(0, 0, 2.5).transpose();
    std::set<int> seen;
    for (Eigen::Index i = 0; i < got.points.rows(); ++i)
      seen.insert(nearest_index(cam, got.points.row(i), 1e-9));
    return double(seen.size());
  };

  const double full = unique_visible(0.0);
  const double half = unique_visible(0.5);
  CHECK(half < 0.75 * full);
  CHECK(half > 0.05 * full);
}

TEST_CASE("chamfer distance recovers a known plane offset") {
  // Plane normal to x, offset along x: every nearest distance is delta.
  const double delta = 0.07;
  PointCloud plane;
  plane.points.resize(2000, 3);
  Rng rng(43);
  for (int i = 0; i < 2000; ++i)
    plane.points.row(i) << 0.0, rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5);
  PointCloud moved = plane;
  moved.points.col(0).array() += delta;

  const double d = chamfer_distance(plane.points, moved.points);
  CHECK(d == doctest::Approx(delta).epsilon(0.05));
  CHECK(variation_degree({moved}, plane) ==
        doctest::Approx(delta).epsilon(0.05));
  CHECK(variation_degree({plane}, plane) == 0.0);
}

TEST_CASE("wider parameter spread increases the variation degree") {
  const GeneratedInstance tmpl =
      generate_instance(median_params(Category::kLamp), 1024, 32);
  double prev = -1.0;
  for (double spread : {0.2, 0.5, 1.0}) {
    std::vector<PointCloud> instances;
    for (int k = 0; k < 8; ++k)
      instances.push_back(
          generate_instance(sample_params(Category::kLamp, spread, 500 + k),
                            1024, 32)
              .cloud);
    const double deg = variation_degree(instances, tmpl.cloud);
    CHECK(deg > prev);
    prev = deg;
  }
}
