#include "socs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "socs/rng.hpp"

namespace socs {
namespace {

constexpr double kPi = 3.14159265358979323846;

struct Surface {
  double area = 0.0;
  std::function<Vec3(Rng&)> draw;
};

Vec3 ring_point(const Vec3& center, double r, double angle_deg) {
  const double a = angle_deg * kPi / 180.0;
  return center + Vec3(r * std::cos(a), r * std::sin(a), 0.0);
}

void add_box_faces(std::vector<Surface>& out, const Vec3& c, const Vec3& h) {
  // axis: 0 = +-x faces, 1 = +-y, 2 = +-z
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    const double area = 4.0 * h(u) * h(v);
    for (int sign : {-1, 1}) {
      out.push_back({area, [c, h, axis, u, v, sign](Rng& rng) {
                       Vec3 p = c;
                       p(axis) += sign * h(axis);
                       p(u) += rng.uniform(-h(u), h(u));
                       p(v) += rng.uniform(-h(v), h(v));
                       return p;
                     }});
    }
  }
}

void add_cylinder_side(std::vector<Surface>& out, double cx, double cy,
                       double z0, double z1, double r) {
  out.push_back({2.0 * kPi * r * (z1 - z0), [=](Rng& rng) {
                   const double a = rng.uniform(0.0, 2.0 * kPi);
                   return Vec3(cx + r * std::cos(a), cy + r * std::sin(a),
                               rng.uniform(z0, z1));
                 }});
}

void add_disk(std::vector<Surface>& out, double cx, double cy, double z,
              double r0, double r1) {
  out.push_back({kPi * (r1 * r1 - r0 * r0), [=](Rng& rng) {
                   const double r =
                       std::sqrt(rng.uniform(r0 * r0, r1 * r1));
                   const double a = rng.uniform(0.0, 2.0 * kPi);
                   return Vec3(cx + r * std::cos(a), cy + r * std::sin(a), z);
                 }});
}

// Lateral surface of a (possibly tilted) cone frustum; the length element
// along the axis is treated as constant, so the radius alone weights t.
void add_frustum_side(std::vector<Surface>& out, const Vec3& c0,
                      const Vec3& c1, double r0, double r1) {
  const double slant =
      std::sqrt((c1 - c0).squaredNorm() + (r1 - r0) * (r1 - r0));
  out.push_back({kPi * (r0 + r1) * slant, [=](Rng& rng) {
                   const double u = rng.uniform();
                   double t;
                   if (std::abs(r1 - r0) < 1e-12) {
                     t = u;
                   } else {
                     t = (-r0 + std::sqrt(r0 * r0 + u * (r1 * r1 - r0 * r0))) /
                         (r1 - r0);
                   }
                   const double r = r0 + (r1 - r0) * t;
                   const double a = rng.uniform(0.0, 2.0 * kPi);
                   const Vec3 c = c0 + t * (c1 - c0);
                   return Vec3(c.x() + r * std::cos(a), c.y() + r * std::sin(a),
                               c.z());
                 }});
}

// ---- Lamp ----
// Base cylinder on the ground, stem, open conical shade whose axis is
// offset along +x; the offset breaks rotational symmetry so yaw is
// observable from geometry alone.

struct LampDims {
  double br, bh, sr, sh, shr, rt, shh, off;
  double z_junction, z_stem_top, z_apex;
};

LampDims lamp_dims(const ShapeParams& p) {
  LampDims d;
  d.br = p.at("base_radius");
  d.bh = p.at("base_height");
  d.sr = p.at("stem_radius");
  d.sh = p.at("stem_height");
  d.shr = p.at("shade_radius");
  d.rt = p.at("shade_top_ratio") * d.shr;
  d.shh = p.at("shade_height");
  d.off = 0.35 * d.shr;
  d.z_junction = d.bh;
  d.z_stem_top = d.bh + d.sh;
  d.z_apex = d.z_stem_top + d.shh;
  return d;
}

std::vector<Landmark> lamp_pool(const ShapeParams& p) {
  const LampDims d = lamp_dims(p);
  const Vec3 base_c(0, 0, 0);
  const Vec3 shade_b(d.off, 0, d.z_stem_top);
  const Vec3 shade_t(d.off, 0, d.z_apex);
  const Vec3 stem_b(0, 0, d.z_junction);

  std::vector<Landmark> pool;
  auto add = [&](const std::string& name, const std::string& part,
                 const Vec3& pos) { pool.push_back({name, part, pos}); };
  auto stem_at = [&](double frac, double angle_deg) {
    return ring_point(Vec3(0, 0, d.z_junction + frac * d.sh), d.sr, angle_deg);
  };

  add("base_bottom_center", "base", base_c);
  add("stem_top", "stem", {0, 0, d.z_stem_top});
  add("shade_rim_bottom_0", "shade", ring_point(shade_b, d.shr, 0));
  add("shade_rim_bottom_90", "shade", ring_point(shade_b, d.shr, 90));
  add("base_rim_180", "base", ring_point(base_c, d.br, 180));
  add("base_rim_270", "base", ring_point(base_c, d.br, 270));
  add("shade_top_center", "shade", shade_t);
  add("stem_mid", "stem", stem_at(0.5, 0));
  for (double a : {0.0, 90.0, 180.0, 270.0})
    add("shade_rim_top_" + std::to_string(int(a)), "shade",
        ring_point(shade_t, d.rt, a));
  add("base_rim_0", "base", ring_point(base_c, d.br, 0));
  add("base_rim_90", "base", ring_point(base_c, d.br, 90));
  add("shade_rim_bottom_180", "shade", ring_point(shade_b, d.shr, 180));
  add("shade_rim_bottom_270", "shade", ring_point(shade_b, d.shr, 270));
  add("base_stem_junction", "base", stem_b);
  add("stem_quarter", "stem", stem_at(0.25, 0));
  add("stem_threequarter", "stem", stem_at(0.75, 0));
  add("shade_side_mid_0", "shade",
      ring_point(0.5 * (shade_b + shade_t), 0.5 * (d.shr + d.rt), 0));
  for (double a : {45.0, 135.0, 225.0, 315.0})
    add("shade_rim_top_" + std::to_string(int(a)), "shade",
        ring_point(shade_t, d.rt, a));
  for (double a : {45.0, 135.0, 225.0, 315.0})
    add("shade_rim_bottom_" + std::to_string(int(a)), "shade",
        ring_point(shade_b, d.shr, a));
  for (double a : {45.0, 135.0, 225.0, 315.0})
    add("base_rim_" + std::to_string(int(a)), "base",
        ring_point(base_c, d.br, a));
  for (int k = 0; k < 8; ++k)
    add("base_rim_d" + std::to_string(k), "base",
        ring_point(base_c, d.br, 22.5 + 45.0 * k));
  for (int k = 0; k < 8; ++k)
    add("shade_rim_bottom_d" + std::to_string(k), "shade",
        ring_point(shade_b, d.shr, 22.5 + 45.0 * k));
  for (int k = 0; k < 8; ++k)
    add("shade_rim_top_d" + std::to_string(k), "shade",
        ring_point(shade_t, d.rt, 22.5 + 45.0 * k));
  for (double a : {90.0, 180.0, 270.0})
    add("stem_mid_" + std::to_string(int(a)), "stem", stem_at(0.5, a));
  for (double f : {0.125, 0.375, 0.625, 0.875})
    add("stem_f" + std::to_string(int(f * 1000)), "stem", stem_at(f, 0));
  add("base_top_rim_0", "base", ring_point({0, 0, d.bh}, d.br, 0));
  return pool;
}

std::vector<Surface> lamp_surfaces(const ShapeParams& p) {
  const LampDims d = lamp_dims(p);
  std::vector<Surface> s;
  add_cylinder_side(s, 0, 0, 0, d.bh, d.br);
  add_disk(s, 0, 0, 0, 0, d.br);
  add_disk(s, 0, 0, d.bh, d.sr, d.br);
  add_cylinder_side(s, 0, 0, d.z_junction, d.z_stem_top, d.sr);
  add_frustum_side(s, {d.off, 0, d.z_stem_top}, {d.off, 0, d.z_apex}, d.shr,
                   d.rt);
  return s;
}

// ---- Camera ----
// Body box, lens barrel along +y, viewfinder block on the top-left-rear
// corner. The finder kills the two-fold rotation the body+lens pair has
// about the lens axis.

struct CameraDims {
  double W, D, H, lr, ll, fh, fw, fd, fx, fy;
};

CameraDims camera_dims(const ShapeParams& p) {
  CameraDims d;
  d.W = p.at("body_width");
  d.D = p.at("body_depth");
  d.H = p.at("body_height");
  d.lr = p.at("lens_radius");
  d.ll = p.at("lens_length");
  d.fh = 0.25 * d.H;
  d.fw = 0.2 * d.W;
  d.fd = 0.2 * d.D;
  d.fx = -0.25 * d.W;
  d.fy = -0.25 * d.D;
  return d;
}

std::vector<Landmark> camera_pool(const ShapeParams& p) {
  const CameraDims d = camera_dims(p);
  const double yF = d.D / 2 + d.ll;  // lens front plane
  std::vector<Landmark> pool;
  auto add = [&](const std::string& name, const std::string& part,
                 const Vec3& pos) { pool.push_back({name, part, pos}); };
  auto corner = [&](int sx, int sy, int sz) {
    return Vec3(sx * d.W / 2, sy * d.D / 2, sz * d.H / 2);
  };
  auto lens_rim = [&](double y, double angle_deg) {
    const double a = angle_deg * kPi / 180.0;
    return Vec3(d.lr * std::cos(a), y, d.lr * std::sin(a));
  };

  add("lens_front_center", "lens", {0, yF, 0});
  add("body_corner_mmm", "body", corner(-1, -1, -1));
  add("body_corner_ppm", "body", corner(1, 1, -1));
  add("body_corner_mpp", "body", corner(-1, 1, 1));
  add("finder_top_center", "finder", {d.fx, d.fy, d.H / 2 + d.fh});
  add("body_corner_pmp", "body", corner(1, -1, 1));
  add("body_corner_ppp", "body", corner(1, 1, 1));
  add("body_corner_mmp", "body", corner(-1, -1, 1));
  add("body_corner_pmm", "body", corner(1, -1, -1));
  add("body_corner_mpm", "body", corner(-1, 1, -1));
  for (double a : {0.0, 90.0, 180.0, 270.0})
    add("lens_rim_front_" + std::to_string(int(a)), "lens", lens_rim(yF, a));
  for (double a : {0.0, 90.0, 180.0, 270.0})
    add("lens_rim_base_" + std::to_string(int(a)), "lens",
        lens_rim(d.D / 2, a));
  add("lens_base_center", "lens", {0, d.D / 2, 0});
  add("face_center_back", "body", {0, -d.D / 2, 0});
  add("face_center_top", "body", {0, 0, d.H / 2});
  add("face_center_bottom", "body", {0, 0, -d.H / 2});
  add("face_center_left", "body", {-d.W / 2, 0, 0});
  add("face_center_right", "body", {d.W / 2, 0, 0});
  int fi = 0;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      add("finder_top_corner_" + std::to_string(fi++), "finder",
          Vec3(d.fx + sx * d.fw / 2, d.fy + sy * d.fd / 2, d.H / 2 + d.fh));
  add("top_edge_front", "body", {0, d.D / 2, d.H / 2});
  add("top_edge_back", "body", {0, -d.D / 2, d.H / 2});
  add("top_edge_left", "body", {-d.W / 2, 0, d.H / 2});
  add("top_edge_right", "body", {d.W / 2, 0, d.H / 2});
  for (double a : {45.0, 135.0, 225.0, 315.0})
    add("lens_rim_front_" + std::to_string(int(a)), "lens", lens_rim(yF, a));
  for (double a : {45.0, 135.0, 225.0, 315.0})
    add("lens_rim_base_" + std::to_string(int(a)), "lens",
        lens_rim(d.D / 2, a));
  add("bottom_edge_front", "body", {0, d.D / 2, -d.H / 2});
  add("bottom_edge_back", "body", {0, -d.D / 2, -d.H / 2});
  add("bottom_edge_left", "body", {-d.W / 2, 0, -d.H / 2});
  add("bottom_edge_right", "body", {d.W / 2, 0, -d.H / 2});
  int vi = 0;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      add("vert_edge_" + std::to_string(vi++), "body",
          Vec3(sx * d.W / 2, sy * d.D / 2, 0));
  fi = 0;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      add("finder_base_corner_" + std::to_string(fi++), "finder",
          Vec3(d.fx + sx * d.fw / 2, d.fy + sy * d.fd / 2, d.H / 2));
  for (double a : {0.0, 90.0, 180.0, 270.0})
    add("lens_rim_mid_" + std::to_string(int(a)), "lens",
        lens_rim(d.D / 2 + d.ll / 2, a));
  int qi = 0;
  for (int sx : {-1, 1})
    for (int sz : {-1, 1})
      add("front_quarter_" + std::to_string(qi++), "body",
          Vec3(sx * d.W / 4, d.D / 2, sz * d.H / 4));
  qi = 0;
  for (int sx : {-1, 1})
    for (int sz : {-1, 1})
      add("back_quarter_" + std::to_string(qi++), "body",
          Vec3(sx * d.W / 4, -d.D / 2, sz * d.H / 4));
  return pool;
}

std::vector<Surface> camera_surfaces(const ShapeParams& p) {
  const CameraDims d = camera_dims(p);
  std::vector<Surface> s;
  add_box_faces(s, Vec3::Zero(), {d.W / 2, d.D / 2, d.H / 2});
  // lens barrel along +y: reuse the z-axis cylinder helper via swapped draw
  const double y0 = d.D / 2, y1 = d.D / 2 + d.ll, lr = d.lr;
  s.push_back({2.0 * kPi * lr * d.ll, [y0, y1, lr](Rng& rng) {
                 const double a = rng.uniform(0.0, 2.0 * kPi);
                 return Vec3(lr * std::cos(a), rng.uniform(y0, y1),
                             lr * std::sin(a));
               }});
  s.push_back({kPi * lr * lr, [y1, lr](Rng& rng) {
                 const double r = std::sqrt(rng.uniform(0.0, lr * lr));
                 const double a = rng.uniform(0.0, 2.0 * kPi);
                 return Vec3(r * std::cos(a), y1, r * std::sin(a));
               }});
  add_box_faces(s, Vec3(d.fx, d.fy, d.H / 2 + d.fh / 2),
                {d.fw / 2, d.fd / 2, d.fh / 2});
  return s;
}

// ---- Chair ----

struct ChairDims {
  double sw, sd, sh, st, bh, lr, bt, yb, lx, ly, leg_h;
};

ChairDims chair_dims(const ShapeParams& p) {
  ChairDims d;
  d.sw = p.at("seat_width");
  d.sd = p.at("seat_depth");
  d.sh = p.at("seat_height");
  d.st = p.at("seat_thickness");
  d.bh = p.at("back_height");
  d.lr = p.at("leg_radius");
  d.bt = d.st;
  d.yb = -d.sd / 2 + d.bt / 2;
  d.lx = d.sw / 2 - d.lr;
  d.ly = d.sd / 2 - d.lr;
  d.leg_h = d.sh - d.st;
  return d;
}

std::vector<Landmark> chair_pool(const ShapeParams& p) {
  const ChairDims d = chair_dims(p);
  std::vector<Landmark> pool;
  auto add = [&](const std::string& name, const std::string& part,
                 const Vec3& pos) { pool.push_back({name, part, pos}); };
  const double legx[4] = {d.lx, -d.lx, d.lx, -d.lx};
  const double legy[4] = {d.ly, d.ly, -d.ly, -d.ly};
  const char* legn[4] = {"fr", "fl", "br", "bl"};

  add("seat_top_center", "seat", {0, 0, d.sh});
  add("back_top_center", "back", {0, d.yb, d.sh + d.bh});
  for (int i = 0; i < 4; ++i)
    add(std::string("leg_bottom_") + legn[i], "leg", {legx[i], legy[i], 0});
  add("back_top_right", "back", {d.sw / 2, d.yb, d.sh + d.bh});
  add("back_top_left", "back", {-d.sw / 2, d.yb, d.sh + d.bh});
  int ci = 0;
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      add("seat_corner_top_" + std::to_string(ci++), "seat",
          Vec3(sx * d.sw / 2, sy * d.sd / 2, d.sh));
  for (int i = 0; i < 4; ++i)
    add(std::string("leg_top_") + legn[i], "leg",
        {legx[i], legy[i], d.leg_h});
  add("seat_front_mid", "seat", {0, d.sd / 2, d.sh});
  add("back_mid_right", "back", {d.sw / 2, d.yb, d.sh + d.bh / 2});
  add("back_mid_left", "back", {-d.sw / 2, d.yb, d.sh + d.bh / 2});
  add("back_face_center", "back", {0, d.yb + d.bt / 2, d.sh + d.bh / 2});
  ci = 0;
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      add("seat_corner_bottom_" + std::to_string(ci++), "seat",
          Vec3(sx * d.sw / 2, sy * d.sd / 2, d.leg_h));
  for (int i = 0; i < 4; ++i)
    add(std::string("leg_mid_") + legn[i], "leg",
        {legx[i] + d.lr, legy[i], d.leg_h / 2});
  add("back_top_quarter_right", "back", {d.sw / 4, d.yb, d.sh + d.bh});
  add("back_top_quarter_left", "back", {-d.sw / 4, d.yb, d.sh + d.bh});
  add("seat_side_right", "seat", {d.sw / 2, 0, d.sh});
  add("seat_side_left", "seat", {-d.sw / 2, 0, d.sh});
  add("seat_back_mid", "seat", {0, -d.sd / 2, d.sh});
  add("back_rear_center", "back", {0, -d.sd / 2, d.sh + d.bh / 2});
  add("back_face_quarter", "back", {0, d.yb + d.bt / 2, d.sh + d.bh / 4});
  add("back_face_3quarter", "back", {0, d.yb + d.bt / 2, d.sh + 3 * d.bh / 4});
  for (int i = 0; i < 4; ++i)
    add(std::string("leg_quarter_") + legn[i], "leg",
        {legx[i], legy[i] + d.lr, d.leg_h / 4});
  for (int i = 0; i < 4; ++i)
    add(std::string("leg_3quarter_") + legn[i], "leg",
        {legx[i] - d.lr, legy[i], 3 * d.leg_h / 4});
  add("seat_front_mid_bottom", "seat", {0, d.sd / 2, d.leg_h});
  add("seat_back_mid_bottom", "seat", {0, -d.sd / 2, d.leg_h});
  add("seat_side_right_bottom", "seat", {d.sw / 2, 0, d.leg_h});
  add("seat_side_left_bottom", "seat", {-d.sw / 2, 0, d.leg_h});
  ci = 0;
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      add("seat_quarter_top_" + std::to_string(ci++), "seat",
          Vec3(sx * d.sw / 4, sy * d.sd / 4, d.sh));
  add("back_top_eighth_right", "back", {3 * d.sw / 8, d.yb, d.sh + d.bh});
  add("back_top_eighth_left", "back", {-3 * d.sw / 8, d.yb, d.sh + d.bh});
  add("back_quarter_right", "back", {d.sw / 2, d.yb, d.sh + d.bh / 4});
  add("back_quarter_left", "back", {-d.sw / 2, d.yb, d.sh + d.bh / 4});
  add("back_bottom_right", "back", {d.sw / 2, d.yb, d.sh});
  add("back_bottom_left", "back", {-d.sw / 2, d.yb, d.sh});
  add("back_front_top_mid", "back", {0, d.yb + d.bt / 2, d.sh + d.bh});
  add("back_rear_top_mid", "back", {0, -d.sd / 2, d.sh + d.bh});
  for (int i = 0; i < 4; ++i)
    add(std::string("leg_bottom_rim_") + legn[i], "leg",
        {legx[i], legy[i] - d.lr, 0});
  return pool;
}

std::vector<Surface> chair_surfaces(const ShapeParams& p) {
  const ChairDims d = chair_dims(p);
  std::vector<Surface> s;
  add_box_faces(s, Vec3(0, 0, d.sh - d.st / 2),
                {d.sw / 2, d.sd / 2, d.st / 2});
  add_box_faces(s, Vec3(0, d.yb, d.sh + d.bh / 2),
                {d.sw / 2, d.bt / 2, d.bh / 2});
  const double legx[4] = {d.lx, -d.lx, d.lx, -d.lx};
  const double legy[4] = {d.ly, d.ly, -d.ly, -d.ly};
  for (int i = 0; i < 4; ++i) {
    add_cylinder_side(s, legx[i], legy[i], 0, d.leg_h, d.lr);
    add_disk(s, legx[i], legy[i], 0, 0, d.lr);
  }
  return s;
}

// ---- Box ----
// Plain container with a slightly overhanging lid band. Two-fold symmetric
// about z by construction; kept that way for the symmetry-metric tests.

struct BoxDims {
  double w, d, h, lid_h, o, body_h;
};

BoxDims box_dims(const ShapeParams& p) {
  BoxDims b;
  b.w = p.at("width");
  b.d = p.at("depth");
  b.h = p.at("height");
  b.lid_h = p.at("lid_ratio") * b.h;
  b.o = 0.03 * std::min(b.w, b.d);
  b.body_h = b.h - b.lid_h;
  return b;
}

std::vector<Landmark> box_pool(const ShapeParams& p) {
  const BoxDims b = box_dims(p);
  std::vector<Landmark> pool;
  auto add = [&](const std::string& name, const std::string& part,
                 const Vec3& pos) { pool.push_back({name, part, pos}); };
  const double wo = b.w / 2 + b.o, dxo = b.d / 2 + b.o;

  add("lid_top_center", "lid", {0, 0, b.h});
  add("base_bottom_center", "body", {0, 0, 0});
  int ci = 0;
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      add("lid_top_corner_" + std::to_string(ci++), "lid",
          Vec3(sx * wo, sy * dxo, b.h));
  ci = 0;
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      add("base_corner_" + std::to_string(ci++), "body",
          Vec3(sx * b.w / 2, sy * b.d / 2, 0));
  ci = 0;
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      add("lid_rim_corner_" + std::to_string(ci++), "lid",
          Vec3(sx * wo, sy * dxo, b.body_h));
  add("body_face_right", "body", {b.w / 2, 0, b.body_h / 2});
  add("body_face_left", "body", {-b.w / 2, 0, b.body_h / 2});
  add("body_face_front", "body", {0, b.d / 2, b.body_h / 2});
  add("body_face_back", "body", {0, -b.d / 2, b.body_h / 2});
  add("lid_face_right", "lid", {wo, 0, b.body_h + b.lid_h / 2});
  add("lid_face_left", "lid", {-wo, 0, b.body_h + b.lid_h / 2});
  add("lid_face_front", "lid", {0, dxo, b.body_h + b.lid_h / 2});
  add("lid_face_back", "lid", {0, -dxo, b.body_h + b.lid_h / 2});
  add("base_edge_right", "body", {b.w / 2, 0, 0});
  add("base_edge_left", "body", {-b.w / 2, 0, 0});
  add("base_edge_front", "body", {0, b.d / 2, 0});
  add("base_edge_back", "body", {0, -b.d / 2, 0});
  add("lid_top_edge_right", "lid", {wo, 0, b.h});
  add("lid_top_edge_left", "lid", {-wo, 0, b.h});
  add("lid_top_edge_front", "lid", {0, dxo, b.h});
  add("lid_top_edge_back", "lid", {0, -dxo, b.h});
  ci = 0;
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      add("body_vert_edge_" + std::to_string(ci++), "body",
          Vec3(sx * b.w / 2, sy * b.d / 2, b.body_h / 2));
  ci = 0;
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      add("lid_top_quarter_" + std::to_string(ci++), "lid",
          Vec3(sx * wo / 2, sy * dxo / 2, b.h));
  ci = 0;
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      add("base_quarter_" + std::to_string(ci++), "body",
          Vec3(sx * b.w / 4, sy * b.d / 4, 0));
  add("lid_rim_edge_right", "lid", {wo, 0, b.body_h});
  add("lid_rim_edge_left", "lid", {-wo, 0, b.body_h});
  add("lid_rim_edge_front", "lid", {0, dxo, b.body_h});
  add("lid_rim_edge_back", "lid", {0, -dxo, b.body_h});
  ci = 0;
  for (int sx : {1, -1})
    for (int sz : {1, 3})
      add("front_quarter_" + std::to_string(ci++), "body",
          Vec3(sx * b.w / 4, b.d / 2, sz * b.body_h / 4));
  ci = 0;
  for (int sx : {1, -1})
    for (int sz : {1, 3})
      add("right_quarter_" + std::to_string(ci++), "body",
          Vec3(b.w / 2, sx * b.d / 4, sz * b.body_h / 4));
  ci = 0;
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      add("body_top_corner_" + std::to_string(ci++), "body",
          Vec3(sx * b.w / 2, sy * b.d / 2, b.body_h));
  ci = 0;
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      add("lid_vert_edge_" + std::to_string(ci++), "lid",
          Vec3(sx * wo, sy * dxo, b.body_h + b.lid_h / 2));
  add("front_low_mid", "body", {0, b.d / 2, b.body_h / 4});
  add("back_low_mid", "body", {0, -b.d / 2, b.body_h / 4});
  return pool;
}

std::vector<Surface> box_surfaces(const ShapeParams& p) {
  const BoxDims b = box_dims(p);
  std::vector<Surface> s;
  add_box_faces(s, Vec3(0, 0, b.body_h / 2), {b.w / 2, b.d / 2, b.body_h / 2});
  add_box_faces(s, Vec3(0, 0, b.body_h + b.lid_h / 2),
                {b.w / 2 + b.o, b.d / 2 + b.o, b.lid_h / 2});
  return s;
}

std::vector<Surface> surfaces_for(const ShapeParams& p) {
  switch (p.category) {
    case Category::kLamp: return lamp_surfaces(p);
    case Category::kCamera: return camera_surfaces(p);
    case Category::kChair: return chair_surfaces(p);
    case Category::kBox: return box_surfaces(p);
  }
  throw InvalidParams("unknown category");
}

}  // namespace

std::string category_name(Category c) {
  switch (c) {
    case Category::kLamp: return "lamp";
    case Category::kCamera: return "camera";
    case Category::kChair: return "chair";
    case Category::kBox: return "box";
  }
  throw InvalidParams("unknown category");
}

Category category_from_name(const std::string& name) {
  if (name == "lamp") return Category::kLamp;
  if (name == "camera") return Category::kCamera;
  if (name == "chair") return Category::kChair;
  if (name == "box") return Category::kBox;
  throw ConfigError("unknown category name: " + name);
}

const std::vector<ParamSpec>& param_specs(Category category) {
  static const std::vector<ParamSpec> lamp = {
      {"base_radius", 0.05, 0.12},   {"base_height", 0.01, 0.03},
      {"stem_radius", 0.008, 0.02},  {"stem_height", 0.12, 0.55},
      {"shade_radius", 0.08, 0.18},  {"shade_top_ratio", 0.45, 0.75},
      {"shade_height", 0.08, 0.2},
  };
  static const std::vector<ParamSpec> camera = {
      {"body_width", 0.09, 0.16},   {"body_depth", 0.04, 0.07},
      {"body_height", 0.06, 0.10},  {"lens_radius", 0.012, 0.028},
      {"lens_length", 0.02, 0.06},
  };
  static const std::vector<ParamSpec> chair = {
      {"seat_width", 0.35, 0.5},    {"seat_depth", 0.35, 0.5},
      {"seat_height", 0.38, 0.5},   {"seat_thickness", 0.03, 0.06},
      {"back_height", 0.3, 0.45},   {"leg_radius", 0.015, 0.03},
  };
  static const std::vector<ParamSpec> box = {
      {"width", 0.15, 0.4},
      {"depth", 0.15, 0.4},
      {"height", 0.1, 0.3},
      {"lid_ratio", 0.1, 0.3},
  };
  switch (category) {
    case Category::kLamp: return lamp;
    case Category::kCamera: return camera;
    case Category::kChair: return chair;
    case Category::kBox: return box;
  }
  throw InvalidParams("unknown category");
}

double ShapeParams::at(const std::string& name) const {
  const auto it = values.find(name);
  if (it == values.end())
    throw InvalidParams("missing shape parameter: " + name);
  return it->second;
}

void ShapeParams::validate() const {
  for (const auto& spec : param_specs(category)) {
    const double v = at(spec.name);
    if (!(v >= spec.lo && v <= spec.hi))
      throw InvalidParams("parameter " + spec.name + "=" + std::to_string(v) +
                          " outside [" + std::to_string(spec.lo) + ", " +
                          std::to_string(spec.hi) + "]");
  }
  if (values.size() != param_specs(category).size())
    throw InvalidParams("unexpected extra shape parameters");
}

ShapeParams median_params(Category category, std::uint64_t seed) {
  ShapeParams p;
  p.category = category;
  p.seed = seed;
  for (const auto& spec : param_specs(category))
    p.values[spec.name] = 0.5 * (spec.lo + spec.hi);
  return p;
}

ShapeParams sample_params(Category category, double spread,
                          std::uint64_t seed) {
  if (spread < 0.0 || spread > 1.0)
    throw ConfigError("parameter spread must lie in [0, 1]");
  Rng rng(derive_seed(seed, 0x70617261));
  ShapeParams p;
  p.category = category;
  p.seed = seed;
  for (const auto& spec : param_specs(category)) {
    const double mid = 0.5 * (spec.lo + spec.hi);
    const double half = 0.5 * (spec.hi - spec.lo) * spread;
    p.values[spec.name] = mid + rng.uniform(-half, half);
  }
  return p;
}

std::vector<Landmark> landmark_pool(const ShapeParams& params) {
  params.validate();
  switch (params.category) {
    case Category::kLamp: return lamp_pool(params);
    case Category::kCamera: return camera_pool(params);
    case Category::kChair: return chair_pool(params);
    case Category::kBox: return box_pool(params);
  }
  throw InvalidParams("unknown category");
}

GeneratedInstance generate_instance(const ShapeParams& params, int n_surface,
                                    int n_keypoints) {
  params.validate();
  if (n_surface < 1) throw ConfigError("n_surface must be >= 1");
  const auto pool = landmark_pool(params);
  if (n_keypoints < 4 || n_keypoints > int(pool.size()))
    throw ConfigError("keypoint count must lie in [4, " +
                      std::to_string(pool.size()) + "]");

  // Normalization bbox comes from the landmark pool, which holds every
  // extremal point of each family, so it depends on params only.
  Vec3 lo = pool[0].position, hi = pool[0].position;
  for (const auto& lm : pool) {
    lo = lo.cwiseMin(lm.position);
    hi = hi.cwiseMax(lm.position);
  }
  const Vec3 center = 0.5 * (lo + hi);
  const double scale = (hi - lo).maxCoeff();
  if (!(scale > 0.0)) throw InvalidParams("degenerate shape extent");

  const auto surfaces = surfaces_for(params);
  double total_area = 0.0;
  for (const auto& s : surfaces) total_area += s.area;

  // Largest-remainder allocation of sample counts by surface area.
  std::vector<int> counts(surfaces.size(), 0);
  std::vector<std::pair<double, std::size_t>> rema;
  int assigned = 0;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    const double exact = n_surface * surfaces[i].area / total_area;
    counts[i] = int(std::floor(exact));
    assigned += counts[i];
    rema.push_back({exact - std::floor(exact), i});
  }
  std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (int k = 0; k < n_surface - assigned; ++k)
    counts[rema[std::size_t(k) % rema.size()].second] += 1;

  Rng rng(derive_seed(params.seed, 0x73757266));
  GeneratedInstance out;
  out.cloud.frame = Frame::kObject;
  out.cloud.points.resize(n_surface, 3);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < surfaces.size(); ++i)
    for (int k = 0; k < counts[i]; ++k)
      out.cloud.points.row(row++) =
          ((surfaces[i].draw(rng) - center) / scale).transpose();

  out.keypoints.frame = Frame::kObject;
  out.keypoints.keypoints.resize(n_keypoints, 3);
  out.keypoint_parts.resize(std::size_t(n_keypoints));
  for (int i = 0; i < n_keypoints; ++i) {
    out.keypoints.keypoints.row(i) =
        ((pool[std::size_t(i)].position - center) / scale).transpose();
    out.keypoint_parts[std::size_t(i)] = pool[std::size_t(i)].part;
  }
  out.norm_scale = scale;
  out.norm_center = center;
  return out;
}

void ViewSpec::validate() const {
  if (resolution_x < 1 || resolution_y < 1)
    throw ConfigError("view resolution must be positive");
  if (occluder_fraction < 0.0 || occluder_fraction >= 1.0)
    throw ConfigError("occluder fraction must lie in [0, 1)");
  if (noise_sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
  if (n_output < 1) throw ConfigError("output point count must be >= 1");
}

PointCloud render_partial(const PointCloud& shape, const ViewSpec& view,
                          const AnisoSimilarity& gt_pose) {
  view.validate();
  if (shape.size() == 0) throw DataError("cannot render an empty shape");

  // Object -> camera via gt_pose, then the camera's own placement.
  const PointMatrix cam =
      apply(view.camera_pose, apply(gt_pose, shape.points));
  const double f = double(std::max(view.resolution_x, view.resolution_y));
  const double cx = 0.5 * view.resolution_x, cy = 0.5 * view.resolution_y;

  struct Pix {
    double z = std::numeric_limits<double>::infinity();
    Eigen::Index idx = -1;
  };
  std::vector<Pix> zbuf(std::size_t(view.resolution_x) *
                        std::size_t(view.resolution_y));
  double u_lo = std::numeric_limits<double>::infinity(), u_hi = -u_lo;
  double v_lo = u_lo, v_hi = -u_lo;
  std::vector<std::pair<int, int>> pixel_of(std::size_t(cam.rows()), {-1, -1});

  for (Eigen::Index i = 0; i < cam.rows(); ++i) {
    const double z = cam(i, 2);
    if (z <= 1e-6) continue;
    const double u = f * cam(i, 0) / z + cx;
    const double v = f * cam(i, 1) / z + cy;
    const int px = int(std::floor(u)), py = int(std::floor(v));
    if (px < 0 || px >= view.resolution_x || py < 0 || py >= view.resolution_y)
      continue;
    u_lo = std::min(u_lo, u);
    u_hi = std::max(u_hi, u);
    v_lo = std::min(v_lo, v);
    v_hi = std::max(v_hi, v);
    pixel_of[std::size_t(i)] = {px, py};
    Pix& p = zbuf[std::size_t(py) * std::size_t(view.resolution_x) +
                  std::size_t(px)];
    if (z < p.z) {
      p.z = z;
      p.idx = i;
    }
  }

  Rng rng(derive_seed(view.seed, 0x72656e64));

  // The occluder is a camera-facing quad in front of the object whose
  // projection is an axis-aligned strip covering occluder_fraction of the
  // screen bounding box, anchored at a seed-chosen side.
  double ou_lo = 1.0, ou_hi = 0.0, ov_lo = 1.0, ov_hi = 0.0;
  if (view.occluder_fraction > 0.0 && u_hi > u_lo) {
    const int side = rng.uniform_int(4);
    const double fu = u_hi - u_lo, fv = v_hi - v_lo;
    ou_lo = u_lo;
    ou_hi = u_hi;
    ov_lo = v_lo;
    ov_hi = v_hi;
    switch (side) {
      case 0: ou_hi = u_lo + view.occluder_fraction * fu; break;
      case 1: ou_lo = u_hi - view.occluder_fraction * fu; break;
      case 2: ov_hi = v_lo + view.occluder_fraction * fv; break;
      case 3: ov_lo = v_hi - view.occluder_fraction * fv; break;
    }
  }

  std::vector<Eigen::Index> survivors;
  for (const Pix& p : zbuf) {
    if (p.idx < 0) continue;
    if (view.occluder_fraction > 0.0) {
      const auto [px, py] = pixel_of[std::size_t(p.idx)];
      const double uc = px + 0.5, vc = py + 0.5;
      if (uc >= ou_lo && uc <= ou_hi && vc >= ov_lo && vc <= ov_hi) continue;
    }
    survivors.push_back(p.idx);
  }
  if (survivors.empty())
    throw EmptyView("no visible points survive this view");
  std::sort(survivors.begin(), survivors.end());

  PointCloud out;
  out.frame = Frame::kCamera;
  out.points.resize(view.n_output, 3);
  const Eigen::Index n = Eigen::Index(survivors.size());
  if (n >= view.n_output) {
    // partial Fisher-Yates: a uniform subset without replacement
    std::vector<Eigen::Index> idx = survivors;
    for (int k = 0; k < view.n_output; ++k) {
      const int j = k + rng.uniform_int(int(n) - k);
      std::swap(idx[std::size_t(k)], idx[std::size_t(j)]);
      out.points.row(k) = cam.row(idx[std::size_t(k)]);
    }
  } else {
    for (int k = 0; k < view.n_output; ++k)
      out.points.row(k) = cam.row(survivors[std::size_t(
          rng.uniform_int(int(n)))]);
  }
  if (view.noise_sigma > 0.0)
    for (int k = 0; k < view.n_output; ++k)
      out.points.row(k) += rng.normal3(view.noise_sigma).transpose();
  return out;
}

double chamfer_distance(const PointMatrix& a, const PointMatrix& b) {
  if (a.rows() == 0 || b.rows() == 0)
    throw DataError("chamfer distance of an empty cloud");
  auto directed = [](const PointMatrix& from, const PointMatrix& to) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < from.rows(); ++i) {
      const double d2 =
          (to.rowwise() - from.row(i)).rowwise().squaredNorm().minCoeff();
      sum += std::sqrt(d2);
    }
    return sum / double(from.rows());
  };
  return 0.5 * (directed(a, b) + directed(b, a));
}

double variation_degree(const std::vector<PointCloud>& instances,
                        const PointCloud& tmpl) {
  if (instances.empty())
    throw DataError("variation degree needs at least one instance");
  double sum = 0.0;
  for (const auto& inst : instances)
    sum += chamfer_distance(inst.points, tmpl.points);
  return sum / double(instances.size());
}

}  // namespace socs
