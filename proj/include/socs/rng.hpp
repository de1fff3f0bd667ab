#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace socs {

// splitmix64. Used both as a stream generator seeder and to derive
// independent child seeds from (base, tag...) tuples, so that every
// randomized stage of a pipeline can be replayed in isolation.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  return splitmix64(splitmix64(base) ^ (0x9e3779b97f4a7c15ull + tag));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag_a,
                                 std::uint64_t tag_b) {
  return derive_seed(derive_seed(base, tag_a), tag_b);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag_a,
                                 std::uint64_t tag_b, std::uint64_t tag_c) {
  return derive_seed(derive_seed(base, tag_a, tag_b), tag_c);
}

// xoshiro256++ with a splitmix64-expanded seed. Self-contained so that
// streams are bit-identical across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x = splitmix64(x);
      word = x;
      x += 0x9e3779b97f4a7c15ull;
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    return n <= 1 ? 0 : int(next() % std::uint64_t(n));
  }

  // Standard normal via Box-Muller; second draw cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  Eigen::Vector3d normal3(double sigma) {
    return {sigma * normal(), sigma * normal(), sigma * normal()};
  }

  // Uniform over the solid ball (rejection sampling).
  Eigen::Vector3d in_ball(const Eigen::Vector3d& center, double radius) {
    while (true) {
      Eigen::Vector3d p{uniform(-1.0, 1.0), uniform(-1.0, 1.0),
                        uniform(-1.0, 1.0)};
      if (p.squaredNorm() <= 1.0) return center + radius * p;
    }
  }

  Eigen::Vector3d unit_vector() {
    while (true) {
      Eigen::Vector3d p{uniform(-1.0, 1.0), uniform(-1.0, 1.0),
                        uniform(-1.0, 1.0)};
      const double n2 = p.squaredNorm();
      if (n2 > 1e-12 && n2 <= 1.0) return p / std::sqrt(n2);
    }
  }

  // Haar-uniform rotation from a uniform unit quaternion (Shoemake).
  Eigen::Matrix3d rotation() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double u3 = uniform();
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    const Eigen::Quaterniond q(a * std::sin(2.0 * M_PI * u2),
                               a * std::cos(2.0 * M_PI * u2),
                               b * std::sin(2.0 * M_PI * u3),
                               b * std::cos(2.0 * M_PI * u3));
    return q.normalized().toRotationMatrix();
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4] = {};
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace socs
