#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace segloc {

/// Deterministic, explicitly seeded random generator.
///
/// The engine is std::mt19937_64, whose output sequence is fully specified by
/// the C++ standard, and all distribution transforms are implemented here
/// (standard library distributions are implementation-defined). The same seed
/// therefore produces the same stream on every platform and toolchain.
/// There is no global instance; every caller owns and seeds its generator.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive. Rejection sampling, no modulo
  /// bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  /// Standard normal via Box-Muller; generates in pairs and caches the spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  Eigen::Vector3d normal_vec3(double stddev) {
    return {normal(0.0, stddev), normal(0.0, stddev), normal(0.0, stddev)};
  }

  /// Rotation drawn uniformly from SO(3) (normalized 4-normal quaternion).
  Eigen::Matrix3d uniform_rotation() {
    Eigen::Quaterniond q(normal(), normal(), normal(), normal());
    q.normalize();
    return q.toRotationMatrix();
  }

  /// Rotation about a uniformly random axis by an angle uniform in
  /// [0, max_angle_rad]. max_angle_rad = 0 yields the exact identity.
  Eigen::Matrix3d bounded_rotation(double max_angle_rad) {
    const double angle = uniform(0.0, max_angle_rad);
    if (angle == 0.0) {
      return Eigen::Matrix3d::Identity();
    }
    Eigen::Vector3d axis(normal(), normal(), normal());
    const double n = axis.norm();
    if (n == 0.0) {
      axis = Eigen::Vector3d::UnitZ();
    } else {
      axis /= n;
    }
    return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  }

  /// Fisher-Yates shuffle, deterministic for a given seed.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(
          uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace segloc
