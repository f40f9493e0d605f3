#pragma once

// Shared helpers for the test suites: seeded generators and small independent
// oracles. Everything here is deliberately simple and separate from the
// library code paths it is used to check.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <segloc/geometry.hpp>
#include <segloc/random.hpp>

namespace segloc::testing {

inline std::vector<Point3> random_points(SeededRng& rng, std::size_t count,
                                         double extent = 10.0) {
  std::vector<Point3> points;
  points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    points.push_back({rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                      rng.uniform(-extent, extent)});
  }
  return points;
}

inline RigidTransform random_transform(SeededRng& rng, double max_translation = 10.0) {
  RigidTransform t;
  t.rotation = rng.uniform_rotation();
  t.translation = {rng.uniform(-max_translation, max_translation),
                   rng.uniform(-max_translation, max_translation),
                   rng.uniform(-max_translation, max_translation)};
  return t;
}

/// Builds the correspondence set (p, T(p) + noise) for every p.
inline CorrespondenceSet correspondences_under(const std::vector<Point3>& points,
                                               const RigidTransform& t,
                                               SeededRng* noise_rng = nullptr,
                                               double noise_sigma = 0.0) {
  CorrespondenceSet set;
  set.reserve(points.size());
  for (const auto& p : points) {
    Point3 target = t.apply(p);
    if (noise_rng != nullptr && noise_sigma > 0.0) {
      target += noise_rng->normal_vec3(noise_sigma);
    }
    set.push_back({p, target});
  }
  return set;
}

inline Eigen::Matrix3d rotation_about_z(double angle_rad) {
  Eigen::Matrix3d r;
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return r;
}

/// Max absolute entry difference between two transforms in homogeneous form.
inline double transform_max_diff(const RigidTransform& a, const RigidTransform& b) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

}  // namespace segloc::testing
