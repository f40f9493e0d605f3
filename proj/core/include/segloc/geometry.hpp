#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace segloc {

/// 3D point, meters, in whichever Cartesian frame the surrounding context
/// names (rover, world, reference map).
using Point3 = Eigen::Vector3d;

/// Element of SE(3): x -> rotation * x + translation.
///
/// The rotation is stored as a 3x3 matrix and is expected to be orthonormal
/// with determinant +1 (see is_rigid). Quaternions appear only at dataset
/// boundaries and are converted on ingest.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  Point3 apply(const Point3& p) const { return rotation * p + translation; }

  /// Homogeneous 4x4 form.
  Eigen::Matrix4d matrix() const;
};

/// Tolerance for the SO(3) membership checks (per-entry orthonormality
/// residual and determinant distance from +1).
inline constexpr double kRotationTolerance = 1e-9;

bool is_rigid(const RigidTransform& t, double tol = kRotationTolerance);

/// compose(a, b).apply(p) == a.apply(b.apply(p)).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

RigidTransform invert(const RigidTransform& t);

struct Correspondence {
  Point3 source;
  Point3 target;
};

using CorrespondenceSet = std::vector<Correspondence>;

/// Least-squares rigid alignment of source points onto target points:
/// minimizes sum_i ||target_i - (R * source_i + t)||^2 in closed form via
/// centroid subtraction, the 3x3 cross-covariance, and its SVD. If the raw
/// SVD solution is a reflection (det = -1), the singular vector of the
/// smallest singular value is sign-flipped, which yields the optimal proper
/// rotation.
///
/// Throws TooFewCorrespondences for fewer than 3 pairs and DegenerateGeometry
/// when the source points are collinear (second eigenvalue of the source
/// scatter below 1e-9 of the largest), where the rotation is under-determined.
RigidTransform estimate_rigid_transform(const CorrespondenceSet& correspondences);

/// RMS of ||target_i - t.apply(source_i)|| over the set.
double residual_rms(const RigidTransform& t, const CorrespondenceSet& correspondences);

/// Euclidean distance between the translation components.
double translation_rmse(const RigidTransform& estimated, const RigidTransform& reference);

/// Root of the mean squared translation distance over evaluation pairs
/// (estimated, reference).
double translation_rmse(
    std::span<const std::pair<RigidTransform, RigidTransform>> pairs);

/// Geodesic angle of a rotation matrix, radians, in [0, pi].
double rotation_angle(const Eigen::Matrix3d& rotation);

/// Geodesic distance between the rotation components, radians.
double rotation_error(const RigidTransform& a, const RigidTransform& b);

}  // namespace segloc
