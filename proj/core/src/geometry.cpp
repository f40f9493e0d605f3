#include "segloc/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "segloc/errors.hpp"

namespace segloc {

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

bool is_rigid(const RigidTransform& t, double tol) {
  const Eigen::Matrix3d residual =
      t.rotation.transpose() * t.rotation - Eigen::Matrix3d::Identity();
  if (residual.cwiseAbs().maxCoeff() > tol) {
    return false;
  }
  if (std::abs(t.rotation.determinant() - 1.0) > tol) {
    return false;
  }
  return t.translation.allFinite();
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

RigidTransform invert(const RigidTransform& t) {
  const Eigen::Matrix3d r_inv = t.rotation.transpose();
  return {r_inv, -(r_inv * t.translation)};
}

RigidTransform estimate_rigid_transform(const CorrespondenceSet& correspondences) {
  const std::size_t n = correspondences.size();
  if (n < 3) {
    throw TooFewCorrespondences(
        "rigid transform estimation needs at least 3 correspondences, got " +
        std::to_string(n));
  }

  Eigen::Vector3d centroid_src = Eigen::Vector3d::Zero();
  Eigen::Vector3d centroid_tgt = Eigen::Vector3d::Zero();
  for (const auto& c : correspondences) {
    if (!c.source.allFinite() || !c.target.allFinite()) {
      throw DegenerateGeometry("non-finite coordinates in correspondence set");
    }
    centroid_src += c.source;
    centroid_tgt += c.target;
  }
  centroid_src /= static_cast<double>(n);
  centroid_tgt /= static_cast<double>(n);

  // Source scatter for the collinearity check and cross-covariance for the
  // alignment, accumulated in one pass.
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  for (const auto& c : correspondences) {
    const Eigen::Vector3d ps = c.source - centroid_src;
    const Eigen::Vector3d pt = c.target - centroid_tgt;
    scatter += ps * ps.transpose();
    cross += ps * pt.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
  // Scale-relative rank test: sources spanning less than two directions leave
  // the rotation under-determined.
  if (ev(2) <= 0.0 || ev(1) < 1e-9 * ev(2)) {
    throw DegenerateGeometry(
        "source points are collinear or coincident; rotation under-determined");
  }

  // Bitwise-equal point sets admit the identity as the unique zero-residual
  // minimizer; returning it directly keeps self-alignment exact instead of
  // within SVD rounding.
  const bool identical_sets =
      std::all_of(correspondences.begin(), correspondences.end(),
                  [](const Correspondence& c) { return c.source == c.target; });
  if (identical_sets) {
    return RigidTransform::identity();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double d = (svd.matrixV() * svd.matrixU().transpose()).determinant();
  // Singular values come out in descending order, so flipping the sign on the
  // last column of V is exactly the smallest-singular-vector correction.
  Eigen::Vector3d signs(1.0, 1.0, d < 0.0 ? -1.0 : 1.0);
  const Eigen::Matrix3d rotation =
      svd.matrixV() * signs.asDiagonal() * svd.matrixU().transpose();

  return {rotation, centroid_tgt - rotation * centroid_src};
}

double residual_rms(const RigidTransform& t, const CorrespondenceSet& correspondences) {
  if (correspondences.empty()) {
    return 0.0;
  }
  double sum_sq = 0.0;
  for (const auto& c : correspondences) {
    sum_sq += (c.target - t.apply(c.source)).squaredNorm();
  }
  return std::sqrt(sum_sq / static_cast<double>(correspondences.size()));
}

double translation_rmse(const RigidTransform& estimated, const RigidTransform& reference) {
  return (estimated.translation - reference.translation).norm();
}

double translation_rmse(
    std::span<const std::pair<RigidTransform, RigidTransform>> pairs) {
  if (pairs.empty()) {
    return 0.0;
  }
  double sum_sq = 0.0;
  for (const auto& [estimated, reference] : pairs) {
    sum_sq += (estimated.translation - reference.translation).squaredNorm();
  }
  return std::sqrt(sum_sq / static_cast<double>(pairs.size()));
}

double rotation_angle(const Eigen::Matrix3d& rotation) {
  const double c = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

double rotation_error(const RigidTransform& a, const RigidTransform& b) {
  return rotation_angle(a.rotation.transpose() * b.rotation);
}

}  // namespace segloc
