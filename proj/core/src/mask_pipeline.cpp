#include "segloc/mask_pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "segloc/errors.hpp"

namespace segloc {
namespace {

// Eigenvalues of a symmetric 2x2 matrix, ascending.
Eigen::Vector2d symmetric_eigenvalues(const Eigen::Matrix2d& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(m);
  return solver.eigenvalues();
}

}  // namespace

void validate(const MaskObservation& mask) {
  if (mask.pixel_count < 1) {
    throw std::invalid_argument("mask pixel_count must be >= 1");
  }
  if (!mask.centroid_px.allFinite() || !mask.covariance_px.allFinite() ||
      !std::isfinite(mask.spread_px)) {
    throw std::invalid_argument("mask statistics must be finite");
  }
  const double asym =
      std::abs(mask.covariance_px(0, 1) - mask.covariance_px(1, 0));
  if (asym > 1e-9) {
    throw std::invalid_argument("mask covariance must be symmetric");
  }
  const Eigen::Vector2d ev = symmetric_eigenvalues(mask.covariance_px);
  if (ev(0) < -1e-12) {
    throw std::invalid_argument("mask covariance must be positive semidefinite");
  }
  const double mean_ev = 0.5 * (ev(0) + ev(1));
  if (std::abs(mask.spread_px * mask.spread_px - mean_ev) > 1e-6) {
    throw std::invalid_argument(
        "mask spread_px^2 must equal the mean covariance eigenvalue");
  }
}

MaskObservation mask_from_pixels(std::span<const Eigen::Vector2i> pixels,
                                 int image_width_px, int image_height_px) {
  if (pixels.empty()) {
    throw std::invalid_argument("mask must contain at least one pixel");
  }
  MaskObservation mask;
  mask.pixel_count = static_cast<int>(pixels.size());

  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (const auto& p : pixels) {
    sum += p.cast<double>();
  }
  mask.centroid_px = sum / static_cast<double>(pixels.size());

  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : pixels) {
    const Eigen::Vector2d d = p.cast<double>() - mask.centroid_px;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(pixels.size());
  mask.covariance_px = cov;
  mask.spread_px = std::sqrt(0.5 * cov.trace());

  for (const auto& p : pixels) {
    if (p.x() <= 0 || p.y() <= 0 || p.x() >= image_width_px - 1 ||
        p.y() >= image_height_px - 1) {
      mask.touches_boundary = true;
      break;
    }
  }
  return mask;
}

CameraModel make_pinhole_camera(std::string name, double focal_length_px,
                                double baseline_m, int image_width_px,
                                int image_height_px,
                                const RigidTransform& extrinsics) {
  CameraModel camera;
  camera.name = std::move(name);
  camera.focal_length_px = focal_length_px;
  camera.angular_resolution_rad_per_px =
      focal_length_px > 0.0 ? 1.0 / focal_length_px : 0.0;
  camera.baseline_m = baseline_m;
  camera.image_width_px = image_width_px;
  camera.image_height_px = image_height_px;
  camera.extrinsics = extrinsics;
  validate(camera);
  return camera;
}

void validate(const CameraModel& camera) {
  if (camera.angular_resolution_rad_per_px <= 0.0) {
    throw std::invalid_argument("camera angular resolution must be positive");
  }
  if (camera.image_width_px <= 0 || camera.image_height_px <= 0) {
    throw std::invalid_argument("camera image size must be positive");
  }
  if (camera.baseline_m < 0.0) {
    throw std::invalid_argument("camera baseline must be nonnegative");
  }
  if (camera.focal_length_px > 0.0) {
    const double implied = 1.0 / camera.focal_length_px;
    const double rel = std::abs(camera.angular_resolution_rad_per_px - implied) /
                       implied;
    if (rel > 0.10) {
      throw std::invalid_argument(
          "camera angular resolution inconsistent with focal length");
    }
  }
  if (!is_rigid(camera.extrinsics)) {
    throw std::invalid_argument("camera extrinsics must be rigid");
  }
}

void validate(const MaskFilterConfig& config) {
  if (config.s_min_m <= 0.0 || config.s_max_m <= config.s_min_m) {
    throw std::invalid_argument("size bounds must satisfy 0 < s_min < s_max");
  }
  if (config.tau_elong < 1.0) {
    throw std::invalid_argument("elongation threshold must be >= 1");
  }
}

double estimate_size(const MaskObservation& mask, double depth_m,
                     const CameraModel& camera) {
  if (depth_m <= 0.0) {
    throw NonPositiveDepth("depth must be positive to estimate size");
  }
  return mask.spread_px * depth_m * camera.angular_resolution_rad_per_px;
}

double elongation_ratio(const MaskObservation& mask) {
  const Eigen::Vector2d ev = symmetric_eigenvalues(mask.covariance_px);
  if (ev(0) <= 1e-12) {
    throw DegenerateMask("mask covariance has a near-zero eigenvalue");
  }
  return ev(1) / ev(0);
}

std::vector<SizedMask> filter_masks(
    std::span<const std::pair<MaskObservation, double>> masks_with_depth,
    const CameraModel& camera, const MaskFilterConfig& config) {
  validate(camera);
  validate(config);
  std::vector<SizedMask> kept;
  kept.reserve(masks_with_depth.size());
  for (const auto& [mask, depth_m] : masks_with_depth) {
    if (mask.touches_boundary || depth_m <= 0.0) {
      continue;
    }
    const double size_m = estimate_size(mask, depth_m, camera);
    if (size_m < config.s_min_m || size_m > config.s_max_m) {
      continue;
    }
    double ratio = 0.0;
    try {
      ratio = elongation_ratio(mask);
    } catch (const DegenerateMask&) {
      continue;
    }
    if (ratio > config.tau_elong) {
      continue;
    }
    kept.push_back(SizedMask{mask, size_m});
  }
  return kept;
}

RoverFrameDetection project_detection(const MaskObservation& mask, double depth_m,
                                      double size_m, const CameraModel& camera) {
  if (depth_m <= 0.0) {
    throw NonPositiveDepth("depth must be positive to project a detection");
  }
  const double u = mask.centroid_px.x();
  const double v = mask.centroid_px.y();
  if (u < 0.0 || v < 0.0 || u > camera.image_width_px ||
      v > camera.image_height_px) {
    throw CentroidOutOfBounds("mask centroid lies outside the image");
  }
  const double cx = camera.image_width_px / 2.0;
  const double cy = camera.image_height_px / 2.0;
  const double f = camera.focal_length_px > 0.0
                       ? camera.focal_length_px
                       : 1.0 / camera.angular_resolution_rad_per_px;
  const Point3 camera_point((u - cx) / f * depth_m, (v - cy) / f * depth_m,
                            depth_m);
  RoverFrameDetection detection;
  detection.position = camera.extrinsics.apply(camera_point);
  detection.size_m = size_m;
  detection.source_camera = camera.name;
  return detection;
}

double depth_from_disparity(double disparity_px, const CameraModel& camera) {
  if (disparity_px <= 0.0) {
    throw NonPositiveDisparity("disparity must be positive");
  }
  if (camera.focal_length_px <= 0.0 || camera.baseline_m <= 0.0) {
    throw std::invalid_argument(
        "stereo depth requires focal length and baseline");
  }
  return camera.focal_length_px * camera.baseline_m / disparity_px;
}

}  // namespace segloc
