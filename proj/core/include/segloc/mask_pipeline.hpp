#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "segloc/geometry.hpp"

namespace segloc {

/// Image-frame statistics of one instance mask. Independent of the
/// segmentation backend: whatever produced the mask, only these summaries
/// enter the pipeline.
struct MaskObservation {
  /// Mask centroid, continuous pixel coordinates (u right, v down).
  Eigen::Vector2d centroid_px = Eigen::Vector2d::Zero();
  int pixel_count = 1;
  /// Isotropic spread: root of the mean of the two covariance eigenvalues.
  double spread_px = 0.0;
  /// 2x2 covariance of the mask's pixel distribution, pixels^2.
  Eigen::Matrix2d covariance_px = Eigen::Matrix2d::Zero();
  /// True when the mask intersects the image boundary (not fully visible).
  bool touches_boundary = false;
};

/// Checks the MaskObservation consistency rules: pixel_count >= 1, covariance
/// symmetric (1e-9) with eigenvalues >= -1e-12, and spread_px^2 equal to the
/// mean covariance eigenvalue within 1e-6. Throws std::invalid_argument.
void validate(const MaskObservation& mask);

/// Computes mask statistics from an explicit pixel set; boundary contact is
/// judged against the given image size.
MaskObservation mask_from_pixels(std::span<const Eigen::Vector2i> pixels,
                                 int image_width_px, int image_height_px);

struct CameraModel {
  std::string name = "camera";
  /// Angular resolution, radians per pixel.
  double angular_resolution_rad_per_px = 0.0;
  double focal_length_px = 0.0;
  /// Stereo baseline, meters.
  double baseline_m = 0.0;
  int image_width_px = 0;
  int image_height_px = 0;
  /// Camera frame -> rover frame.
  RigidTransform extrinsics;
};

/// Pinhole camera with angular resolution 1/f and the given extrinsics.
CameraModel make_pinhole_camera(std::string name, double focal_length_px,
                                double baseline_m, int image_width_px,
                                int image_height_px,
                                const RigidTransform& extrinsics = {});

/// Positivity checks plus the consistency rule between angular resolution and
/// focal length (within 10% of 1/f when both are supplied). Throws
/// std::invalid_argument.
void validate(const CameraModel& camera);

struct MaskFilterConfig {
  double s_min_m = 0.05;
  double s_max_m = 2.0;
  /// Maximum eigenvalue ratio of the pixel covariance; masks more elongated
  /// than this (shadows, terrain edges) are rejected.
  double tau_elong = 3.0;
};

void validate(const MaskFilterConfig& config);

/// One metrically sized object detection in the rover frame.
struct RoverFrameDetection {
  Point3 position = Point3::Zero();
  double size_m = 0.0;
  std::string source_camera;
};

/// Physical size estimate: spread * depth * angular resolution.
/// Throws NonPositiveDepth.
double estimate_size(const MaskObservation& mask, double depth_m,
                     const CameraModel& camera);

/// Ratio of the principal eigenvalues of the pixel covariance, >= 1.
/// Throws DegenerateMask when the smaller eigenvalue is <= 1e-12 (e.g. a
/// one-pixel-wide line).
double elongation_ratio(const MaskObservation& mask);

struct SizedMask {
  MaskObservation mask;
  double size_m = 0.0;
};

/// Keeps exactly the masks that are fully visible, sized within
/// [s_min, s_max], and not overly elongated; degenerate masks are dropped,
/// not errors. Input order is preserved.
std::vector<SizedMask> filter_masks(
    std::span<const std::pair<MaskObservation, double>> masks_with_depth,
    const CameraModel& camera, const MaskFilterConfig& config);

/// Back-projects the mask centroid at the given depth through the pinhole
/// model and maps it into the rover frame via the camera extrinsics.
///
/// Camera axis convention (used everywhere, including the synthetic
/// generator): the camera looks along +z, u points right (+x), v points down
/// (+y), right-handed; the principal point is the image center
/// (width/2, height/2). Depth is the distance along the optical axis.
///
/// Throws NonPositiveDepth and CentroidOutOfBounds.
RoverFrameDetection project_detection(const MaskObservation& mask, double depth_m,
                                      double size_m, const CameraModel& camera);

/// Stereo depth: focal_length_px * baseline_m / disparity_px.
/// Throws NonPositiveDisparity.
double depth_from_disparity(double disparity_px, const CameraModel& camera);

}  // namespace segloc
