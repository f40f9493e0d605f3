#pragma once

#include <span>
#include <string>
#include <vector>

#include "segloc/geometry.hpp"
#include "segloc/mask_pipeline.hpp"

namespace segloc {

/// One unique object in a session map: a merged position, a representative
/// size, and how many detections contributed to it.
struct Landmark {
  Point3 position = Point3::Zero();
  double size_m = 0.0;
  int observation_count = 1;
};

/// Immutable snapshot of a session's object map. Operations return new maps.
struct ObjectMap {
  std::string frame_name = "world";
  std::vector<Landmark> landmarks;
};

/// Checks finiteness, positive sizes, and observation_count >= 1.
/// Throws std::invalid_argument.
void validate(const ObjectMap& map);

struct MergeConfig {
  /// Landmarks within this distance of a cluster's running centroid join it.
  double cluster_radius_m = 0.3;
  /// Clusters backed by fewer total observations than this are dropped.
  int min_observations = 2;
};

void validate(const MergeConfig& config);

struct Aabb {
  Point3 min = Point3::Zero();
  Point3 max = Point3::Zero();
};

/// Appends the detections to the map, transformed into the map frame by the
/// rover pose. Each detection becomes a landmark with observation_count 1.
ObjectMap accumulate(ObjectMap map, const RigidTransform& rover_pose,
                     std::span<const RoverFrameDetection> detections);

/// Collapses repeated observations of the same object by greedy radius
/// clustering, applied repeatedly until the result stops changing (so the
/// operation is idempotent). Landmarks are processed in descending
/// observation_count, ties by insertion order; each joins the first cluster
/// whose running centroid lies within cluster_radius_m, else seeds a new one.
/// Cluster positions and sizes are observation-count-weighted means. Clusters
/// with fewer than min_observations total observations are dropped at the
/// end, after clustering has converged.
ObjectMap merge_duplicates(ObjectMap map, const MergeConfig& config);

/// Axis-aligned bounds over landmark positions. Throws EmptyMap.
Aabb map_bounds(const ObjectMap& map);

/// Applies a rigid transform to every landmark position; sizes and counts are
/// unchanged. The returned map carries the given frame name.
ObjectMap transform_map(ObjectMap map, const RigidTransform& transform,
                        std::string new_frame_name);

}  // namespace segloc
