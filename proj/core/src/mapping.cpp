#include "segloc/mapping.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "segloc/errors.hpp"

namespace segloc {
namespace {

struct Cluster {
  Point3 weighted_sum = Point3::Zero();
  double weighted_size_sum = 0.0;
  int total_count = 0;
  int member_count = 0;
  Landmark first_member;

  Point3 centroid() const {
    // Single-member clusters keep their landmark bit-for-bit, so a converged
    // map passes through another merge unchanged.
    if (member_count == 1) {
      return first_member.position;
    }
    return weighted_sum / total_count;
  }

  Landmark to_landmark() const {
    if (member_count == 1) {
      return first_member;
    }
    return Landmark{weighted_sum / total_count,
                    weighted_size_sum / total_count, total_count};
  }

  void absorb(const Landmark& lm) {
    if (member_count == 0) {
      first_member = lm;
    }
    weighted_sum += lm.observation_count * lm.position;
    weighted_size_sum += lm.observation_count * lm.size_m;
    total_count += lm.observation_count;
    ++member_count;
  }
};

// One greedy clustering pass; returns one landmark per cluster, in cluster
// creation order.
std::vector<Landmark> cluster_pass(const std::vector<Landmark>& landmarks,
                                   double radius_m) {
  std::vector<std::size_t> order(landmarks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return landmarks[a].observation_count >
                            landmarks[b].observation_count;
                   });

  std::vector<Cluster> clusters;
  clusters.reserve(landmarks.size());
  for (const std::size_t idx : order) {
    const Landmark& lm = landmarks[idx];
    Cluster* home = nullptr;
    for (Cluster& cluster : clusters) {
      if ((lm.position - cluster.centroid()).norm() <= radius_m) {
        home = &cluster;
        break;
      }
    }
    if (home == nullptr) {
      home = &clusters.emplace_back();
    }
    home->absorb(lm);
  }

  std::vector<Landmark> merged;
  merged.reserve(clusters.size());
  for (const Cluster& cluster : clusters) {
    merged.push_back(cluster.to_landmark());
  }
  return merged;
}

}  // namespace

void validate(const ObjectMap& map) {
  for (const Landmark& lm : map.landmarks) {
    if (!lm.position.allFinite()) {
      throw std::invalid_argument("landmark position must be finite");
    }
    if (!(lm.size_m > 0.0)) {
      throw std::invalid_argument("landmark size must be positive");
    }
    if (lm.observation_count < 1) {
      throw std::invalid_argument("landmark observation_count must be >= 1");
    }
  }
}

void validate(const MergeConfig& config) {
  if (!(config.cluster_radius_m > 0.0)) {
    throw std::invalid_argument("cluster radius must be positive");
  }
  if (config.min_observations < 1) {
    throw std::invalid_argument("min_observations must be >= 1");
  }
}

ObjectMap accumulate(ObjectMap map, const RigidTransform& rover_pose,
                     std::span<const RoverFrameDetection> detections) {
  if (!is_rigid(rover_pose)) {
    throw std::invalid_argument("rover pose must be rigid");
  }
  map.landmarks.reserve(map.landmarks.size() + detections.size());
  for (const RoverFrameDetection& det : detections) {
    map.landmarks.push_back(
        Landmark{rover_pose.apply(det.position), det.size_m, 1});
  }
  return map;
}

ObjectMap merge_duplicates(ObjectMap map, const MergeConfig& config) {
  validate(config);
  std::vector<Landmark> current = std::move(map.landmarks);
  while (true) {
    std::vector<Landmark> next = cluster_pass(current, config.cluster_radius_m);
    const bool converged = next.size() == current.size();
    current = std::move(next);
    if (converged) {
      break;
    }
  }
  std::erase_if(current, [&](const Landmark& lm) {
    return lm.observation_count < config.min_observations;
  });
  map.landmarks = std::move(current);
  return map;
}

Aabb map_bounds(const ObjectMap& map) {
  if (map.landmarks.empty()) {
    throw EmptyMap("cannot compute bounds of an empty map");
  }
  Aabb box{map.landmarks.front().position, map.landmarks.front().position};
  for (const Landmark& lm : map.landmarks) {
    box.min = box.min.cwiseMin(lm.position);
    box.max = box.max.cwiseMax(lm.position);
  }
  return box;
}

ObjectMap transform_map(ObjectMap map, const RigidTransform& transform,
                        std::string new_frame_name) {
  if (!is_rigid(transform)) {
    throw std::invalid_argument("map transform must be rigid");
  }
  for (Landmark& lm : map.landmarks) {
    lm.position = transform.apply(lm.position);
  }
  map.frame_name = std::move(new_frame_name);
  return map;
}

}  // namespace segloc
