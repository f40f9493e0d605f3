#include "segloc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "segloc/random.hpp"

namespace segloc {

void validate(const SyntheticSceneConfig& config) {
  if (config.boulder_count < 4) {
    throw std::invalid_argument("boulder_count must be >= 4");
  }
  if (config.shared_fraction < 0.0 || config.shared_fraction > 1.0) {
    throw std::invalid_argument("shared_fraction must be in [0, 1]");
  }
  if (!(config.area_m > 0.0) || config.elevation_range_m < 0.0) {
    throw std::invalid_argument("scene extents must be positive");
  }
  if (config.position_noise_m < 0.0 || config.outlier_landmarks_per_map < 0) {
    throw std::invalid_argument("noise and outlier counts must be nonnegative");
  }
  if (config.min_separation_m < 0.0) {
    throw std::invalid_argument("min_separation_m must be nonnegative");
  }
  if (!(config.size_min_m > 0.0) || config.size_max_m < config.size_min_m) {
    throw std::invalid_argument("size bounds must satisfy 0 < min <= max");
  }
  if (config.offset_translation_m < 0.0 || config.offset_rotation_rad < 0.0) {
    throw std::invalid_argument("offset bounds must be nonnegative");
  }
  if (config.path_frames < 4 || !(config.sensing_radius_m > 0.0)) {
    throw std::invalid_argument("path needs >= 4 frames and positive range");
  }
}

namespace {

struct Boulder {
  Point3 position;
  double size_m;
};

std::vector<Boulder> place_boulders(const SyntheticSceneConfig& config,
                                    SeededRng& rng) {
  std::vector<Boulder> boulders;
  boulders.reserve(config.boulder_count);
  const double half = config.area_m / 2.0;
  const long max_attempts = 1000L * config.boulder_count + 1000L;
  long attempts = 0;
  while (static_cast<int>(boulders.size()) < config.boulder_count) {
    if (++attempts > max_attempts) {
      throw std::invalid_argument(
          "cannot place boulders: min_separation_m too large for the area");
    }
    const Point3 p(rng.uniform(-half, half), rng.uniform(-half, half),
                   rng.uniform(0.0, config.elevation_range_m));
    bool clear = true;
    for (const Boulder& other : boulders) {
      if ((p - other.position).norm() < config.min_separation_m) {
        clear = false;
        break;
      }
    }
    if (clear) {
      boulders.push_back(
          Boulder{p, rng.uniform(config.size_min_m, config.size_max_m)});
    }
  }
  return boulders;
}

// Membership of each boulder: shared, only session a, or only session b.
struct SceneSplit {
  std::vector<int> shared;
  std::vector<int> only_a;
  std::vector<int> only_b;
};

SceneSplit split_boulders(const SyntheticSceneConfig& config, SeededRng& rng) {
  std::vector<int> order(config.boulder_count);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const int shared_count = static_cast<int>(
      std::llround(config.shared_fraction * config.boulder_count));
  SceneSplit split;
  split.shared.assign(order.begin(), order.begin() + shared_count);
  for (int k = shared_count; k < config.boulder_count; ++k) {
    ((k - shared_count) % 2 == 0 ? split.only_a : split.only_b)
        .push_back(order[k]);
  }
  return split;
}

RigidTransform sample_offset(const SyntheticSceneConfig& config,
                             SeededRng& rng) {
  RigidTransform g;
  g.rotation = rng.bounded_rotation(config.offset_rotation_rad);
  g.translation =
      Point3(rng.uniform(-config.offset_translation_m,
                         config.offset_translation_m),
             rng.uniform(-config.offset_translation_m,
                         config.offset_translation_m),
             rng.uniform(-config.offset_translation_m,
                         config.offset_translation_m));
  return g;
}

}  // namespace

SyntheticScene generate_synthetic_scene(const SyntheticSceneConfig& config) {
  validate(config);
  SeededRng rng(config.seed);
  const std::vector<Boulder> boulders = place_boulders(config, rng);
  const SceneSplit split = split_boulders(config, rng);

  SyntheticScene scene;
  scene.ground_truth = sample_offset(config, rng);
  scene.map_a.frame_name = "synthetic_a";
  scene.map_b.frame_name = "synthetic_b";

  // Assemble each map with a tag linking shared entries back to the boulder,
  // then shuffle so landmark order carries no correspondence hint.
  struct Entry {
    Landmark landmark;
    int shared_slot;  // index into split.shared, or -1
  };
  const double half = config.area_m / 2.0;

  auto observe = [&](const Boulder& b) {
    return Landmark{b.position + rng.normal_vec3(config.position_noise_m),
                    b.size_m, 1};
  };

  std::vector<Entry> entries_a;
  for (std::size_t s = 0; s < split.shared.size(); ++s) {
    entries_a.push_back(
        Entry{observe(boulders[split.shared[s]]), static_cast<int>(s)});
  }
  for (const int idx : split.only_a) {
    entries_a.push_back(Entry{observe(boulders[idx]), -1});
  }
  for (int k = 0; k < config.outlier_landmarks_per_map; ++k) {
    entries_a.push_back(Entry{
        Landmark{Point3(rng.uniform(-half, half), rng.uniform(-half, half),
                        rng.uniform(0.0, config.elevation_range_m)),
                 rng.uniform(config.size_min_m, config.size_max_m), 1},
        -1});
  }

  std::vector<Entry> entries_b;
  for (std::size_t s = 0; s < split.shared.size(); ++s) {
    Entry e{observe(boulders[split.shared[s]]), static_cast<int>(s)};
    e.landmark.position = scene.ground_truth.apply(e.landmark.position);
    entries_b.push_back(std::move(e));
  }
  for (const int idx : split.only_b) {
    Entry e{observe(boulders[idx]), -1};
    e.landmark.position = scene.ground_truth.apply(e.landmark.position);
    entries_b.push_back(std::move(e));
  }
  for (int k = 0; k < config.outlier_landmarks_per_map; ++k) {
    Entry e{Landmark{Point3(rng.uniform(-half, half), rng.uniform(-half, half),
                            rng.uniform(0.0, config.elevation_range_m)),
                     rng.uniform(config.size_min_m, config.size_max_m), 1},
            -1};
    e.landmark.position = scene.ground_truth.apply(e.landmark.position);
    entries_b.push_back(std::move(e));
  }

  rng.shuffle(entries_a);
  rng.shuffle(entries_b);

  std::vector<int> slot_to_a(split.shared.size(), -1);
  std::vector<int> slot_to_b(split.shared.size(), -1);
  for (std::size_t i = 0; i < entries_a.size(); ++i) {
    scene.map_a.landmarks.push_back(entries_a[i].landmark);
    if (entries_a[i].shared_slot >= 0) {
      slot_to_a[entries_a[i].shared_slot] = static_cast<int>(i);
    }
  }
  for (std::size_t i = 0; i < entries_b.size(); ++i) {
    scene.map_b.landmarks.push_back(entries_b[i].landmark);
    if (entries_b[i].shared_slot >= 0) {
      slot_to_b[entries_b[i].shared_slot] = static_cast<int>(i);
    }
  }
  for (std::size_t s = 0; s < split.shared.size(); ++s) {
    scene.shared_pairs.emplace_back(slot_to_a[s], slot_to_b[s]);
  }
  std::sort(scene.shared_pairs.begin(), scene.shared_pairs.end());
  return scene;
}

SyntheticTraverses synthesize_traverses(const SyntheticSceneConfig& config) {
  validate(config);
  SeededRng rng(config.seed);
  const std::vector<Boulder> boulders = place_boulders(config, rng);
  const SceneSplit split = split_boulders(config, rng);

  SyntheticTraverses out;
  out.ground_truth = sample_offset(config, rng);

  const double half = config.area_m / 2.0;
  auto make_outliers = [&](int count) {
    std::vector<Boulder> extras;
    for (int k = 0; k < count; ++k) {
      extras.push_back(Boulder{
          Point3(rng.uniform(-half, half), rng.uniform(-half, half),
                 rng.uniform(0.0, config.elevation_range_m)),
          rng.uniform(config.size_min_m, config.size_max_m)});
    }
    return extras;
  };

  std::vector<Boulder> content_a;
  std::vector<Boulder> content_b;
  for (const int idx : split.shared) {
    content_a.push_back(boulders[idx]);
    content_b.push_back(boulders[idx]);
  }
  for (const int idx : split.only_a) {
    content_a.push_back(boulders[idx]);
  }
  for (const int idx : split.only_b) {
    content_b.push_back(boulders[idx]);
  }
  const std::vector<Boulder> outliers_a =
      make_outliers(config.outlier_landmarks_per_map);
  const std::vector<Boulder> outliers_b =
      make_outliers(config.outlier_landmarks_per_map);
  content_a.insert(content_a.end(), outliers_a.begin(), outliers_a.end());
  content_b.insert(content_b.end(), outliers_b.begin(), outliers_b.end());

  // Circular scan path in the world frame.
  const double path_radius = config.area_m / 3.0;
  auto path_pose = [&](int frame) {
    const double theta =
        2.0 * 3.141592653589793 * frame / config.path_frames;
    RigidTransform pose;
    const double yaw = theta + 3.141592653589793 / 2.0;
    pose.rotation = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ())
                        .toRotationMatrix();
    pose.translation = Point3(path_radius * std::cos(theta),
                              path_radius * std::sin(theta), 0.5);
    return pose;
  };

  auto record_traverse = [&](const std::vector<Boulder>& content,
                             const RigidTransform& session_offset,
                             double time_offset) {
    Traverse traverse;
    for (int frame = 0; frame < config.path_frames; ++frame) {
      const RigidTransform pose_world = path_pose(frame);
      const RigidTransform pose_inv = invert(pose_world);
      TraverseRecord record;
      record.frame_index = frame;
      record.mission_time_s = frame + time_offset;
      record.rover_pose = compose(session_offset, pose_world);
      for (const Boulder& b : content) {
        if ((b.position - pose_world.translation).norm() >
            config.sensing_radius_m) {
          continue;
        }
        const Point3 observed =
            b.position + rng.normal_vec3(config.position_noise_m);
        record.detections.push_back(RoverFrameDetection{
            pose_inv.apply(observed), b.size_m, "synthetic"});
      }
      traverse.push_back(std::move(record));
    }
    return traverse;
  };

  out.traverse_a = record_traverse(content_a, RigidTransform::identity(), 0.0);
  out.traverse_b = record_traverse(content_b, out.ground_truth, 0.5);

  for (const int idx : split.shared) {
    out.shared_positions.emplace_back(
        boulders[idx].position,
        out.ground_truth.apply(boulders[idx].position));
  }
  return out;
}

}  // namespace segloc
