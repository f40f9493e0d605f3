#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "segloc/dataset.hpp"
#include "segloc/geometry.hpp"
#include "segloc/mapping.hpp"

namespace segloc {

/// Desk-scale stand-in for an outdoor boulder field observed by two
/// sessions whose relative pose is known exactly.
struct SyntheticSceneConfig {
  int boulder_count = 386;
  /// Side length of the square ground patch, centered on the origin.
  double area_m = 27.0;
  double elevation_range_m = 1.0;
  /// Fraction of boulders present in both sessions; the rest are split
  /// alternately between them.
  double shared_fraction = 0.5;
  /// Per-observation Gaussian position noise (per axis).
  double position_noise_m = 0.0;
  /// Spurious persistent landmarks added to each map, uniform over the area.
  int outlier_landmarks_per_map = 0;
  std::uint64_t seed = 0;

  /// Minimum distance between boulders, so duplicate merging cannot fuse
  /// distinct objects.
  double min_separation_m = 0.8;
  double size_min_m = 0.1;
  double size_max_m = 1.2;
  /// Ground-truth offset bounds between the sessions. Zero means the exact
  /// identity, which makes self-consistency cases well defined.
  double offset_translation_m = 10.0;
  double offset_rotation_rad = 3.141592653589793;

  /// Traverse synthesis: circular scan path with this many frames and
  /// per-frame sensing radius.
  int path_frames = 36;
  double sensing_radius_m = 12.0;
};

void validate(const SyntheticSceneConfig& config);

/// Two session maps over one boulder field. map_b lives in a frame offset
/// from map_a's by ground_truth: for every shared boulder,
/// ground_truth.apply(position in a) matches its position in b up to noise.
struct SyntheticScene {
  ObjectMap map_a;
  ObjectMap map_b;
  RigidTransform ground_truth;
  /// Landmark index pairs (in map_a, in map_b) of the shared boulders,
  /// ascending by the map_a index.
  std::vector<std::pair<int, int>> shared_pairs;
};

/// Deterministic per seed, bit for bit.
SyntheticScene generate_synthetic_scene(const SyntheticSceneConfig& config);

/// The same scene rendered as two replayable traverses: a circular path whose
/// per-frame detections are the visible boulders in the rover frame, with
/// fresh observation noise per frame. traverse_b's recorded poses are offset
/// by ground_truth, so replaying it accumulates landmarks in the b frame.
struct SyntheticTraverses {
  Traverse traverse_a;
  Traverse traverse_b;
  RigidTransform ground_truth;
  /// Exact (noise-free) shared boulder positions in each session frame.
  std::vector<std::pair<Point3, Point3>> shared_positions;
};

SyntheticTraverses synthesize_traverses(const SyntheticSceneConfig& config);

}  // namespace segloc
