#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <vector>

#include <segloc/errors.hpp>
#include <segloc/mapping.hpp>
#include <segloc/random.hpp>

#include "support.hpp"

using namespace segloc;

namespace {

RoverFrameDetection detection_at(double x, double y, double z,
                                 double size_m = 0.3) {
  return RoverFrameDetection{Point3(x, y, z), size_m, "nav"};
}

ObjectMap map_of(std::vector<Landmark> landmarks) {
  ObjectMap map;
  map.landmarks = std::move(landmarks);
  return map;
}

int total_observations(const ObjectMap& map) {
  return std::accumulate(map.landmarks.begin(), map.landmarks.end(), 0,
                         [](int acc, const Landmark& lm) {
                           return acc + lm.observation_count;
                         });
}

bool maps_identical(const ObjectMap& a, const ObjectMap& b) {
  if (a.landmarks.size() != b.landmarks.size()) return false;
  for (std::size_t i = 0; i < a.landmarks.size(); ++i) {
    if (a.landmarks[i].position != b.landmarks[i].position) return false;
    if (a.landmarks[i].size_m != b.landmarks[i].size_m) return false;
    if (a.landmarks[i].observation_count != b.landmarks[i].observation_count) {
      return false;
    }
  }
  return true;
}

// Clusters of points within radius/2 of centers spaced far apart: the greedy
// pass must recover exactly the planted structure.
struct PlantedClusters {
  ObjectMap map;
  std::vector<Point3> centers;
  std::vector<int> sizes;
  std::vector<Point3> mean_positions;
};

PlantedClusters plant_clusters(SeededRng& rng, int cluster_count,
                               double radius_m) {
  PlantedClusters planted;
  while (static_cast<int>(planted.centers.size()) < cluster_count) {
    const Point3 c(rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0),
                   rng.uniform(-1.0, 1.0));
    bool ok = true;
    for (const Point3& other : planted.centers) {
      if ((c - other).norm() < 6.0 * radius_m) ok = false;
    }
    if (ok) planted.centers.push_back(c);
  }
  for (const Point3& center : planted.centers) {
    const int n = rng.uniform_int(2, 6);
    planted.sizes.push_back(n);
    Point3 sum = Point3::Zero();
    for (int i = 0; i < n; ++i) {
      Point3 p = center;
      // Perturbations within radius/2 keep the cluster diameter below the
      // merge radius.
      p += Point3(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                  rng.uniform(-1.0, 1.0))
               .normalized() *
           rng.uniform(0.0, radius_m / 2.0);
      sum += p;
      planted.map.landmarks.push_back(Landmark{p, 0.4, 1});
    }
    planted.mean_positions.push_back(sum / n);
  }
  return planted;
}

}  // namespace

TEST_CASE("accumulate places detections via the rover pose") {
  ObjectMap map;
  const std::vector<RoverFrameDetection> first = {detection_at(1, 0, 0)};
  map = accumulate(std::move(map), RigidTransform::identity(), first);
  REQUIRE(map.landmarks.size() == 1);
  CHECK((map.landmarks[0].position - Point3(1, 0, 0)).norm() < 1e-15);
  CHECK(map.landmarks[0].observation_count == 1);
  CHECK(map.landmarks[0].size_m == 0.3);

  RigidTransform shifted = RigidTransform::identity();
  shifted.translation = Point3(5, 0, 0);
  map = accumulate(std::move(map), shifted, first);
  REQUIRE(map.landmarks.size() == 2);
  CHECK((map.landmarks[1].position - Point3(6, 0, 0)).norm() < 1e-15);

  const std::vector<RoverFrameDetection> batch = {
      detection_at(0, 1, 0), detection_at(0, 0, 2), detection_at(3, 0, 0)};
  map = accumulate(std::move(map), RigidTransform::identity(), batch);
  CHECK(map.landmarks.size() == 5);
  CHECK_NOTHROW(validate(map));
}

TEST_CASE("accumulate is equivariant under a rigid change of world frame") {
  SeededRng rng(20250813);
  for (int trial = 0; trial < 50; ++trial) {
    const RigidTransform pose = testing::random_transform(rng, 10.0);
    const RigidTransform g = testing::random_transform(rng, 10.0);
    std::vector<RoverFrameDetection> detections;
    for (int i = 0; i < 8; ++i) {
      detections.push_back(detection_at(rng.uniform(-5.0, 5.0),
                                        rng.uniform(-5.0, 5.0),
                                        rng.uniform(-1.0, 1.0)));
    }
    const ObjectMap direct =
        accumulate(ObjectMap{}, compose(g, pose), detections);
    const ObjectMap staged = transform_map(
        accumulate(ObjectMap{}, pose, detections), g, "world");
    REQUIRE(direct.landmarks.size() == staged.landmarks.size());
    for (std::size_t i = 0; i < direct.landmarks.size(); ++i) {
      CHECK((direct.landmarks[i].position - staged.landmarks[i].position)
                .norm() < 1e-9);
    }
  }
}

TEST_CASE("merge collapses coincident landmarks and keeps distant ones") {
  const MergeConfig config;  // radius 0.3, min_observations 2

  ObjectMap coincident = map_of({Landmark{Point3(1, 2, 3), 0.4, 1},
                                 Landmark{Point3(1, 2, 3), 0.6, 1}});
  const ObjectMap merged = merge_duplicates(coincident, config);
  REQUIRE(merged.landmarks.size() == 1);
  CHECK((merged.landmarks[0].position - Point3(1, 2, 3)).norm() < 1e-15);
  CHECK(merged.landmarks[0].observation_count == 2);
  CHECK(merged.landmarks[0].size_m == doctest::Approx(0.5));

  MergeConfig keep_all = config;
  keep_all.min_observations = 1;
  ObjectMap distant = map_of({Landmark{Point3(0, 0, 0), 0.4, 1},
                              Landmark{Point3(3.0, 0, 0), 0.4, 1}});
  CHECK(merge_duplicates(distant, keep_all).landmarks.size() == 2);

  // Default config drops unconfirmed singletons.
  CHECK(merge_duplicates(distant, config).landmarks.empty());
}

TEST_CASE("merge recovers planted clusters exactly") {
  const MergeConfig config{0.3, 2};
  SeededRng rng(20250814);
  for (int trial = 0; trial < 20; ++trial) {
    SeededRng trial_rng(1000 + trial);
    const PlantedClusters planted = plant_clusters(trial_rng, 8, 0.3);
    const ObjectMap merged = merge_duplicates(planted.map, config);
    REQUIRE(merged.landmarks.size() == planted.centers.size());
    // Output order is not the planted order (heavier clusters come first), so
    // match each planted cluster to its unique nearby output landmark.
    std::vector<bool> used(merged.landmarks.size(), false);
    for (std::size_t k = 0; k < planted.centers.size(); ++k) {
      bool found = false;
      for (std::size_t j = 0; j < merged.landmarks.size(); ++j) {
        if (used[j]) continue;
        if ((merged.landmarks[j].position - planted.mean_positions[k]).norm() <
            1e-12) {
          CHECK(merged.landmarks[j].observation_count == planted.sizes[k]);
          used[j] = true;
          found = true;
          break;
        }
      }
      CHECK(found);
    }
  }
}

TEST_CASE("merge weights positions and sizes by observation count") {
  const MergeConfig config{0.5, 1};
  ObjectMap map = map_of({Landmark{Point3(0, 0, 0), 0.2, 3},
                          Landmark{Point3(0.4, 0, 0), 0.6, 1}});
  const ObjectMap merged = merge_duplicates(map, config);
  REQUIRE(merged.landmarks.size() == 1);
  CHECK((merged.landmarks[0].position - Point3(0.1, 0, 0)).norm() < 1e-15);
  CHECK(merged.landmarks[0].size_m == doctest::Approx(0.3));
  CHECK(merged.landmarks[0].observation_count == 4);
}

TEST_CASE("merge processes heavier landmarks first") {
  // The count-5 landmark seeds the first cluster even though it was inserted
  // last, so the count-1 landmark joins its centroid rather than seeding.
  const MergeConfig config{1.0, 1};
  ObjectMap map = map_of({Landmark{Point3(0.9, 0, 0), 0.4, 1},
                          Landmark{Point3(0, 0, 0), 0.4, 5}});
  const ObjectMap merged = merge_duplicates(map, config);
  REQUIRE(merged.landmarks.size() == 1);
  CHECK((merged.landmarks[0].position - Point3(0.15, 0, 0)).norm() < 1e-12);
}

TEST_CASE("merge is idempotent and conserves observations") {
  for (int seed = 0; seed < 40; ++seed) {
    SeededRng rng(seed);
    ObjectMap map;
    const int n = rng.uniform_int(1, 120);
    for (int i = 0; i < n; ++i) {
      map.landmarks.push_back(
          Landmark{Point3(rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0),
                          rng.uniform(-0.5, 0.5)),
                   rng.uniform(0.1, 1.0),
                   static_cast<int>(rng.uniform_int(1, 3))});
    }
    MergeConfig config{rng.uniform(0.1, 1.0), 1};
    const ObjectMap once = merge_duplicates(map, config);
    const ObjectMap twice = merge_duplicates(once, config);
    CHECK(maps_identical(once, twice));
    CHECK(total_observations(once) == total_observations(map));
    CHECK(once.landmarks.size() <= map.landmarks.size());

    // Every surviving centroid stays close to the observations it absorbed.
    for (const Landmark& lm : once.landmarks) {
      double nearest = 1e300;
      for (const Landmark& input : map.landmarks) {
        nearest = std::min(nearest, (lm.position - input.position).norm());
      }
      CHECK(nearest <= config.cluster_radius_m);
    }

    // Dropping unconfirmed clusters removes observations but never invents
    // them.
    config.min_observations = 3;
    const ObjectMap strict = merge_duplicates(map, config);
    CHECK(total_observations(strict) <= total_observations(map));
    for (const Landmark& lm : strict.landmarks) {
      CHECK(lm.observation_count >= 3);
    }
  }
}

TEST_CASE("merge commutes with rigid map transforms on separated data") {
  const MergeConfig config{0.3, 1};
  for (int seed = 0; seed < 20; ++seed) {
    SeededRng rng(500 + seed);
    const PlantedClusters planted = plant_clusters(rng, 6, 0.3);
    const RigidTransform g = testing::random_transform(rng, 15.0);

    const ObjectMap a =
        transform_map(merge_duplicates(planted.map, config), g, "world");
    const ObjectMap b =
        merge_duplicates(transform_map(planted.map, g, "world"), config);
    REQUIRE(a.landmarks.size() == b.landmarks.size());
    for (std::size_t i = 0; i < a.landmarks.size(); ++i) {
      CHECK((a.landmarks[i].position - b.landmarks[i].position).norm() < 1e-9);
      CHECK(a.landmarks[i].observation_count == b.landmarks[i].observation_count);
    }
  }
}

TEST_CASE("map_bounds covers all landmarks") {
  ObjectMap single = map_of({Landmark{Point3(1, -2, 3), 0.4, 1}});
  const Aabb degenerate = map_bounds(single);
  CHECK((degenerate.min - Point3(1, -2, 3)).norm() < 1e-15);
  CHECK((degenerate.max - Point3(1, -2, 3)).norm() < 1e-15);

  ObjectMap pair = map_of({Landmark{Point3(0, 0, 0), 0.4, 1},
                           Landmark{Point3(1, 2, 3), 0.4, 1}});
  const Aabb box = map_bounds(pair);
  CHECK((box.min - Point3(0, 0, 0)).norm() < 1e-15);
  CHECK((box.max - Point3(1, 2, 3)).norm() < 1e-15);

  ObjectMap mixed = map_of({Landmark{Point3(5, -1, 2), 0.4, 1},
                            Landmark{Point3(-3, 4, 0), 0.4, 1},
                            Landmark{Point3(1, 1, -7), 0.4, 1}});
  const Aabb b = map_bounds(mixed);
  CHECK((b.min - Point3(-3, -1, -7)).norm() < 1e-15);
  CHECK((b.max - Point3(5, 4, 2)).norm() < 1e-15);

  CHECK_THROWS_AS(map_bounds(ObjectMap{}), EmptyMap);
}

TEST_CASE("transform_map moves positions only") {
  SeededRng rng(99);
  ObjectMap map = map_of({Landmark{Point3(1, 0, 0), 0.25, 3},
                          Landmark{Point3(0, 2, 0), 0.5, 1}});
  const RigidTransform g = testing::random_transform(rng, 5.0);
  const ObjectMap out = transform_map(map, g, "session_b");
  CHECK(out.frame_name == "session_b");
  REQUIRE(out.landmarks.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK((out.landmarks[i].position - g.apply(map.landmarks[i].position))
              .norm() < 1e-12);
    CHECK(out.landmarks[i].size_m == map.landmarks[i].size_m);
    CHECK(out.landmarks[i].observation_count ==
          map.landmarks[i].observation_count);
  }

  // Round trip through the inverse restores the original positions.
  const ObjectMap back = transform_map(out, invert(g), "world");
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK((back.landmarks[i].position - map.landmarks[i].position).norm() <
          1e-9);
  }
}

TEST_CASE("validation rejects malformed maps and configs") {
  ObjectMap bad_size = map_of({Landmark{Point3(0, 0, 0), 0.0, 1}});
  CHECK_THROWS_AS(validate(bad_size), std::invalid_argument);

  ObjectMap bad_count = map_of({Landmark{Point3(0, 0, 0), 0.4, 0}});
  CHECK_THROWS_AS(validate(bad_count), std::invalid_argument);

  ObjectMap bad_position = map_of(
      {Landmark{Point3(std::numeric_limits<double>::quiet_NaN(), 0, 0), 0.4, 1}});
  CHECK_THROWS_AS(validate(bad_position), std::invalid_argument);

  CHECK_THROWS_AS(validate(MergeConfig{0.0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(validate(MergeConfig{0.3, 0}), std::invalid_argument);
  CHECK_NOTHROW(validate(MergeConfig{}));
}
