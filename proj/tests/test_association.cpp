#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

#include <segloc/association.hpp>
#include <segloc/errors.hpp>
#include <segloc/mapping.hpp>
#include <segloc/random.hpp>

#include "support.hpp"

using namespace segloc;

namespace {

ObjectMap map_from_points(const std::vector<Point3>& points,
                          std::string frame_name, double size_m = 0.4) {
  ObjectMap map;
  map.frame_name = std::move(frame_name);
  for (const Point3& p : points) {
    map.landmarks.push_back(Landmark{p, size_m, 1});
  }
  return map;
}

ConsistencyGraph graph_from_edges(
    int n, const std::vector<std::pair<int, int>>& edges) {
  ConsistencyGraph graph;
  graph.affinity = BinaryAffinity(n);
  for (const auto& [i, j] : edges) {
    graph.affinity.set_edge(i, j);
  }
  graph.candidates.resize(n);
  for (int i = 0; i < n; ++i) {
    graph.candidates[i] = CandidateAssociation{i, i};
  }
  return graph;
}

// Exhaustive subset enumeration: maximum-size clique, lexicographically
// smallest index set on ties. Usable up to ~20 vertices.
std::vector<int> enumerate_max_clique(const BinaryAffinity& a) {
  const int n = a.size();
  std::vector<int> best;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i) {
      if ((mask >> i) & 1) {
        members.push_back(i);
      }
    }
    if (!a.is_clique(members)) {
      continue;
    }
    if (members.size() > best.size() ||
        (members.size() == best.size() && members < best)) {
      best = members;
    }
  }
  return best;
}

struct PlantedInstance {
  ConsistencyGraph graph;
  std::vector<int> planted;  // ascending
};

PlantedInstance planted_clique(SeededRng& rng, int n, int clique_size,
                               double noise_edge_prob) {
  PlantedInstance inst;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  inst.planted.assign(order.begin(), order.begin() + clique_size);
  std::sort(inst.planted.begin(), inst.planted.end());

  std::vector<bool> in_clique(n, false);
  for (const int v : inst.planted) {
    in_clique[v] = true;
  }
  inst.graph.affinity = BinaryAffinity(n);
  inst.graph.candidates.resize(n);
  for (int i = 0; i < n; ++i) {
    inst.graph.candidates[i] = CandidateAssociation{i, i};
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (in_clique[i] && in_clique[j]) {
        inst.graph.affinity.set_edge(i, j);
      } else if (rng.uniform() < noise_edge_prob) {
        inst.graph.affinity.set_edge(i, j);
      }
    }
  }
  return inst;
}

}  // namespace

TEST_CASE("affinity storage and matvec agree with a dense oracle") {
  SeededRng rng(20250815);
  for (const int n : {1, 5, 63, 64, 65, 130}) {
    BinaryAffinity a(n);
    std::vector<std::vector<bool>> dense(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) {
      dense[i][i] = true;
    }
    const int edges = n * 2;
    for (int e = 0; e < edges; ++e) {
      const int i = static_cast<int>(rng.uniform_int(0, n - 1));
      const int j = static_cast<int>(rng.uniform_int(0, n - 1));
      if (i == j) continue;
      a.set_edge(i, j);
      dense[i][j] = dense[j][i] = true;
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        CHECK(a.test(i, j) == dense[i][j]);
      }
    }
    std::vector<double> u(n);
    for (double& x : u) {
      x = rng.uniform(0.0, 1.0);
    }
    std::vector<double> got(n, -1.0);
    a.multiply(u, got);
    for (int i = 0; i < n; ++i) {
      double want = 0.0;
      for (int j = 0; j < n; ++j) {
        if (dense[i][j]) {
          want += u[j];
        }
      }
      CHECK(got[i] == want);
    }
  }
}

TEST_CASE("candidate generation enumerates pairs row-major") {
  std::vector<Point3> pa = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  std::vector<Point3> pb = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  const ObjectMap a = map_from_points(pa, "session_a");
  const ObjectMap b = map_from_points(pb, "session_b");
  AssociationConfig config;

  const auto candidates = generate_candidates(a, b, config);
  REQUIRE(candidates.size() == 12);
  for (int k = 0; k < 12; ++k) {
    CHECK(candidates[k].source_index == k / 4);
    CHECK(candidates[k].target_index == k % 4);
  }
}

TEST_CASE("candidate generation honors the size gate") {
  ObjectMap a = map_from_points({{0, 0, 0}}, "session_a");
  a.landmarks[0].size_m = 0.1;
  ObjectMap b = map_from_points({{0, 0, 0}, {1, 0, 0}}, "session_b");
  b.landmarks[0].size_m = 0.1;
  b.landmarks[1].size_m = 1.0;

  AssociationConfig config;
  config.size_gate_ratio = 2.0;
  const auto gated = generate_candidates(a, b, config);
  REQUIRE(gated.size() == 1);
  CHECK(gated[0].source_index == 0);
  CHECK(gated[0].target_index == 0);

  config.size_gate_ratio = 0.0;
  CHECK(generate_candidates(a, b, config).size() == 2);
}

TEST_CASE("candidate count is the landmark product at session scale") {
  SeededRng rng(42);
  const auto points_a = testing::random_points(rng, 36, 13.0);
  const auto points_b = testing::random_points(rng, 62, 13.0);
  const ObjectMap a = map_from_points(points_a, "session_a");
  const ObjectMap b = map_from_points(points_b, "session_b");
  CHECK(generate_candidates(a, b, AssociationConfig{}).size() == 36 * 62);
}

TEST_CASE("candidate generation rejects empty maps and same-frame pairs") {
  const ObjectMap a = map_from_points({{0, 0, 0}, {1, 0, 0}}, "world");
  const ObjectMap b = map_from_points({{0, 0, 0}}, "world");
  AssociationConfig config;
  CHECK_THROWS_AS(generate_candidates(ObjectMap{}, b, config), EmptyMap);
  ObjectMap empty_other;
  empty_other.frame_name = "other";
  CHECK_THROWS_AS(generate_candidates(a, empty_other, config), EmptyMap);
  CHECK_THROWS_AS(generate_candidates(a, b, config), SameFrameComparison);
  config.allow_same_frame = true;
  CHECK(generate_candidates(a, b, config).size() == 2);
}

TEST_CASE("affinity edges follow the distance-preservation rule") {
  const double eps = 0.10;
  AssociationConfig config;
  config.epsilon_m = eps;

  // Two candidate matches whose endpoint separations agree exactly.
  ObjectMap a = map_from_points({{0, 0, 0}, {2, 0, 0}}, "session_a");
  ObjectMap b = map_from_points({{5, 5, 0}, {5, 3, 0}}, "session_b");
  std::vector<CandidateAssociation> pair = {{0, 0}, {1, 1}};
  ConsistencyGraph match = build_affinity(pair, a, b, config);
  CHECK(match.affinity.test(0, 1));
  CHECK(match.affinity.test(0, 0));
  CHECK(match.affinity.test(1, 1));

  // Stretch the target separation past the tolerance.
  ObjectMap b_far = map_from_points({{5, 5, 0}, {5, 3.0 - 2.0 * eps, 0}},
                                    "session_b");
  ConsistencyGraph miss = build_affinity(pair, a, b_far, config);
  CHECK_FALSE(miss.affinity.test(0, 1));

  // Exactly at the tolerance boundary: still consistent (inclusive). Uses
  // binary-exact values so the difference is exactly epsilon.
  AssociationConfig exact_config;
  exact_config.epsilon_m = 0.125;
  ObjectMap b_edge = map_from_points({{5, 5, 0}, {5, 2.875, 0}}, "session_b");
  CHECK(build_affinity(pair, a, b_edge, exact_config).affinity.test(0, 1));

  // Candidates reusing a landmark are never consistent.
  std::vector<CandidateAssociation> shared_source = {{0, 0}, {0, 1}};
  ObjectMap b_near = map_from_points({{5, 5, 0}, {5, 5.01, 0}}, "session_b");
  CHECK_FALSE(build_affinity(shared_source, a, b_near, config)
                  .affinity.test(0, 1));
  std::vector<CandidateAssociation> shared_target = {{0, 0}, {1, 0}};
  ObjectMap a_near = map_from_points({{0, 0, 0}, {0.01, 0, 0}}, "session_a");
  CHECK_FALSE(build_affinity(shared_target, a_near, b, config)
                  .affinity.test(0, 1));

  CHECK_THROWS_AS(build_affinity({}, a, b, config), std::invalid_argument);
  std::vector<CandidateAssociation> out_of_range = {{0, 7}};
  CHECK_THROWS_AS(build_affinity(out_of_range, a, b, config),
                  std::invalid_argument);
}

TEST_CASE("affinity is symmetric, unit-diagonal, and role-transposable") {
  SeededRng rng(20250816);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pa = testing::random_points(rng, 9, 10.0);
    const auto pb = testing::random_points(rng, 7, 10.0);
    const ObjectMap a = map_from_points(pa, "session_a");
    const ObjectMap b = map_from_points(pb, "session_b");
    AssociationConfig config;
    config.epsilon_m = rng.uniform(0.05, 2.0);

    auto candidates = generate_candidates(a, b, config);
    const ConsistencyGraph g = build_affinity(candidates, a, b, config);

    std::vector<CandidateAssociation> swapped;
    swapped.reserve(candidates.size());
    for (const auto& c : candidates) {
      swapped.push_back(CandidateAssociation{c.target_index, c.source_index});
    }
    const ConsistencyGraph gt = build_affinity(swapped, b, a, config);

    const int n = g.affinity.size();
    REQUIRE(gt.affinity.size() == n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        CHECK(g.affinity.test(i, j) == g.affinity.test(j, i));
        CHECK(g.affinity.test(i, j) == gt.affinity.test(i, j));
      }
      CHECK(g.affinity.test(i, i));
    }
  }
}

TEST_CASE("affinity is invariant under a rigid transform of one map") {
  SeededRng rng(20250817);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pa = testing::random_points(rng, 8, 10.0);
    const auto pb = testing::random_points(rng, 8, 10.0);
    const ObjectMap a = map_from_points(pa, "session_a");
    const ObjectMap b = map_from_points(pb, "session_b");
    AssociationConfig config;

    auto candidates = generate_candidates(a, b, config);
    const ConsistencyGraph before = build_affinity(candidates, a, b, config);

    const ObjectMap b_moved =
        transform_map(b, testing::random_transform(rng, 50.0), "session_b");
    const ConsistencyGraph after = build_affinity(candidates, a, b_moved, config);

    for (int i = 0; i < before.affinity.size(); ++i) {
      for (int j = 0; j < before.affinity.size(); ++j) {
        CHECK(before.affinity.test(i, j) == after.affinity.test(i, j));
      }
    }
  }
}

TEST_CASE("growing epsilon never removes affinity edges") {
  SeededRng rng(20250818);
  const auto pa = testing::random_points(rng, 10, 12.0);
  const auto pb = testing::random_points(rng, 10, 12.0);
  const ObjectMap a = map_from_points(pa, "session_a");
  const ObjectMap b = map_from_points(pb, "session_b");

  AssociationConfig narrow;
  narrow.epsilon_m = 0.2;
  AssociationConfig wide;
  wide.epsilon_m = 1.1;

  auto candidates = generate_candidates(a, b, narrow);
  const ConsistencyGraph gn = build_affinity(candidates, a, b, narrow);
  const ConsistencyGraph gw = build_affinity(candidates, a, b, wide);
  int extra = 0;
  for (int i = 0; i < gn.affinity.size(); ++i) {
    for (int j = 0; j < gn.affinity.size(); ++j) {
      if (gn.affinity.test(i, j)) {
        CHECK(gw.affinity.test(i, j));
      } else if (gw.affinity.test(i, j)) {
        ++extra;
      }
    }
  }
  CHECK(extra > 0);  // the wider tolerance must actually add edges here
}

TEST_CASE("relaxation solver handles forced instances") {
  // Complete graph: everything selected, density = size.
  ConsistencyGraph complete = graph_from_edges(
      4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  const CliqueSolution all = solve_densest_clique(complete);
  CHECK(all.selected == std::vector<int>{0, 1, 2, 3});
  CHECK(all.density == doctest::Approx(4.0));

  // Two disjoint cliques: the larger one wins.
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) {
      edges.emplace_back(i, j);
    }
  }
  for (int i = 5; i < 8; ++i) {
    for (int j = i + 1; j < 8; ++j) {
      edges.emplace_back(i, j);
    }
  }
  const CliqueSolution five = solve_densest_clique(graph_from_edges(8, edges));
  CHECK(five.selected == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(five.density == doctest::Approx(5.0));

  // No consistent pair at all.
  CHECK_THROWS_AS(solve_densest_clique(graph_from_edges(5, {})),
                  NoConsistentSet);
  CHECK_THROWS_AS(solve_densest_clique(graph_from_edges(1, {})),
                  NoConsistentSet);
  CHECK_THROWS_AS(solve_densest_clique(ConsistencyGraph{}), NoConsistentSet);
}

TEST_CASE("relaxation solver recovers planted cliques") {
  int exact_match = 0;
  const int trials = 25;
  for (int trial = 0; trial < trials; ++trial) {
    SeededRng rng(3000 + trial);
    const PlantedInstance inst = planted_clique(rng, 50, 12, 0.1);
    const CliqueSolution relaxed = solve_densest_clique(inst.graph);

    // Whatever is returned must satisfy the constraint exactly.
    CHECK(inst.graph.affinity.is_clique(relaxed.selected));

    const CliqueSolution exact = solve_densest_clique_exact(inst.graph, 50);
    CHECK(relaxed.density <= exact.density + 1e-12);
    if (relaxed.selected == inst.planted) {
      ++exact_match;
    }
  }
  // Planted recovery is the common case; the acceptance harness tracks the
  // exact rate over a larger family.
  CHECK(exact_match >= trials - 1);
}

TEST_CASE("relaxation solver is deterministic") {
  SeededRng rng(909);
  const PlantedInstance inst = planted_clique(rng, 40, 9, 0.15);
  const CliqueSolution first = solve_densest_clique(inst.graph);
  const CliqueSolution second = solve_densest_clique(inst.graph);
  CHECK(first.selected == second.selected);
  CHECK(first.density == second.density);
}

TEST_CASE("exact solver matches subset enumeration") {
  // Hand cases first.
  ConsistencyGraph edgeless = graph_from_edges(5, {});
  const CliqueSolution singleton = solve_densest_clique_exact(edgeless);
  CHECK(singleton.selected == std::vector<int>{0});
  CHECK(singleton.density == doctest::Approx(1.0));

  ConsistencyGraph path = graph_from_edges(3, {{0, 1}, {1, 2}});
  const CliqueSolution lexical = solve_densest_clique_exact(path);
  CHECK(lexical.selected == std::vector<int>{0, 1});
  CHECK(lexical.density == doctest::Approx(2.0));

  // 200 random graphs on up to 8 vertices against full enumeration,
  // including the lexicographic tie-break.
  for (int trial = 0; trial < 200; ++trial) {
    SeededRng rng(5000 + trial);
    const int n = static_cast<int>(rng.uniform_int(1, 8));
    const double p = rng.uniform(0.0, 0.9);
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (rng.uniform() < p) {
          edges.emplace_back(i, j);
        }
      }
    }
    const ConsistencyGraph g = graph_from_edges(n, edges);
    const CliqueSolution exact = solve_densest_clique_exact(g);
    const std::vector<int> oracle = enumerate_max_clique(g.affinity);
    CHECK(exact.selected == oracle);
    CHECK(exact.density == doctest::Approx(static_cast<double>(oracle.size())));
    CHECK(g.affinity.is_clique(exact.selected));

    // The relaxation never beats the optimum.
    if (!edges.empty()) {
      try {
        const CliqueSolution relaxed = solve_densest_clique(g);
        CHECK(relaxed.density <= exact.density + 1e-12);
        CHECK(g.affinity.is_clique(relaxed.selected));
      } catch (const NoConsistentSet&) {
        CHECK(oracle.size() < 2);
      }
    }
  }
}

TEST_CASE("exact solver enforces its size cap") {
  ConsistencyGraph big = graph_from_edges(26, {{0, 1}});
  CHECK_THROWS_AS(solve_densest_clique_exact(big), InstanceTooLarge);
  CHECK_NOTHROW(solve_densest_clique_exact(big, 26));
  ConsistencyGraph huge = graph_from_edges(65, {{0, 1}});
  CHECK_THROWS_AS(solve_densest_clique_exact(huge, 100), InstanceTooLarge);
}

TEST_CASE("association pipeline finds the true matching on clean maps") {
  SeededRng rng(20250819);
  for (int trial = 0; trial < 10; ++trial) {
    const auto points = testing::random_points(rng, 7, 10.0);
    const RigidTransform truth = testing::random_transform(rng, 20.0);
    std::vector<Point3> moved;
    for (const Point3& p : points) {
      moved.push_back(truth.apply(p));
    }
    const ObjectMap a = map_from_points(points, "session_a");
    const ObjectMap b = map_from_points(moved, "session_b");

    AssociationConfig config;
    auto candidates = generate_candidates(a, b, config);
    const ConsistencyGraph g = build_affinity(candidates, a, b, config);

    std::vector<int> truth_indices;
    for (int i = 0; i < 7; ++i) {
      truth_indices.push_back(i * 7 + i);
    }
    const CliqueSolution relaxed = solve_densest_clique(g);
    CHECK(relaxed.selected == truth_indices);
    const CliqueSolution exact = solve_densest_clique_exact(g, 49);
    CHECK(exact.selected == truth_indices);

    const CorrespondenceSet inliers =
        extract_inliers(relaxed, g.candidates, a, b, config);
    REQUIRE(inliers.size() == 7);
    const RigidTransform recovered = estimate_rigid_transform(inliers);
    CHECK(testing::transform_max_diff(recovered, truth) < 1e-9);
  }
}

TEST_CASE("extract_inliers preserves selection order and enforces the floor") {
  const ObjectMap a = map_from_points(
      {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}}, "session_a");
  const ObjectMap b = map_from_points(
      {{5, 0, 0}, {6, 0, 0}, {7, 0, 0}, {8, 0, 0}}, "session_b");
  const std::vector<CandidateAssociation> candidates = {{0, 1}, {2, 0}, {3, 3}};

  AssociationConfig config;
  config.min_inliers = 3;
  CliqueSolution solution;
  solution.selected = {1, 0, 2};
  solution.density = 3.0;

  const CorrespondenceSet set =
      extract_inliers(solution, candidates, a, b, config);
  REQUIRE(set.size() == 3);
  CHECK((set[0].source - Point3(2, 0, 0)).norm() < 1e-15);
  CHECK((set[0].target - Point3(5, 0, 0)).norm() < 1e-15);
  CHECK((set[1].source - Point3(0, 0, 0)).norm() < 1e-15);
  CHECK((set[1].target - Point3(6, 0, 0)).norm() < 1e-15);
  CHECK((set[2].source - Point3(3, 0, 0)).norm() < 1e-15);
  CHECK((set[2].target - Point3(8, 0, 0)).norm() < 1e-15);

  solution.selected = {1, 0};
  CHECK_THROWS_AS(extract_inliers(solution, candidates, a, b, config),
                  TooFewInliers);
}

TEST_CASE("config validation rejects nonsense") {
  AssociationConfig config;
  CHECK_NOTHROW(validate(config));
  config.epsilon_m = 0.0;
  CHECK_THROWS_AS(validate(config), std::invalid_argument);
  config.epsilon_m = 0.1;
  config.size_gate_ratio = 0.5;
  CHECK_THROWS_AS(validate(config), std::invalid_argument);
  config.size_gate_ratio = 0.0;
  config.min_inliers = 2;
  CHECK_THROWS_AS(validate(config), std::invalid_argument);
  config.min_inliers = 5;
  config.residual_ceiling_factor = 0.0;
  CHECK_THROWS_AS(validate(config), std::invalid_argument);
}
