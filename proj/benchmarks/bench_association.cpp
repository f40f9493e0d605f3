// Microbenchmarks for consistency-graph construction and the clique solvers,
// at the candidate counts the localization pipeline produces.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <numeric>
#include <vector>

#include <segloc/association.hpp>
#include <segloc/localization.hpp>
#include <segloc/random.hpp>
#include <segloc/synthetic.hpp>

using namespace segloc;

namespace {

ConsistencyGraph make_graph(int n) {
  ConsistencyGraph graph;
  graph.affinity = BinaryAffinity(n);
  graph.candidates.resize(n);
  for (int i = 0; i < n; ++i) {
    graph.candidates[i] = CandidateAssociation{i, i};
  }
  return graph;
}

ConsistencyGraph planted_clique(std::uint64_t seed, int n, int clique_size,
                                double noise_edge_prob) {
  SeededRng rng(seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<bool> in_clique(n, false);
  for (int k = 0; k < clique_size; ++k) {
    in_clique[order[k]] = true;
  }
  ConsistencyGraph graph = make_graph(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((in_clique[i] && in_clique[j]) || rng.uniform() < noise_edge_prob) {
        graph.affinity.set_edge(i, j);
      }
    }
  }
  return graph;
}

ConsistencyGraph random_graph(std::uint64_t seed, int n, double edge_prob) {
  SeededRng rng(seed);
  ConsistencyGraph graph = make_graph(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.uniform() < edge_prob) {
        graph.affinity.set_edge(i, j);
      }
    }
  }
  return graph;
}

SyntheticScene make_scene(int boulders, double noise_m) {
  SyntheticSceneConfig config;
  config.boulder_count = boulders;
  config.shared_fraction = 1.0;
  config.outlier_landmarks_per_map = 20;
  config.position_noise_m = noise_m;
  config.seed = 11;
  return generate_synthetic_scene(config);
}

}  // namespace

static void BM_BuildAffinity(benchmark::State& state) {
  const SyntheticScene scene =
      make_scene(static_cast<int>(state.range(0)), 0.02);
  const AssociationConfig config;
  const std::vector<CandidateAssociation> candidates =
      generate_candidates(scene.map_a, scene.map_b, config);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        build_affinity(candidates, scene.map_a, scene.map_b, config));
  }
  state.SetComplexityN(static_cast<std::int64_t>(candidates.size()));
}
BENCHMARK(BM_BuildAffinity)
    ->Arg(30)
    ->Arg(60)
    ->Arg(100)
    ->Unit(benchmark::kMillisecond)
    ->Complexity(benchmark::oNSquared);

static void BM_SolveRelaxation(benchmark::State& state) {
  const ConsistencyGraph graph = planted_clique(
      5, static_cast<int>(state.range(0)), 40, 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_densest_clique(graph));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveRelaxation)
    ->Arg(400)
    ->Arg(1000)
    ->Arg(2500)
    ->Arg(6400)
    ->Unit(benchmark::kMillisecond);

static void BM_SolveExact(benchmark::State& state) {
  const ConsistencyGraph graph =
      random_graph(9, static_cast<int>(state.range(0)), 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_densest_clique_exact(graph));
  }
}
BENCHMARK(BM_SolveExact)->Arg(15)->Arg(20)->Arg(25);

static void BM_LocalizeEndToEnd(benchmark::State& state) {
  const SyntheticScene scene =
      make_scene(static_cast<int>(state.range(0)), 0.02);
  for (auto _ : state) {
    benchmark::DoNotOptimize(localize(scene.map_a, scene.map_b));
  }
}
BENCHMARK(BM_LocalizeEndToEnd)
    ->Arg(30)
    ->Arg(60)
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
