// Microbenchmarks for the closed-form rigid alignment path.

#include <benchmark/benchmark.h>

#include <cstddef>

#include <segloc/geometry.hpp>
#include <segloc/random.hpp>

using namespace segloc;

namespace {

RigidTransform random_transform(SeededRng& rng) {
  RigidTransform t;
  t.rotation = rng.uniform_rotation();
  t.translation = {rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0),
                   rng.uniform(-10.0, 10.0)};
  return t;
}

CorrespondenceSet make_correspondences(std::size_t count, double noise_m) {
  SeededRng rng(42);
  const RigidTransform truth = random_transform(rng);
  CorrespondenceSet set;
  set.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Point3 p{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0),
                   rng.uniform(-10.0, 10.0)};
    Point3 target = truth.apply(p);
    if (noise_m > 0.0) {
      target += rng.normal_vec3(noise_m);
    }
    set.push_back({p, target});
  }
  return set;
}

}  // namespace

static void BM_EstimateRigidTransform(benchmark::State& state) {
  const CorrespondenceSet set =
      make_correspondences(static_cast<std::size_t>(state.range(0)), 0.02);
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_rigid_transform(set));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EstimateRigidTransform)
    ->Arg(8)
    ->Arg(64)
    ->Arg(512)
    ->Arg(4096)
    ->Complexity(benchmark::oN);

static void BM_ResidualRms(benchmark::State& state) {
  const CorrespondenceSet set =
      make_correspondences(static_cast<std::size_t>(state.range(0)), 0.02);
  const RigidTransform estimate = estimate_rigid_transform(set);
  for (auto _ : state) {
    benchmark::DoNotOptimize(residual_rms(estimate, set));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ResidualRms)->Arg(64)->Arg(4096)->Complexity(benchmark::oN);

static void BM_ComposeInvert(benchmark::State& state) {
  SeededRng rng(7);
  const RigidTransform a = random_transform(rng);
  const RigidTransform b = random_transform(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compose(a, invert(b)));
  }
}
BENCHMARK(BM_ComposeInvert);

BENCHMARK_MAIN();
