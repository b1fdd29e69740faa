#include <benchmark/benchmark.h>

#include "anosov/foliation_metric.hpp"

using namespace anosov;

static void BM_EvaluateH(benchmark::State& state) {
  const ConjugacyEvaluator ce(fixture_catalog("shear_A0", 0.02));
  Rng rng(1);
  const Vec x = rng.uniform_point(2);
  for (auto _ : state) benchmark::DoNotOptimize(ce.evaluate(x));
}
BENCHMARK(BM_EvaluateH);

static void BM_EvaluateHInverse(benchmark::State& state) {
  const ConjugacyEvaluator ce(fixture_catalog("shear_A0", 0.02));
  Rng rng(2);
  const Vec y = rng.uniform_point(2);
  for (auto _ : state) benchmark::DoNotOptimize(ce.evaluate_inverse(y));
}
BENCHMARK(BM_EvaluateHInverse);

static void BM_RefineOrbit(benchmark::State& state) {
  const TorusMap f = fixture_catalog("shear_A0", 0.05);
  const int n = static_cast<int>(state.range(0));
  const std::vector<Vec> seeds = linear_periodic_points(f.linear(), n);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(refine_orbit(f, seeds[i], n));
    i = (i + 1) % seeds.size();
  }
}
BENCHMARK(BM_RefineOrbit)->Arg(1)->Arg(3)->Arg(6);

static void BM_LivschitzSolve(benchmark::State& state) {
  const TorusMap f = fixture_catalog("conjugated_A0", 0.05);
  LivschitzOptions o;
  o.order = static_cast<int>(state.range(0));
  o.orbit_average_length = 500;
  const auto phi = [&](const Vec& x) { return bundle_observable(f, x, 0, 24); };
  for (auto _ : state) benchmark::DoNotOptimize(livschitz_solve(f, phi, o).lambda);
}
BENCHMARK(BM_LivschitzSolve)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_CoveringRadius(benchmark::State& state) {
  const IntMatrix a0 = IntMatrix::from_rows({{3, 1}, {1, 1}});
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(preimage_covering_radius(a0, k, 32));
}
BENCHMARK(BM_CoveringRadius)->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
