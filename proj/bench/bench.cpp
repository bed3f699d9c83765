// Serial reference vs OpenMP: voxel oracle and the combine clipping loop.

#include <benchmark/benchmark.h>

#include <random>

#include "craft/csg.hpp"
#include "craft/voxel.hpp"
#include "../tests/support.hpp"

using namespace craft;

namespace {

craft::test::RandomScene scene(int n) {
  std::mt19937_64 rng(7);
  return craft::test::random_scene(rng, n);
}

void BM_Voxelize(benchmark::State& state, Execution exec) {
  const auto s = scene(8);
  const int res = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(voxel_oracle_volume(s.trees, res, exec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(res) * res * res);
}

void BM_Combine(benchmark::State& state, bool parallel) {
  const auto s = scene(static_cast<int>(state.range(0)));
  CsgOptions opts;
  opts.parallel = parallel;
  const auto items = s.items();
  for (auto _ : state) benchmark::DoNotOptimize(combine(items, opts).mesh.triangles.size());
}

}  // namespace

BENCHMARK_CAPTURE(BM_Voxelize, serial, Execution::serial)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Voxelize, openmp, Execution::parallel)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Combine, serial, false)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Combine, openmp, true)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
