// Serial reference versus OpenMP for the data-parallel kernels.

#include <benchmark/benchmark.h>

#include <vector>

#include "rx/kernels.hpp"
#include "rx/random.hpp"

namespace {

using rx::kernels::Execution;

rx::kernels::RowMatrix unit_rows(rx::Rng& rng, int rows, int dim) {
  rx::kernels::RowMatrix m(rows, dim);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < dim; ++j) m(i, j) = rng.normal();
    m.row(i).normalize();
  }
  return m;
}

void BM_BestMatches(benchmark::State& state, Execution exec) {
  rx::Rng rng(1);
  const int patches = static_cast<int>(state.range(0));
  const auto q = unit_rows(rng, patches, 384);
  const auto c = unit_rows(rng, patches, 384);
  for (auto _ : state) benchmark::DoNotOptimize(rx::kernels::best_matches(q, c, exec));
  state.SetItemsProcessed(state.iterations() * patches * patches);
}

void BM_CountInliers(benchmark::State& state, Execution exec) {
  rx::Rng rng(2);
  const int points = static_cast<int>(state.range(0));
  std::vector<rx::Point3> src, dst;
  for (int i = 0; i < points; ++i) {
    src.emplace_back(rng.normal(), rng.normal(), rng.normal());
    dst.push_back(src.back() + rx::Point3(0.001 * rng.normal(), 0, 0));
  }
  std::vector<rx::RigidTransform> hyps;
  for (int i = 0; i < 500; ++i)
    hyps.push_back(rx::RigidTransform::from_axis_angle({rng.normal(), rng.normal(), rng.normal()}, 0.01 * rng.normal()));
  for (auto _ : state) benchmark::DoNotOptimize(rx::kernels::count_inliers(hyps, src, dst, 0.01, exec));
  state.SetItemsProcessed(state.iterations() * points * 500);
}

}  // namespace

BENCHMARK_CAPTURE(BM_BestMatches, serial, Execution::Serial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_BestMatches, parallel, Execution::Parallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_CountInliers, serial, Execution::Serial)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_CountInliers, parallel, Execution::Parallel)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
