#include <benchmark/benchmark.h>

#include <algorithm>

#include "fblab/concavity.hpp"
#include "fblab/estimates.hpp"
#include "fblab/heleshaw.hpp"
#include "fblab/pme.hpp"

namespace {

using namespace fblab;

ScalarField cap_pressure(int cells) {
  const Grid g = Grid::make(2, 1.25, cells);
  return ScalarField::sample(g, [](double x, double y) { return std::max(0.0, 1.0 - x * x - y * y); });
}

void BM_PmeStep(benchmark::State& state) {
  const int cells = static_cast<int>(state.range(0));
  const auto G = ReactionTerm::tumor(1.0);
  PmeState s{density_from_pressure(cap_pressure(cells), 2.0), 2.0, 0.0};
  const double dt = stable_dt(s, G, 0.9);
  for (auto _ : state) {
    auto next = step(s, G, dt);
    benchmark::DoNotOptimize(next.u.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.u.grid().size()));
}
BENCHMARK(BM_PmeStep)->Arg(128)->Arg(256)->Arg(512);

void BM_Assess(benchmark::State& state) {
  const auto P = cap_pressure(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assess(P, 0.5));
}
BENCHMARK(BM_Assess)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_HsSolveBall(benchmark::State& state) {
  const Grid g = Grid::make(2, 1.1, static_cast<int>(state.range(0)));
  const auto domain = ball_domain(g, 1.0);
  const auto G = ReactionTerm::tumor(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_pressure(domain, G, 1e-8));
}
BENCHMARK(BM_HsSolveBall)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_BoundaryDecay(benchmark::State& state) {
  const auto P = cap_pressure(256);
  for (auto _ : state) benchmark::DoNotOptimize(boundary_decay_exponent(P));
}
BENCHMARK(BM_BoundaryDecay);

}  // namespace

BENCHMARK_MAIN();
