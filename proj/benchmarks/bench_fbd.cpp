#include <benchmark/benchmark.h>

#include "fbd/constructions.hpp"
#include "fbd/render.hpp"

using namespace fbd;

namespace {

const CPoint kHenonP{cplx(0.2, 0), cplx(0.2, 0)};

AutoSequence henon_sequence() {
  const AutoMap h = AutoMap::henon(0.1, 0.18);
  return AutoSequence::constant(h, measure_certificate(h, kHenonP, 0.01, 4000, adapted_frame(h, kHenonP)));
}

RenderJob henon_job(int resolution) {
  RenderJob job;
  job.slice.origin = CPoint{cplx(0, 0), cplx(0.2, 0)};
  job.slice.extent = 3;
  job.slice.resolution = resolution;
  job.format = "pgm";
  return job;
}

void BM_RenderWorkers(benchmark::State& state) {
  const AutoSequence seq = henon_sequence();
  const RenderJob job = henon_job(1024);
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_render(seq, job, workers).summary.escaped);
  state.SetItemsProcessed(state.iterations() * 1024LL * 1024LL);
}
BENCHMARK(BM_RenderWorkers)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Classify(benchmark::State& state) {
  const AutoSequence seq = henon_sequence();
  const CPoint z{cplx(0.4, 0.1), cplx(0.3, 0)};
  for (auto _ : state) benchmark::DoNotOptimize(classify(seq, z, 2000));
}
BENCHMARK(BM_Classify);

void BM_ContractionBounds(benchmark::State& state) {
  const AutoMap h = AutoMap::henon(0.1, 0.18);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(contraction_bounds(h, kHenonP, 0.01, n).r_hat);
}
BENCHMARK(BM_ContractionBounds)->Arg(1000)->Arg(4000)->Arg(16000);

void BM_PolyHull(benchmark::State& state) {
  const int res = static_cast<int>(state.range(0));
  PlanarCompact k({-2, -2, 2, 2}, res);
  k.add_annulus(0, 0.5, 1).add_annulus(cplx(1.4, 1.4), 0.2, 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(poly_hull(k).count());
}
BENCHMARK(BM_PolyHull)->Arg(64)->Arg(256)->Arg(1024);

void BM_RelocationMover(benchmark::State& state) {
  MoveRequest req;
  req.keep = {Ball{CPoint::zero(2), 1.0}};
  req.sources = {CPoint{cplx(3, 0.5), cplx(1, 0)}};
  req.targets = {CPoint{cplx(-2, 0), cplx(3.5, 1)}};
  req.epsilon = 0.05;
  req.samples_per_ball = 4000;
  for (auto _ : state) benchmark::DoNotOptimize(build_point_mover_ex(req).sup_error);
}
BENCHMARK(BM_RelocationMover)->Unit(benchmark::kMillisecond);

void BM_BuildDisjoint(benchmark::State& state) {
  DisjointConfig cfg;
  cfg.m = 3;
  cfg.stages = static_cast<int>(state.range(0));
  cfg.seed = 42;
  for (auto _ : state) benchmark::DoNotOptimize(build_disjoint_basins(cfg).state.stage);
}
BENCHMARK(BM_BuildDisjoint)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
