#include <vector>

#include <benchmark/benchmark.h>

#include "mupo/scenario.hpp"
#include "mupo/tracker.hpp"

using namespace mupo;

namespace {

std::vector<geo::PolarMeasurement> measurements() {
  sim::ScenarioConfig sc;
  sc.duration = 60.0;
  sim::Rng rng(11);
  const sim::Track tr = sim::generate_track(sc, rng);
  return sim::generate_measurements(tr, sc, rng);
}

void BM_TrackerStepWithRaster(benchmark::State& state) {
  const auto meas = measurements();
  track::TrackerConfig cfg;
  cfg.raster.mode = state.range(0) == 0 ? raster::RegionMode::Fixed : raster::RegionMode::Flexible;
  for (auto _ : state) {
    track::Tracker tr(cfg);
    raster::MupoTensor tensor;
    for (const auto& z : meas) benchmark::DoNotOptimize(tr.step(z, &tensor));
    benchmark::DoNotOptimize(tensor.data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(meas.size()));
  state.SetLabel(state.range(0) == 0 ? "fixed" : "flexible");
}

void BM_NormalizedGaussianPlane(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  raster::RasterRegion region;
  region.width = n;
  region.height = n;
  region.cell = 20.0;
  region.x0 = 0.0;
  region.y0 = 0.0;
  const geo::Vec2 mean(0.5 * n * region.cell, 0.5 * n * region.cell);
  geo::Mat2 cov;
  cov << 2500.0, 800.0, 800.0, 9000.0;
  for (auto _ : state) {
    auto plane = raster::normalized_gaussian_plane(region, mean, cov);
    benchmark::DoNotOptimize(plane);
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

}  // namespace

BENCHMARK(BM_TrackerStepWithRaster)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NormalizedGaussianPlane)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK_MAIN();
