#include <vector>

#include <benchmark/benchmark.h>

#include "mupo/imm.hpp"
#include "mupo/scenario.hpp"

using namespace mupo;

namespace {

void BM_ImmStep(benchmark::State& state) {
  const imm::ImmConfig cfg = state.range(0) == 8 ? imm::ImmConfig::desk_preset() : imm::ImmConfig::wide_preset();
  sim::ScenarioConfig sc;
  sc.duration = 100.0;
  sim::Rng rng(21);
  const sim::Track tr = sim::generate_track(sc, rng);
  const auto meas = sim::generate_measurements(tr, sc, rng);
  std::vector<geo::ConvertedMeasurement> zs;
  for (const auto& m : meas) zs.push_back(geo::convert(m, geo::RadarParams{}));
  for (auto _ : state) {
    imm::ImmState st = imm::init_from_measurements(zs[0], zs[1], cfg);
    for (std::size_t k = 2; k < zs.size(); ++k) st = imm::imm_step(st, zs[k], 1.0, cfg);
    benchmark::DoNotOptimize(st.estimate.x.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(zs.size() - 2));
}

void BM_Convert(benchmark::State& state) {
  const geo::PolarMeasurement z{250e3, 0.7, 30.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(geo::convert(z, geo::RadarParams{}));
}

}  // namespace

BENCHMARK(BM_ImmStep)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Convert);
BENCHMARK_MAIN();
