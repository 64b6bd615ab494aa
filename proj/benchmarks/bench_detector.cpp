#include <benchmark/benchmark.h>

#include "mupo/detector.hpp"
#include "mupo/nn/graph.hpp"

using namespace mupo;

namespace {

nn::Tensor input(int n, int side) {
  nn::Tensor x(nn::Shape{n, raster::kChannels, side, side});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>((i * 2654435761u) % 1000) / 1000.0f;
  return x;
}

void BM_Infer(benchmark::State& state) {
  const det::Network net{det::NetConfig{}};
  const nn::Tensor x = input(1, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(net.infer(x));
}

void BM_ForwardBackward(benchmark::State& state) {
  det::Network net{det::NetConfig{}};
  const nn::Tensor x = input(static_cast<int>(state.range(0)), 128);
  for (auto _ : state) {
    nn::Graph g;
    const auto head = net.forward(g, x);
    g.backward(head, nn::Tensor(g.value(head).shape(), 1.0f));
    benchmark::DoNotOptimize(net.parameters().front().grad.data());
  }
}

}  // namespace

BENCHMARK(BM_Infer)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
