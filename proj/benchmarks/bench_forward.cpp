#include <benchmark/benchmark.h>

#include <random>

#include "msfan/model.hpp"
#include "msfan/ops.hpp"

using namespace msfan;

namespace {

Tensor random_input(Shape s, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> data(static_cast<std::size_t>(s.numel()));
  for (double& v : data) v = u(rng);
  return Tensor::from_data(s, std::move(data));
}

void BM_Conv3x3(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const Tensor x = random_input({1, c, 64, 64}, 1);
  const Tensor w = random_input({c, c, 3, 3}, 2);
  const Tensor b = Tensor::zeros({1, c, 1, 1});
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b, 1, 1));
  state.SetItemsProcessed(state.iterations() * conv2d_macs(x.shape(), c, 3, 1, 1));
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ConvTranspose(benchmark::State& state) {
  const Tensor x = random_input({1, 64, 32, 32}, 3);
  const Tensor w = random_input({64, 32, 3, 3}, 4);
  const Tensor b = Tensor::zeros({1, 32, 1, 1});
  for (auto _ : state) benchmark::DoNotOptimize(conv_transpose2d(x, w, b, 3));
}
BENCHMARK(BM_ConvTranspose)->Unit(benchmark::kMillisecond);

// Forward pass of each variant at g=5, b=3, C=64 on a 32x64 LR mosaic.
void BM_Forward(benchmark::State& state) {
  ModelConfig config;
  config.use_ca = state.range(0) == 0;
  config.use_multifan = state.range(0) == 2;
  const Model model = build(config, 7);
  const Tensor x = random_input({1, 1, 32, 64}, 5);
  state.SetLabel(config.variant_name());
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x).prediction());
}
BENCHMARK(BM_Forward)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
