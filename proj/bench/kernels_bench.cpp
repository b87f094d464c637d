// Serial reference vs OpenMP kernels at paper-preset shapes.

#include <benchmark/benchmark.h>

#include <vector>

#include "md/kernels.hpp"
#include "md/rng.hpp"

namespace {

namespace ks = md::kernels::serial;
namespace ko = md::kernels::omp;

std::vector<float> draw(std::size_t n, std::uint64_t seed) {
  const auto v = md::normal_draw(n, 1.0, seed);
  return {v.begin(), v.end()};
}

// 484 patch tokens × width 768, one projection
constexpr std::size_t kTokens = 484, kWidth = 768;

template <bool Parallel>
void BM_matmul(benchmark::State& state) {
  const auto a = draw(kTokens * kWidth, 1), b = draw(kWidth * kWidth, 2);
  std::vector<float> c(kTokens * kWidth);
  for (auto _ : state) {
    if constexpr (Parallel) {
      ko::matmul_nn<float>(a, b, c, kTokens, kWidth, kWidth);
    } else {
      ks::matmul_nn<float>(a, b, c, kTokens, kWidth, kWidth);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * kTokens * kWidth * kWidth);
}

// 3×3 conv over the 22×22 token grid, 768 → 128 channels
const md::kernels::ConvGeometry kConv{768, 22, 22, 128, 22, 22, 3, 1, 1};

template <bool Parallel>
void BM_conv2d(benchmark::State& state) {
  const auto& g = kConv;
  const auto x = draw(g.in_channels * g.in_h * g.in_w, 3);
  const auto w = draw(g.out_channels * g.in_channels * g.kernel * g.kernel, 4);
  const auto bias = draw(g.out_channels, 5);
  std::vector<float> y(g.out_channels * g.out_h * g.out_w);
  for (auto _ : state) {
    if constexpr (Parallel) {
      ko::conv2d<float>(x, w, bias, y, g);
    } else {
      ks::conv2d<float>(x, w, bias, y, g);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

// final upsampling deconvolution, 32×88×88 → 1×352×352
const md::kernels::ConvGeometry kDeconv{32, 88, 88, 1, 352, 352, 4, 4, 0};

template <bool Parallel>
void BM_conv_transpose2d(benchmark::State& state) {
  const auto& g = kDeconv;
  const auto x = draw(g.in_channels * g.in_h * g.in_w, 6);
  const auto w = draw(g.in_channels * g.out_channels * g.kernel * g.kernel, 7);
  const auto bias = draw(g.out_channels, 8);
  std::vector<float> y(g.out_channels * g.out_h * g.out_w);
  for (auto _ : state) {
    if constexpr (Parallel) {
      ko::conv_transpose2d<float>(x, w, bias, y, g);
    } else {
      ks::conv_transpose2d<float>(x, w, bias, y, g);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_bilinear(benchmark::State& state) {
  const std::size_t c = 32, ih = 22, iw = 22, oh = 88, ow = 88;
  const auto x = draw(c * ih * iw, 9);
  std::vector<float> y(c * oh * ow);
  for (auto _ : state) {
    if constexpr (Parallel) {
      ko::bilinear_resize<float>(x, y, c, ih, iw, oh, ow);
    } else {
      ks::bilinear_resize<float>(x, y, c, ih, iw, oh, ow);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_matmul<false>)->Name("matmul/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_matmul<true>)->Name("matmul/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_conv2d<false>)->Name("conv2d/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d<true>)->Name("conv2d/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_conv_transpose2d<false>)->Name("conv_transpose2d/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv_transpose2d<true>)->Name("conv_transpose2d/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_bilinear<false>)->Name("bilinear/serial")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_bilinear<true>)->Name("bilinear/omp")->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
