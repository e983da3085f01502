// Serial reference vs OpenMP kernels on discriminator-sized batches.
#include <benchmark/benchmark.h>

#include <vector>

#include "fairgraph/kernels.hpp"
#include "fairgraph/rng.hpp"

namespace {

using fairgraph::Matrix;
namespace k = fairgraph::kernels;

Matrix<float> random_matrix(size_t rows, size_t cols, uint64_t seed) {
  fairgraph::Rng rng(seed);
  Matrix<float> m(rows, cols);
  for (float& v : m.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return m;
}

template <bool Parallel>
void BM_AffineForward(benchmark::State& state) {
  const auto batch = static_cast<size_t>(state.range(0));
  const auto width = static_cast<size_t>(state.range(1));
  const auto x = random_matrix(batch, width, 1);
  const auto w = random_matrix(width, width, 2);
  const std::vector<float> b(width, 0.1f);
  Matrix<float> y;
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::affine_forward<float>(x, w, b, y);
    } else {
      k::serial::affine_forward<float>(x, w, b, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(batch * width * width));
}

template <bool Parallel>
void BM_AffineBackwardParams(benchmark::State& state) {
  const auto batch = static_cast<size_t>(state.range(0));
  const auto width = static_cast<size_t>(state.range(1));
  const auto x = random_matrix(batch, width, 3);
  const auto dy = random_matrix(batch, width, 4);
  Matrix<float> dw(width, width);
  std::vector<float> db(width);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::affine_backward_params<float>(dy, x, dw, db);
    } else {
      k::serial::affine_backward_params<float>(dy, x, dw, db);
    }
    benchmark::DoNotOptimize(dw.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(batch * width * width));
}

template <bool Parallel>
void BM_RowDot(benchmark::State& state) {
  const auto rows = static_cast<size_t>(state.range(0));
  const auto a = random_matrix(rows, 50, 5);
  const auto b = random_matrix(rows, 50, 6);
  std::vector<float> out(rows);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::row_dot<float>(a, b, out);
    } else {
      k::serial::row_dot<float>(a, b, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

void Shapes(benchmark::internal::Benchmark* b) {
  for (int64_t batch : {256, 2048}) {
    for (int64_t width : {32, 100}) b->Args({batch, width});
  }
}

}  // namespace

BENCHMARK(BM_AffineForward<false>)->Apply(Shapes);
BENCHMARK(BM_AffineForward<true>)->Apply(Shapes);
BENCHMARK(BM_AffineBackwardParams<false>)->Apply(Shapes);
BENCHMARK(BM_AffineBackwardParams<true>)->Apply(Shapes);
BENCHMARK(BM_RowDot<false>)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_RowDot<true>)->Arg(1 << 12)->Arg(1 << 16);

BENCHMARK_MAIN();
