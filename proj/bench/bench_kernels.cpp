#include <benchmark/benchmark.h>

#include <random>

#include "localmax/kernels.hpp"

using namespace localmax;
namespace k = localmax::kernels;

namespace {

Matrix random(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (auto& v : m.storage()) v = g(rng);
  return m;
}

template <bool Parallel>
void BM_AffineForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix x = random(n, 64, 1), w = random(64, 64, 2);
  const std::vector<double> b(64, 0.1);
  Matrix y(n, 64);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::affine_forward(x, w, b, y);
    else k::serial::affine_forward(x, w, b, y);
    benchmark::DoNotOptimize(y.storage().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <bool Parallel>
void BM_AffineBackwardParams(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix dy = random(n, 64, 3), x = random(n, 64, 4);
  Matrix dw(64, 64);
  std::vector<double> db(64);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::affine_backward_params(dy, x, dw, db);
    else k::serial::affine_backward_params(dy, x, dw, db);
    benchmark::DoNotOptimize(dw.storage().data());
  }
}

template <bool Parallel>
void BM_NearestNeighbors(benchmark::State& state) {
  const Matrix pts = random(static_cast<std::size_t>(state.range(0)), 8, 5);
  for (auto _ : state) {
    auto nn = Parallel ? k::parallel::nearest_neighbors(pts) : k::serial::nearest_neighbors(pts);
    benchmark::DoNotOptimize(nn.data());
  }
}

template <bool Parallel>
void BM_Permutations(benchmark::State& state) {
  std::vector<double> x(500), y(500);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = g(rng);
    y[i] = x[i] + g(rng);
  }
  const auto pair = k::center_pair(x, y);
  const auto b = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto c = Parallel ? k::parallel::permutation_exceedances(pair, b, 1, 0.3)
                      : k::serial::permutation_exceedances(pair, b, 1, 0.3);
    benchmark::DoNotOptimize(c);
  }
}

} // namespace

BENCHMARK(BM_AffineForward<false>)->Name("affine_forward/serial")->Arg(32)->Arg(4096);
BENCHMARK(BM_AffineForward<true>)->Name("affine_forward/parallel")->Arg(32)->Arg(4096);
BENCHMARK(BM_AffineBackwardParams<false>)->Name("affine_backward_params/serial")->Arg(32)->Arg(4096);
BENCHMARK(BM_AffineBackwardParams<true>)->Name("affine_backward_params/parallel")->Arg(32)->Arg(4096);
BENCHMARK(BM_NearestNeighbors<false>)->Name("nearest_neighbors/serial")->Arg(256)->Arg(2048);
BENCHMARK(BM_NearestNeighbors<true>)->Name("nearest_neighbors/parallel")->Arg(256)->Arg(2048);
BENCHMARK(BM_Permutations<false>)->Name("permutations/serial")->Arg(1000)->Arg(10000);
BENCHMARK(BM_Permutations<true>)->Name("permutations/parallel")->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
