// Parallel kernels against their serial references.
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "rwcp/graph.hpp"
#include "rwcp/kernels.hpp"

namespace {

rwcp::FeatureMap random_features(std::size_t side, std::size_t dim) {
  std::mt19937 rng(42);
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> data(side * side * dim);
  for (auto& v : data) v = n(rng);
  return rwcp::FeatureMap(side, side, dim, std::move(data));
}

template <auto Fn>
void BM_Knn(benchmark::State& state) {
  const auto f = random_features(static_cast<std::size_t>(state.range(0)), 16);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(f, 20));
  state.SetItemsProcessed(state.iterations() * f.num_pixels());
}

template <auto Fn>
void BM_Spmv(benchmark::State& state) {
  const auto f = random_features(static_cast<std::size_t>(state.range(0)), 16);
  const auto p = rwcp::build_transition_matrix(f, rwcp::GraphConfig{});
  std::vector<double> x(f.num_pixels()), y(f.num_pixels());
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : x) v = u(rng);
  for (auto _ : state) {
    Fn(p.csr(), x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * f.num_pixels());
}

template <auto Fn>
void BM_Edt(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  std::vector<std::uint8_t> sites(side * side, 0);
  std::mt19937 rng(3);
  std::bernoulli_distribution b(0.01);
  for (auto& s : sites) s = b(rng);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(sites, side, side));
  state.SetItemsProcessed(state.iterations() * sites.size());
}

}  // namespace

BENCHMARK(BM_Knn<rwcp::kernels::knn_serial>)->Name("knn/serial")->Arg(32)->Arg(64);
BENCHMARK(BM_Knn<rwcp::kernels::knn_parallel>)->Name("knn/parallel")->Arg(32)->Arg(64);
BENCHMARK(BM_Spmv<rwcp::kernels::spmv_serial>)->Name("spmv/serial")->Arg(64)->Arg(128);
BENCHMARK(BM_Spmv<rwcp::kernels::spmv_parallel>)->Name("spmv/parallel")->Arg(64)->Arg(128);
BENCHMARK(BM_Edt<rwcp::kernels::edt_squared_serial>)->Name("edt/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_Edt<rwcp::kernels::edt_squared_parallel>)->Name("edt/parallel")->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
