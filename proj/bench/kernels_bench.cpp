// Serial reference kernels against their OpenMP versions.
// Run with OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "posemo/kernels.hpp"
#include "posemo/rng.hpp"

namespace {

std::vector<double> random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  posemo::Rng rng(seed);
  std::vector<double> m(rows * cols);
  for (auto& v : m) v = rng.uniform(0.0, 1.0);
  return m;
}

// Codebook quantization shape: 20000 sampled descriptors of length 5, 100 centroids.
template <auto Kernel>
void assign(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0)), n = 100, dim = 5;
  const auto pts = random_matrix(m, dim, 1);
  const auto cen = random_matrix(n, dim, 2);
  std::vector<std::uint32_t> a(m);
  std::vector<double> d(m);
  for (auto _ : state) {
    Kernel(pts, cen, dim, a, d);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * n));
}

// Window features of a test clip against an exemplar store.
template <auto Kernel>
void pairwise(benchmark::State& state) {
  const std::size_t q = static_cast<std::size_t>(state.range(0)), r = 84, dim = 1400;
  const auto qs = random_matrix(q, dim, 3);
  const auto rs = random_matrix(r, dim, 4);
  std::vector<double> out(q * r);
  for (auto _ : state) {
    Kernel(qs, rs, dim, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * q * r));
}

}  // namespace

BENCHMARK(assign<posemo::kernels::serial::assign_nearest>)->Name("assign_nearest/serial")->Arg(2000)->Arg(20000);
BENCHMARK(assign<posemo::kernels::parallel::assign_nearest>)->Name("assign_nearest/omp")->Arg(2000)->Arg(20000);
BENCHMARK(pairwise<posemo::kernels::serial::pairwise_chi2>)->Name("pairwise_chi2/serial")->Arg(239);
BENCHMARK(pairwise<posemo::kernels::parallel::pairwise_chi2>)->Name("pairwise_chi2/omp")->Arg(239);
BENCHMARK(pairwise<posemo::kernels::serial::pairwise_sq_euclidean>)->Name("pairwise_sq_euclidean/serial")->Arg(239);
BENCHMARK(pairwise<posemo::kernels::parallel::pairwise_sq_euclidean>)->Name("pairwise_sq_euclidean/omp")->Arg(239);

BENCHMARK_MAIN();
