// Serial reference kernels vs their OpenMP counterparts.
// OMP_NUM_THREADS controls the parallel side; on one core expect parity.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "openq/data/kernels.hpp"

namespace k = openq::kernels;
using k::cplx;

namespace {

std::vector<cplx> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<cplx> v(n);
  for (auto& x : v) x = {d(rng), d(rng)};
  return v;
}

// banded sparse matrix, `band` entries per row
struct Csr {
  std::vector<std::size_t> row_ptr, col_idx;
  std::vector<cplx> values;
};

Csr banded(std::size_t n, std::size_t band) {
  Csr m;
  m.row_ptr.push_back(0);
  auto v = random_vec(n * band, 3);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < band; ++j) {
      m.col_idx.push_back((r + j * 37) % n);
      m.values.push_back(v[r * band + j]);
    }
    m.row_ptr.push_back(m.col_idx.size());
  }
  return m;
}

template <bool Par>
void BM_csr_matvec(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto m = banded(n, 16);
  const auto x = random_vec(n, 1);
  std::vector<cplx> y(n);
  for (auto _ : st) {
    if constexpr (Par)
      k::omp::csr_matvec(n, m.row_ptr, m.col_idx, m.values, x, y, 1.0, 0.0);
    else
      k::serial::csr_matvec(n, m.row_ptr, m.col_idx, m.values, x, y, 1.0, 0.0);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(m.values.size()));
}

template <bool Par>
void BM_dense_matvec(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto a = random_vec(n * n, 2);
  const auto x = random_vec(n, 1);
  std::vector<cplx> y(n);
  for (auto _ : st) {
    if constexpr (Par)
      k::omp::dense_matvec(n, n, a, x, y, 1.0, 0.0);
    else
      k::serial::dense_matvec(n, n, a, x, y, 1.0, 0.0);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n * n));
}

template <bool Par>
void BM_dense_matmul(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto a = random_vec(n * n, 2), b = random_vec(n * n, 4);
  std::vector<cplx> c(n * n);
  for (auto _ : st) {
    if constexpr (Par)
      k::omp::dense_matmul(n, n, n, a, b, c);
    else
      k::serial::dense_matmul(n, n, n, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <bool Par>
void BM_axpy(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto x = random_vec(n, 1);
  auto y = random_vec(n, 2);
  for (auto _ : st) {
    if constexpr (Par)
      k::omp::axpy(1e-9, x, y);
    else
      k::serial::axpy(1e-9, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n));
}

}  // namespace

BENCHMARK(BM_csr_matvec<false>)->Name("csr_matvec/serial")->RangeMultiplier(8)->Range(1 << 10, 1 << 19);
BENCHMARK(BM_csr_matvec<true>)->Name("csr_matvec/omp")->RangeMultiplier(8)->Range(1 << 10, 1 << 19);
BENCHMARK(BM_dense_matvec<false>)->Name("dense_matvec/serial")->RangeMultiplier(4)->Range(64, 2048);
BENCHMARK(BM_dense_matvec<true>)->Name("dense_matvec/omp")->RangeMultiplier(4)->Range(64, 2048);
BENCHMARK(BM_dense_matmul<false>)->Name("dense_matmul/serial")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_dense_matmul<true>)->Name("dense_matmul/omp")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_axpy<false>)->Name("axpy/serial")->RangeMultiplier(16)->Range(1 << 12, 1 << 22);
BENCHMARK(BM_axpy<true>)->Name("axpy/omp")->RangeMultiplier(16)->Range(1 << 12, 1 << 22);

BENCHMARK_MAIN();
