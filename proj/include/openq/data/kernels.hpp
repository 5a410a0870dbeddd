#pragma once

// Inner loops of the data layer. Every kernel exists twice: a plain serial
// version kept as the reference, and an OpenMP version used by the dispatcher.
// Each output element is produced by exactly one thread with the same
// summation order as the serial kernel, so both give bit-identical results.

#include <complex>
#include <cstddef>
#include <span>

namespace openq::kernels {

using cplx = std::complex<double>;

// Problems smaller than this many stored values stay on the serial path.
inline constexpr std::size_t kParallelThreshold = 1 << 14;

namespace serial {

// y = alpha * A x + beta * y, A in CSR.
void csr_matvec(std::size_t rows, std::span<const std::size_t> row_ptr,
                std::span<const std::size_t> col_idx, std::span<const cplx> values,
                std::span<const cplx> x, std::span<cplx> y, cplx alpha, cplx beta);

// y = alpha * A x + beta * y, A column-major rows x cols.
void dense_matvec(std::size_t rows, std::size_t cols, std::span<const cplx> a,
                  std::span<const cplx> x, std::span<cplx> y, cplx alpha, cplx beta);

// y = alpha * A x + beta * y, A in diagonal storage (see DiaData).
void dia_matvec(std::size_t rows, std::size_t cols, std::span<const std::ptrdiff_t> offsets,
                std::span<const cplx> values, std::span<const cplx> x, std::span<cplx> y,
                cplx alpha, cplx beta);

// C = A * B, all column-major. C must be sized rows_a x cols_b.
void dense_matmul(std::size_t rows_a, std::size_t inner, std::size_t cols_b,
                  std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> c);

// y += alpha * x
void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);

}  // namespace serial

namespace omp {

void csr_matvec(std::size_t rows, std::span<const std::size_t> row_ptr,
                std::span<const std::size_t> col_idx, std::span<const cplx> values,
                std::span<const cplx> x, std::span<cplx> y, cplx alpha, cplx beta);

void dense_matvec(std::size_t rows, std::size_t cols, std::span<const cplx> a,
                  std::span<const cplx> x, std::span<cplx> y, cplx alpha, cplx beta);

void dia_matvec(std::size_t rows, std::size_t cols, std::span<const std::ptrdiff_t> offsets,
                std::span<const cplx> values, std::span<const cplx> x, std::span<cplx> y,
                cplx alpha, cplx beta);

void dense_matmul(std::size_t rows_a, std::size_t inner, std::size_t cols_b,
                  std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> c);

void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);

}  // namespace omp

int max_threads();

}  // namespace openq::kernels
