#include "openq/data/kernels.hpp"

#include <algorithm>

#include <omp.h>

namespace openq::kernels {

namespace {

inline cplx finish(cplx acc, cplx alpha, cplx beta, cplx y_old) {
  return beta == cplx{0.0} ? alpha * acc : alpha * acc + beta * y_old;
}

inline cplx csr_row(std::size_t r, std::span<const std::size_t> row_ptr,
                    std::span<const std::size_t> col_idx, std::span<const cplx> values,
                    std::span<const cplx> x) {
  cplx acc{0.0};
  for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += values[k] * x[col_idx[k]];
  return acc;
}

inline cplx dia_row(std::size_t r, std::size_t rows, std::size_t cols,
                    std::span<const std::ptrdiff_t> offsets, std::span<const cplx> values,
                    std::span<const cplx> x) {
  const std::size_t len = std::min(rows, cols);
  cplx acc{0.0};
  const auto ri = static_cast<std::ptrdiff_t>(r);
  for (std::size_t d = 0; d < offsets.size(); ++d) {
    const std::ptrdiff_t k = offsets[d];
    const std::ptrdiff_t c = ri + k;
    if (c < 0 || c >= static_cast<std::ptrdiff_t>(cols)) continue;
    const std::ptrdiff_t p = ri - std::max<std::ptrdiff_t>(0, -k);
    if (p < 0 || p >= static_cast<std::ptrdiff_t>(len)) continue;
    acc += values[d * len + static_cast<std::size_t>(p)] * x[static_cast<std::size_t>(c)];
  }
  return acc;
}

inline cplx dense_row(std::size_t r, std::size_t rows, std::size_t cols, std::span<const cplx> a,
                      std::span<const cplx> x) {
  cplx acc{0.0};
  for (std::size_t c = 0; c < cols; ++c) acc += a[c * rows + r] * x[c];
  return acc;
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

namespace serial {

void csr_matvec(std::size_t rows, std::span<const std::size_t> row_ptr,
                std::span<const std::size_t> col_idx, std::span<const cplx> values,
                std::span<const cplx> x, std::span<cplx> y, cplx alpha, cplx beta) {
  for (std::size_t r = 0; r < rows; ++r)
    y[r] = finish(csr_row(r, row_ptr, col_idx, values, x), alpha, beta, y[r]);
}

void dense_matvec(std::size_t rows, std::size_t cols, std::span<const cplx> a,
                  std::span<const cplx> x, std::span<cplx> y, cplx alpha, cplx beta) {
  for (std::size_t r = 0; r < rows; ++r)
    y[r] = finish(dense_row(r, rows, cols, a, x), alpha, beta, y[r]);
}

void dia_matvec(std::size_t rows, std::size_t cols, std::span<const std::ptrdiff_t> offsets,
                std::span<const cplx> values, std::span<const cplx> x, std::span<cplx> y,
                cplx alpha, cplx beta) {
  for (std::size_t r = 0; r < rows; ++r)
    y[r] = finish(dia_row(r, rows, cols, offsets, values, x), alpha, beta, y[r]);
}

void dense_matmul(std::size_t rows_a, std::size_t inner, std::size_t cols_b,
                  std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> c) {
  for (std::size_t j = 0; j < cols_b; ++j) {
    cplx* cj = c.data() + j * rows_a;
    std::fill(cj, cj + rows_a, cplx{0.0});
    for (std::size_t k = 0; k < inner; ++k) {
      const cplx bkj = b[j * inner + k];
      if (bkj == cplx{0.0}) continue;
      const cplx* ak = a.data() + k * rows_a;
      for (std::size_t i = 0; i < rows_a; ++i) cj[i] += ak[i] * bkj;
    }
  }
}

void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace serial

namespace omp {

void csr_matvec(std::size_t rows, std::span<const std::size_t> row_ptr,
                std::span<const std::size_t> col_idx, std::span<const cplx> values,
                std::span<const cplx> x, std::span<cplx> y, cplx alpha, cplx beta) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto ru = static_cast<std::size_t>(r);
    y[ru] = finish(csr_row(ru, row_ptr, col_idx, values, x), alpha, beta, y[ru]);
  }
}

void dense_matvec(std::size_t rows, std::size_t cols, std::span<const cplx> a,
                  std::span<const cplx> x, std::span<cplx> y, cplx alpha, cplx beta) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto ru = static_cast<std::size_t>(r);
    y[ru] = finish(dense_row(ru, rows, cols, a, x), alpha, beta, y[ru]);
  }
}

void dia_matvec(std::size_t rows, std::size_t cols, std::span<const std::ptrdiff_t> offsets,
                std::span<const cplx> values, std::span<const cplx> x, std::span<cplx> y,
                cplx alpha, cplx beta) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto ru = static_cast<std::size_t>(r);
    y[ru] = finish(dia_row(ru, rows, cols, offsets, values, x), alpha, beta, y[ru]);
  }
}

void dense_matmul(std::size_t rows_a, std::size_t inner, std::size_t cols_b,
                  std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> c) {
  const auto nc = static_cast<std::ptrdiff_t>(cols_b);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t jj = 0; jj < nc; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    cplx* cj = c.data() + j * rows_a;
    std::fill(cj, cj + rows_a, cplx{0.0});
    for (std::size_t k = 0; k < inner; ++k) {
      const cplx bkj = b[j * inner + k];
      if (bkj == cplx{0.0}) continue;
      const cplx* ak = a.data() + k * rows_a;
      for (std::size_t i = 0; i < rows_a; ++i) cj[i] += ak[i] * bkj;
    }
  }
}

void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    y[static_cast<std::size_t>(i)] += alpha * x[static_cast<std::size_t>(i)];
}

}  // namespace omp

}  // namespace openq::kernels
