#pragma once

#include <vector>

#include "openq/data/data_matrix.hpp"

namespace openq::data {

struct EigResult {
  std::vector<double> values;  // ascending
  DataMatrix vectors;          // Dense, eigenvectors as columns
};

// Hermitian eigensolver: Householder reduction to real tridiagonal form,
// then implicit QL with shifts. Throws PreconditionError for non-Hermitian input.
EigResult eig_herm(const DataMatrix& m, double herm_tol = 1e-12);

// Matrix exponential (Dense result).
DataMatrix expm(const DataMatrix& m);

// Apply f to the spectrum of a Hermitian matrix: V f(Λ) V†.
template <class F>
DataMatrix herm_function(const DataMatrix& m, F&& f);

// Dense LU with partial pivoting, factored once and reused.
class LuFactorization {
 public:
  explicit LuFactorization(const DataMatrix& a);
  std::size_t size() const { return n_; }
  void solve_in_place(std::span<cplx> b) const;
  std::vector<cplx> solve(std::span<const cplx> b) const;

 private:
  std::size_t n_ = 0;
  std::vector<cplx> lu_;  // column-major
  std::vector<std::size_t> piv_;
};

enum class LinearMethod { direct_lu, iterative_gmres };

struct GmresOptions {
  double tol = 1e-10;         // relative residual
  std::size_t restart = 60;
  std::size_t max_iter = 2000;  // total inner iterations
  bool jacobi_precondition = true;
};

// Solves A x = b column by column.
DataMatrix solve_linear(const DataMatrix& a, const DataMatrix& b,
                        LinearMethod method = LinearMethod::direct_lu,
                        const GmresOptions& opts = {});

std::vector<cplx> gmres(const DataMatrix& a, std::span<const cplx> b, const GmresOptions& opts = {},
                        std::span<const cplx> x0 = {});

// ---- implementation of the template -----------------------------------------

template <class F>
DataMatrix herm_function(const DataMatrix& m, F&& f) {
  const auto eig = eig_herm(m);
  const std::size_t n = m.rows();
  const auto& v = eig.vectors.dense().values;
  std::vector<cplx> out(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx fk = f(eig.values[k]);
    if (fk == cplx{0.0}) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const cplx w = fk * std::conj(v[k * n + j]);
      for (std::size_t i = 0; i < n; ++i) out[j * n + i] += v[k * n + i] * w;
    }
  }
  return DataMatrix::from_dense(n, n, std::move(out));
}

}  // namespace openq::data
