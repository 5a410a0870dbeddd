#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace openq {

using cplx = std::complex<double>;

namespace data {

enum class Format { Dense, CSR, Dia };

std::string_view format_name(Format f);
Format parse_format(std::string_view name);

// Column-major, rows*cols entries.
struct DenseData {
  std::vector<cplx> values;
};

// Compressed sparse row. Column indices are strictly increasing within a row.
struct CsrData {
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> col_idx;
  std::vector<cplx> values;
};

// Diagonal storage. Diagonal `offsets[d]` holds the entries (r0 + p, c0 + p)
// with r0 = max(0, -k), c0 = max(0, k) at values[d * min(rows, cols) + p].
// Slots past the end of a short diagonal are zero.
struct DiaData {
  std::vector<std::ptrdiff_t> offsets;
  std::vector<cplx> values;
};

struct Triplet {
  std::size_t row;
  std::size_t col;
  cplx value;
};

/// Immutable complex matrix tagged with its storage format.
///
/// Copies share the payload; all mutation happens by building a new matrix.
class DataMatrix {
 public:
  DataMatrix();

  static DataMatrix from_dense(std::size_t rows, std::size_t cols, std::vector<cplx> col_major);
  static DataMatrix from_csr(std::size_t rows, std::size_t cols, CsrData csr);
  static DataMatrix from_dia(std::size_t rows, std::size_t cols, DiaData dia);
  /// Duplicates are summed; exact zeros are dropped for sparse formats.
  static DataMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries,
                                  Format format);
  static DataMatrix zeros(std::size_t rows, std::size_t cols, Format format = Format::CSR);
  static DataMatrix identity(std::size_t n, Format format = Format::CSR, cplx scale = 1.0);
  static DataMatrix column(std::span<const cplx> values);

  Format format() const { return format_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  const DenseData& dense() const;
  const CsrData& csr() const;
  const DiaData& dia() const;

  cplx at(std::size_t r, std::size_t c) const;
  /// Number of stored values (Dense: rows*cols).
  std::size_t stored() const;

  /// Column-major copy of all entries.
  std::vector<cplx> to_vector() const;

 private:
  using Payload = std::variant<DenseData, CsrData, DiaData>;
  DataMatrix(std::size_t rows, std::size_t cols, Format format, std::shared_ptr<const Payload> p);

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Format format_ = Format::Dense;
  std::shared_ptr<const Payload> payload_;
};

// ---- conversion -----------------------------------------------------------

DataMatrix convert(const DataMatrix& m, Format target);
/// Drop stored entries with |x| < atol (sparse formats); zero them for Dense.
DataMatrix tidyup(const DataMatrix& m, double atol = 1e-14);

/// Result format of a mixed binary operation: Dense > CSR > Dia.
Format promote(Format a, Format b);

// ---- arithmetic -----------------------------------------------------------

/// a + scale * b
DataMatrix add(const DataMatrix& a, const DataMatrix& b, cplx scale = 1.0);
DataMatrix scale(const DataMatrix& a, cplx s);
DataMatrix matmul(const DataMatrix& a, const DataMatrix& b);
DataMatrix kron(const DataMatrix& a, const DataMatrix& b);

enum class Unary { Adjoint, Transpose, Conjugate };
DataMatrix unary(const DataMatrix& m, Unary kind);
inline DataMatrix adjoint(const DataMatrix& m) { return unary(m, Unary::Adjoint); }
inline DataMatrix transpose(const DataMatrix& m) { return unary(m, Unary::Transpose); }
inline DataMatrix conj(const DataMatrix& m) { return unary(m, Unary::Conjugate); }

cplx trace(const DataMatrix& m);

/// y = alpha * m * x + beta * y
void matvec(const DataMatrix& m, std::span<const cplx> x, std::span<cplx> y, cplx alpha = 1.0,
            cplx beta = 0.0);
std::vector<cplx> matvec(const DataMatrix& m, std::span<const cplx> x);

// ---- norms / comparisons ---------------------------------------------------

double norm_max(const DataMatrix& m);
/// Maximum absolute column sum.
double norm_one(const DataMatrix& m);
double norm_frobenius(const DataMatrix& m);
double max_abs_diff(const DataMatrix& a, const DataMatrix& b);
bool is_hermitian(const DataMatrix& m, double tol = 1e-12);

}  // namespace data
}  // namespace openq
