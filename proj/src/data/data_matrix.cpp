#include "openq/data/data_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "openq/data/kernels.hpp"
#include "openq/errors.hpp"

namespace openq::data {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
}

std::size_t diag_len(std::size_t rows, std::size_t cols) { return std::min(rows, cols); }

std::ptrdiff_t diag_row0(std::ptrdiff_t k) { return std::max<std::ptrdiff_t>(0, -k); }
std::ptrdiff_t diag_col0(std::ptrdiff_t k) { return std::max<std::ptrdiff_t>(0, k); }

// Number of in-bounds entries on diagonal k.
std::size_t diag_count(std::size_t rows, std::size_t cols, std::ptrdiff_t k) {
  const auto r = static_cast<std::ptrdiff_t>(rows) - diag_row0(k);
  const auto c = static_cast<std::ptrdiff_t>(cols) - diag_col0(k);
  const auto n = std::min(r, c);
  return n > 0 ? static_cast<std::size_t>(n) : 0;
}

void validate_csr(std::size_t rows, std::size_t cols, const CsrData& d) {
  if (d.row_ptr.size() != rows + 1) throw DimensionError("csr: row_ptr length must be rows+1");
  if (d.row_ptr.front() != 0 || d.row_ptr.back() != d.values.size() ||
      d.col_idx.size() != d.values.size())
    throw DimensionError("csr: row_ptr/col_idx/values lengths inconsistent");
  for (std::size_t r = 0; r < rows; ++r) {
    if (d.row_ptr[r] > d.row_ptr[r + 1]) throw DimensionError("csr: row_ptr must be non-decreasing");
    for (std::size_t k = d.row_ptr[r]; k < d.row_ptr[r + 1]; ++k) {
      if (d.col_idx[k] >= cols) throw DimensionError("csr: column index out of range");
      if (k > d.row_ptr[r] && d.col_idx[k] <= d.col_idx[k - 1])
        throw DimensionError("csr: column indices must be strictly increasing within a row");
    }
  }
}

void validate_dia(std::size_t rows, std::size_t cols, const DiaData& d) {
  if (d.values.size() != d.offsets.size() * diag_len(rows, cols))
    throw DimensionError("dia: values must hold min(rows, cols) entries per diagonal");
  for (std::size_t i = 0; i < d.offsets.size(); ++i) {
    const auto k = d.offsets[i];
    if (k <= -static_cast<std::ptrdiff_t>(rows) || k >= static_cast<std::ptrdiff_t>(cols))
      throw DimensionError("dia: offset outside the matrix");
    if (i > 0 && k <= d.offsets[i - 1]) throw DimensionError("dia: offsets must be sorted and unique");
  }
}

// ---- direct conversion kernels -------------------------------------------

DenseData csr_to_dense(std::size_t rows, std::size_t cols, const CsrData& s) {
  DenseData d{std::vector<cplx>(rows * cols)};
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k)
      d.values[s.col_idx[k] * rows + r] = s.values[k];
  return d;
}

CsrData dense_to_csr(std::size_t rows, std::size_t cols, const DenseData& d) {
  CsrData s;
  s.row_ptr.assign(rows + 1, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const cplx v = d.values[c * rows + r];
      if (v != cplx{0.0}) {
        s.col_idx.push_back(c);
        s.values.push_back(v);
      }
    }
    s.row_ptr[r + 1] = s.values.size();
  }
  return s;
}

DenseData dia_to_dense(std::size_t rows, std::size_t cols, const DiaData& s) {
  DenseData d{std::vector<cplx>(rows * cols)};
  const std::size_t len = diag_len(rows, cols);
  for (std::size_t i = 0; i < s.offsets.size(); ++i) {
    const auto k = s.offsets[i];
    const auto r0 = static_cast<std::size_t>(diag_row0(k));
    const auto c0 = static_cast<std::size_t>(diag_col0(k));
    const std::size_t n = diag_count(rows, cols, k);
    for (std::size_t p = 0; p < n; ++p) d.values[(c0 + p) * rows + r0 + p] = s.values[i * len + p];
  }
  return d;
}

DiaData dense_to_dia(std::size_t rows, std::size_t cols, const DenseData& d) {
  DiaData s;
  const std::size_t len = diag_len(rows, cols);
  for (auto k = -static_cast<std::ptrdiff_t>(rows) + 1; k < static_cast<std::ptrdiff_t>(cols); ++k) {
    const auto r0 = static_cast<std::size_t>(diag_row0(k));
    const auto c0 = static_cast<std::size_t>(diag_col0(k));
    const std::size_t n = diag_count(rows, cols, k);
    bool any = false;
    for (std::size_t p = 0; p < n && !any; ++p) any = d.values[(c0 + p) * rows + r0 + p] != cplx{0.0};
    if (!any) continue;
    s.offsets.push_back(k);
    const std::size_t base = s.values.size();
    s.values.resize(base + len);
    for (std::size_t p = 0; p < n; ++p) s.values[base + p] = d.values[(c0 + p) * rows + r0 + p];
  }
  return s;
}

CsrData dia_to_csr(std::size_t rows, std::size_t cols, const DiaData& s) {
  CsrData out;
  out.row_ptr.assign(rows + 1, 0);
  const std::size_t len = diag_len(rows, cols);
  // offsets are sorted, so walking them in order yields sorted columns per row
  for (std::size_t r = 0; r < rows; ++r) {
    const auto ri = static_cast<std::ptrdiff_t>(r);
    for (std::size_t i = 0; i < s.offsets.size(); ++i) {
      const auto k = s.offsets[i];
      const auto c = ri + k;
      if (c < 0 || c >= static_cast<std::ptrdiff_t>(cols)) continue;
      const auto p = ri - diag_row0(k);
      if (p < 0 || static_cast<std::size_t>(p) >= len) continue;
      const cplx v = s.values[i * len + static_cast<std::size_t>(p)];
      if (v == cplx{0.0}) continue;
      out.col_idx.push_back(static_cast<std::size_t>(c));
      out.values.push_back(v);
    }
    out.row_ptr[r + 1] = out.values.size();
  }
  return out;
}

DiaData csr_to_dia(std::size_t rows, std::size_t cols, const CsrData& s) {
  std::map<std::ptrdiff_t, std::size_t> slot;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k)
      if (s.values[k] != cplx{0.0})
        slot.emplace(static_cast<std::ptrdiff_t>(s.col_idx[k]) - static_cast<std::ptrdiff_t>(r), 0);
  DiaData out;
  const std::size_t len = diag_len(rows, cols);
  std::size_t i = 0;
  for (auto& [k, idx] : slot) {
    idx = i++;
    out.offsets.push_back(k);
  }
  out.values.assign(out.offsets.size() * len, cplx{0.0});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k) {
      if (s.values[k] == cplx{0.0}) continue;
      const auto off = static_cast<std::ptrdiff_t>(s.col_idx[k]) - static_cast<std::ptrdiff_t>(r);
      const auto p = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(r) - diag_row0(off));
      out.values[slot[off] * len + p] = s.values[k];
    }
  return out;
}

int rank(Format f) {
  switch (f) {
    case Format::Dense: return 2;
    case Format::CSR: return 1;
    case Format::Dia: return 0;
  }
  return 0;
}

// ---- same-format kernels ---------------------------------------------------

CsrData csr_add(std::size_t rows, const CsrData& a, const CsrData& b, cplx s) {
  CsrData out;
  out.row_ptr.assign(rows + 1, 0);
  out.col_idx.reserve(a.values.size() + b.values.size());
  out.values.reserve(a.values.size() + b.values.size());
  auto push = [&](std::size_t c, cplx v) {
    if (v == cplx{0.0}) return;
    out.col_idx.push_back(c);
    out.values.push_back(v);
  };
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t i = a.row_ptr[r], j = b.row_ptr[r];
    const std::size_t ie = a.row_ptr[r + 1], je = b.row_ptr[r + 1];
    while (i < ie || j < je) {
      if (j >= je || (i < ie && a.col_idx[i] < b.col_idx[j])) {
        push(a.col_idx[i], a.values[i]);
        ++i;
      } else if (i >= ie || b.col_idx[j] < a.col_idx[i]) {
        push(b.col_idx[j], s * b.values[j]);
        ++j;
      } else {
        push(a.col_idx[i], a.values[i] + s * b.values[j]);
        ++i;
        ++j;
      }
    }
    out.row_ptr[r + 1] = out.values.size();
  }
  return out;
}

DiaData dia_add(std::size_t rows, std::size_t cols, const DiaData& a, const DiaData& b, cplx s) {
  const std::size_t len = diag_len(rows, cols);
  DiaData out;
  std::size_t i = 0, j = 0;
  auto append = [&](std::ptrdiff_t k, const cplx* va, const cplx* vb) {
    out.offsets.push_back(k);
    const std::size_t base = out.values.size();
    out.values.resize(base + len);
    for (std::size_t p = 0; p < len; ++p)
      out.values[base + p] = (va ? va[p] : cplx{0.0}) + (vb ? s * vb[p] : cplx{0.0});
  };
  while (i < a.offsets.size() || j < b.offsets.size()) {
    if (j >= b.offsets.size() || (i < a.offsets.size() && a.offsets[i] < b.offsets[j])) {
      append(a.offsets[i], a.values.data() + i * len, nullptr);
      ++i;
    } else if (i >= a.offsets.size() || b.offsets[j] < a.offsets[i]) {
      append(b.offsets[j], nullptr, b.values.data() + j * len);
      ++j;
    } else {
      append(a.offsets[i], a.values.data() + i * len, b.values.data() + j * len);
      ++i;
      ++j;
    }
  }
  return out;
}

// Gustavson row-by-row product with a dense accumulator.
CsrData csr_matmul(std::size_t rows, std::size_t cols, const CsrData& a, const CsrData& b) {
  CsrData out;
  out.row_ptr.assign(rows + 1, 0);
  std::vector<cplx> acc(cols);
  std::vector<char> used(cols, 0);
  std::vector<std::size_t> touched;
  for (std::size_t r = 0; r < rows; ++r) {
    touched.clear();
    for (std::size_t ka = a.row_ptr[r]; ka < a.row_ptr[r + 1]; ++ka) {
      const std::size_t k = a.col_idx[ka];
      const cplx av = a.values[ka];
      for (std::size_t kb = b.row_ptr[k]; kb < b.row_ptr[k + 1]; ++kb) {
        const std::size_t c = b.col_idx[kb];
        if (!used[c]) {
          used[c] = 1;
          acc[c] = 0.0;
          touched.push_back(c);
        }
        acc[c] += av * b.values[kb];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::size_t c : touched) {
      used[c] = 0;
      if (acc[c] == cplx{0.0}) continue;
      out.col_idx.push_back(c);
      out.values.push_back(acc[c]);
    }
    out.row_ptr[r + 1] = out.values.size();
  }
  return out;
}

DiaData dia_matmul(std::size_t rows, std::size_t inner, std::size_t cols, const DiaData& a,
                   const DiaData& b) {
  const std::size_t la = diag_len(rows, inner), lb = diag_len(inner, cols), lc = diag_len(rows, cols);
  std::map<std::ptrdiff_t, std::vector<cplx>> diags;
  for (std::size_t i = 0; i < a.offsets.size(); ++i) {
    const auto ka = a.offsets[i];
    for (std::size_t j = 0; j < b.offsets.size(); ++j) {
      const auto kb = b.offsets[j];
      const auto kc = ka + kb;
      if (kc <= -static_cast<std::ptrdiff_t>(rows) || kc >= static_cast<std::ptrdiff_t>(cols)) continue;
      auto& dst = diags[kc];
      if (dst.empty()) dst.assign(lc, cplx{0.0});
      const std::size_t na = diag_count(rows, inner, ka);
      // A(r, r+ka) * B(r+ka, r+ka+kb) accumulates into C(r, r+kc)
      for (std::size_t p = 0; p < na; ++p) {
        const auto r = diag_row0(ka) + static_cast<std::ptrdiff_t>(p);
        const auto m = r + ka;
        const auto c = m + kb;
        if (c < 0 || c >= static_cast<std::ptrdiff_t>(cols)) continue;
        const auto pb = m - diag_row0(kb);
        if (pb < 0 || static_cast<std::size_t>(pb) >= lb) continue;
        const auto pc = r - diag_row0(kc);
        dst[static_cast<std::size_t>(pc)] += a.values[i * la + p] * b.values[j * lb + static_cast<std::size_t>(pb)];
      }
    }
  }
  DiaData out;
  for (auto& [k, v] : diags) {
    if (std::all_of(v.begin(), v.end(), [](cplx x) { return x == cplx{0.0}; })) continue;
    out.offsets.push_back(k);
    out.values.insert(out.values.end(), v.begin(), v.end());
  }
  return out;
}

CsrData csr_kron(std::size_t ra, const CsrData& a, std::size_t rb, std::size_t cb, const CsrData& b) {
  CsrData out;
  out.row_ptr.assign(ra * rb + 1, 0);
  out.col_idx.reserve(a.values.size() * b.values.size());
  out.values.reserve(a.values.size() * b.values.size());
  for (std::size_t i = 0; i < ra; ++i)
    for (std::size_t j = 0; j < rb; ++j) {
      for (std::size_t ka = a.row_ptr[i]; ka < a.row_ptr[i + 1]; ++ka)
        for (std::size_t kb = b.row_ptr[j]; kb < b.row_ptr[j + 1]; ++kb) {
          out.col_idx.push_back(a.col_idx[ka] * cb + b.col_idx[kb]);
          out.values.push_back(a.values[ka] * b.values[kb]);
        }
      out.row_ptr[i * rb + j + 1] = out.values.size();
    }
  return out;
}

CsrData csr_transpose(std::size_t rows, std::size_t cols, const CsrData& s, bool conjugate) {
  CsrData out;
  out.row_ptr.assign(cols + 1, 0);
  for (std::size_t c : s.col_idx) ++out.row_ptr[c + 1];
  std::partial_sum(out.row_ptr.begin(), out.row_ptr.end(), out.row_ptr.begin());
  out.col_idx.resize(s.values.size());
  out.values.resize(s.values.size());
  std::vector<std::size_t> next(out.row_ptr.begin(), out.row_ptr.end() - 1);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k) {
      const std::size_t dst = next[s.col_idx[k]]++;
      out.col_idx[dst] = r;
      out.values[dst] = conjugate ? std::conj(s.values[k]) : s.values[k];
    }
  return out;
}

}  // namespace

// ---- DataMatrix --------------------------------------------------------------

std::string_view format_name(Format f) {
  switch (f) {
    case Format::Dense: return "dense";
    case Format::CSR: return "csr";
    case Format::Dia: return "dia";
  }
  return "?";
}

Format parse_format(std::string_view name) {
  if (name == "dense") return Format::Dense;
  if (name == "csr") return Format::CSR;
  if (name == "dia") return Format::Dia;
  throw std::invalid_argument("unknown data format '" + std::string(name) + "'");
}

DataMatrix::DataMatrix()
    : DataMatrix(0, 0, Format::Dense, std::make_shared<const Payload>(DenseData{})) {}

DataMatrix::DataMatrix(std::size_t rows, std::size_t cols, Format format,
                       std::shared_ptr<const Payload> p)
    : rows_(rows), cols_(cols), format_(format), payload_(std::move(p)) {}

DataMatrix DataMatrix::from_dense(std::size_t rows, std::size_t cols, std::vector<cplx> col_major) {
  if (col_major.size() != rows * cols)
    throw DimensionError("dense: expected " + std::to_string(rows * cols) + " values, got " +
                         std::to_string(col_major.size()));
  return DataMatrix(rows, cols, Format::Dense,
                    std::make_shared<const Payload>(DenseData{std::move(col_major)}));
}

DataMatrix DataMatrix::from_csr(std::size_t rows, std::size_t cols, CsrData csr) {
  validate_csr(rows, cols, csr);
  return DataMatrix(rows, cols, Format::CSR, std::make_shared<const Payload>(std::move(csr)));
}

DataMatrix DataMatrix::from_dia(std::size_t rows, std::size_t cols, DiaData dia) {
  validate_dia(rows, cols, dia);
  return DataMatrix(rows, cols, Format::Dia, std::make_shared<const Payload>(std::move(dia)));
}

DataMatrix DataMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries,
                                     Format format) {
  for (const auto& t : entries)
    if (t.row >= rows || t.col >= cols) throw RangeError("triplet index outside " + shape_str(rows, cols));
  std::sort(entries.begin(), entries.end(), [](const Triplet& x, const Triplet& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  CsrData s;
  s.row_ptr.assign(rows + 1, 0);
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    cplx v{0.0};
    while (j < entries.size() && entries[j].row == entries[i].row && entries[j].col == entries[i].col)
      v += entries[j++].value;
    if (v != cplx{0.0}) {
      s.col_idx.push_back(entries[i].col);
      s.values.push_back(v);
      ++s.row_ptr[entries[i].row + 1];
    }
    i = j;
  }
  std::partial_sum(s.row_ptr.begin(), s.row_ptr.end(), s.row_ptr.begin());
  auto m = from_csr(rows, cols, std::move(s));
  return format == Format::CSR ? m : convert(m, format);
}

DataMatrix DataMatrix::zeros(std::size_t rows, std::size_t cols, Format format) {
  switch (format) {
    case Format::Dense: return from_dense(rows, cols, std::vector<cplx>(rows * cols));
    case Format::CSR: return from_csr(rows, cols, CsrData{std::vector<std::size_t>(rows + 1, 0), {}, {}});
    case Format::Dia: return from_dia(rows, cols, DiaData{});
  }
  return {};
}

DataMatrix DataMatrix::identity(std::size_t n, Format format, cplx scale) {
  if (scale == cplx{0.0}) return zeros(n, n, format);
  switch (format) {
    case Format::Dense: {
      std::vector<cplx> v(n * n);
      for (std::size_t i = 0; i < n; ++i) v[i * n + i] = scale;
      return from_dense(n, n, std::move(v));
    }
    case Format::CSR: {
      CsrData s;
      s.row_ptr.resize(n + 1);
      std::iota(s.row_ptr.begin(), s.row_ptr.end(), std::size_t{0});
      s.col_idx.resize(n);
      std::iota(s.col_idx.begin(), s.col_idx.end(), std::size_t{0});
      s.values.assign(n, scale);
      return from_csr(n, n, std::move(s));
    }
    case Format::Dia:
      return from_dia(n, n, DiaData{{0}, std::vector<cplx>(n, scale)});
  }
  return {};
}

DataMatrix DataMatrix::column(std::span<const cplx> values) {
  return from_dense(values.size(), 1, std::vector<cplx>(values.begin(), values.end()));
}

const DenseData& DataMatrix::dense() const {
  if (format_ != Format::Dense) throw std::logic_error("DataMatrix is not Dense");
  return std::get<DenseData>(*payload_);
}
const CsrData& DataMatrix::csr() const {
  if (format_ != Format::CSR) throw std::logic_error("DataMatrix is not CSR");
  return std::get<CsrData>(*payload_);
}
const DiaData& DataMatrix::dia() const {
  if (format_ != Format::Dia) throw std::logic_error("DataMatrix is not Dia");
  return std::get<DiaData>(*payload_);
}

cplx DataMatrix::at(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) throw RangeError("entry (" + std::to_string(r) + "," + std::to_string(c) +
                                                 ") outside " + shape_str(rows_, cols_));
  switch (format_) {
    case Format::Dense: return dense().values[c * rows_ + r];
    case Format::CSR: {
      const auto& s = csr();
      auto first = s.col_idx.begin() + static_cast<std::ptrdiff_t>(s.row_ptr[r]);
      auto last = s.col_idx.begin() + static_cast<std::ptrdiff_t>(s.row_ptr[r + 1]);
      auto it = std::lower_bound(first, last, c);
      return (it != last && *it == c) ? s.values[static_cast<std::size_t>(it - s.col_idx.begin())] : cplx{0.0};
    }
    case Format::Dia: {
      const auto& s = dia();
      const auto k = static_cast<std::ptrdiff_t>(c) - static_cast<std::ptrdiff_t>(r);
      auto it = std::lower_bound(s.offsets.begin(), s.offsets.end(), k);
      if (it == s.offsets.end() || *it != k) return 0.0;
      const auto i = static_cast<std::size_t>(it - s.offsets.begin());
      const auto p = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(r) - diag_row0(k));
      return s.values[i * diag_len(rows_, cols_) + p];
    }
  }
  return 0.0;
}

std::size_t DataMatrix::stored() const {
  switch (format_) {
    case Format::Dense: return rows_ * cols_;
    case Format::CSR: return csr().values.size();
    case Format::Dia: return dia().values.size();
  }
  return 0;
}

std::vector<cplx> DataMatrix::to_vector() const {
  return format_ == Format::Dense ? dense().values : convert(*this, Format::Dense).dense().values;
}

// ---- conversion --------------------------------------------------------------

DataMatrix convert(const DataMatrix& m, Format target) {
  if (m.format() == target) return m;
  const auto r = m.rows(), c = m.cols();
  switch (m.format()) {
    case Format::Dense:
      if (target == Format::CSR) return DataMatrix::from_csr(r, c, dense_to_csr(r, c, m.dense()));
      return DataMatrix::from_dia(r, c, dense_to_dia(r, c, m.dense()));
    case Format::CSR:
      if (target == Format::Dense) return DataMatrix::from_dense(r, c, csr_to_dense(r, c, m.csr()).values);
      return DataMatrix::from_dia(r, c, csr_to_dia(r, c, m.csr()));
    case Format::Dia:
      if (target == Format::Dense) return DataMatrix::from_dense(r, c, dia_to_dense(r, c, m.dia()).values);
      return DataMatrix::from_csr(r, c, dia_to_csr(r, c, m.dia()));
  }
  return m;
}

DataMatrix tidyup(const DataMatrix& m, double atol) {
  const auto r = m.rows(), c = m.cols();
  switch (m.format()) {
    case Format::Dense: {
      auto v = m.dense().values;
      for (auto& x : v)
        if (std::abs(x) < atol) x = 0.0;
      return DataMatrix::from_dense(r, c, std::move(v));
    }
    case Format::CSR: {
      const auto& s = m.csr();
      CsrData out;
      out.row_ptr.assign(r + 1, 0);
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k)
          if (std::abs(s.values[k]) >= atol && s.values[k] != cplx{0.0}) {
            out.col_idx.push_back(s.col_idx[k]);
            out.values.push_back(s.values[k]);
          }
        out.row_ptr[i + 1] = out.values.size();
      }
      return DataMatrix::from_csr(r, c, std::move(out));
    }
    case Format::Dia: {
      const auto& s = m.dia();
      const std::size_t len = diag_len(r, c);
      DiaData out;
      for (std::size_t i = 0; i < s.offsets.size(); ++i) {
        std::vector<cplx> v(s.values.begin() + static_cast<std::ptrdiff_t>(i * len),
                            s.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * len));
        bool any = false;
        for (auto& x : v) {
          if (std::abs(x) < atol) x = 0.0;
          any = any || x != cplx{0.0};
        }
        if (!any) continue;
        out.offsets.push_back(s.offsets[i]);
        out.values.insert(out.values.end(), v.begin(), v.end());
      }
      return DataMatrix::from_dia(r, c, std::move(out));
    }
  }
  return m;
}

Format promote(Format a, Format b) { return rank(a) >= rank(b) ? a : b; }

// ---- arithmetic ----------------------------------------------------------------

DataMatrix add(const DataMatrix& a, const DataMatrix& b, cplx s) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("add: shape mismatch " + shape_str(a.rows(), a.cols()) + " vs " +
                         shape_str(b.rows(), b.cols()));
  const Format f = promote(a.format(), b.format());
  const DataMatrix x = convert(a, f), y = convert(b, f);
  const auto r = a.rows(), c = a.cols();
  switch (f) {
    case Format::Dense: {
      auto v = x.dense().values;
      const auto& w = y.dense().values;
      if (v.size() >= kernels::kParallelThreshold)
        kernels::omp::axpy(s, w, v);
      else
        kernels::serial::axpy(s, w, v);
      return DataMatrix::from_dense(r, c, std::move(v));
    }
    case Format::CSR: return DataMatrix::from_csr(r, c, csr_add(r, x.csr(), y.csr(), s));
    case Format::Dia: return DataMatrix::from_dia(r, c, dia_add(r, c, x.dia(), y.dia(), s));
  }
  return {};
}

DataMatrix scale(const DataMatrix& a, cplx s) {
  const auto r = a.rows(), c = a.cols();
  if (s == cplx{0.0}) return DataMatrix::zeros(r, c, a.format());
  switch (a.format()) {
    case Format::Dense: {
      auto v = a.dense().values;
      for (auto& x : v) x *= s;
      return DataMatrix::from_dense(r, c, std::move(v));
    }
    case Format::CSR: {
      auto d = a.csr();
      for (auto& x : d.values) x *= s;
      return DataMatrix::from_csr(r, c, std::move(d));
    }
    case Format::Dia: {
      auto d = a.dia();
      for (auto& x : d.values) x *= s;
      return DataMatrix::from_dia(r, c, std::move(d));
    }
  }
  return {};
}

DataMatrix matmul(const DataMatrix& a, const DataMatrix& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimension mismatch " + shape_str(a.rows(), a.cols()) + " x " +
                         shape_str(b.rows(), b.cols()));
  const auto m = a.rows(), n = a.cols(), p = b.cols();
  const Format f = promote(a.format(), b.format());
  if (f == Format::Dense) {
    std::vector<cplx> out(m * p);
    if (a.format() == Format::Dense && b.format() == Format::Dense) {
      if (m * n * p >= kernels::kParallelThreshold)
        kernels::omp::dense_matmul(m, n, p, a.dense().values, b.dense().values, out);
      else
        kernels::serial::dense_matmul(m, n, p, a.dense().values, b.dense().values, out);
    } else if (b.format() == Format::Dense) {
      // sparse x dense: one sparse matvec per column of b
      const DataMatrix sa = a.format() == Format::Dia ? convert(a, Format::CSR) : a;
      const auto& bv = b.dense().values;
      for (std::size_t j = 0; j < p; ++j)
        matvec(sa, std::span<const cplx>(bv.data() + j * n, n), std::span<cplx>(out.data() + j * m, m));
    } else {
      // dense x sparse: C(:, j) += B(k, j) * A(:, k)
      const DataMatrix sb = b.format() == Format::Dia ? convert(b, Format::CSR) : b;
      const auto& s = sb.csr();
      const auto& av = a.dense().values;
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t q = s.row_ptr[k]; q < s.row_ptr[k + 1]; ++q) {
          const std::size_t j = s.col_idx[q];
          const cplx v = s.values[q];
          for (std::size_t i = 0; i < m; ++i) out[j * m + i] += v * av[k * m + i];
        }
    }
    return DataMatrix::from_dense(m, p, std::move(out));
  }
  if (f == Format::Dia)
    return DataMatrix::from_dia(m, p, dia_matmul(m, n, p, a.dia(), b.dia()));
  const DataMatrix x = convert(a, Format::CSR), y = convert(b, Format::CSR);
  return DataMatrix::from_csr(m, p, csr_matmul(m, p, x.csr(), y.csr()));
}

DataMatrix kron(const DataMatrix& a, const DataMatrix& b) {
  const auto ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
  const Format f = promote(a.format(), b.format());
  if (f == Format::Dense) {
    const auto x = a.to_vector();
    const auto y = b.to_vector();
    const std::size_t rows = ra * rb;
    std::vector<cplx> out(rows * ca * cb);
    for (std::size_t ja = 0; ja < ca; ++ja)
      for (std::size_t jb = 0; jb < cb; ++jb) {
        cplx* col = out.data() + (ja * cb + jb) * rows;
        for (std::size_t ia = 0; ia < ra; ++ia) {
          const cplx av = x[ja * ra + ia];
          if (av == cplx{0.0}) continue;
          for (std::size_t ib = 0; ib < rb; ++ib) col[ia * rb + ib] = av * y[jb * rb + ib];
        }
      }
    return DataMatrix::from_dense(rows, ca * cb, std::move(out));
  }
  const DataMatrix x = convert(a, Format::CSR), y = convert(b, Format::CSR);
  auto prod = DataMatrix::from_csr(ra * rb, ca * cb, csr_kron(ra, x.csr(), rb, cb, y.csr()));
  return f == Format::CSR ? prod : convert(prod, Format::Dia);
}

DataMatrix unary(const DataMatrix& m, Unary kind) {
  const auto r = m.rows(), c = m.cols();
  if (kind == Unary::Conjugate) {
    switch (m.format()) {
      case Format::Dense: {
        auto v = m.dense().values;
        for (auto& x : v) x = std::conj(x);
        return DataMatrix::from_dense(r, c, std::move(v));
      }
      case Format::CSR: {
        auto d = m.csr();
        for (auto& x : d.values) x = std::conj(x);
        return DataMatrix::from_csr(r, c, std::move(d));
      }
      case Format::Dia: {
        auto d = m.dia();
        for (auto& x : d.values) x = std::conj(x);
        return DataMatrix::from_dia(r, c, std::move(d));
      }
    }
  }
  const bool cj = kind == Unary::Adjoint;
  switch (m.format()) {
    case Format::Dense: {
      const auto& v = m.dense().values;
      std::vector<cplx> out(r * c);
      for (std::size_t j = 0; j < c; ++j)
        for (std::size_t i = 0; i < r; ++i) out[i * c + j] = cj ? std::conj(v[j * r + i]) : v[j * r + i];
      return DataMatrix::from_dense(c, r, std::move(out));
    }
    case Format::CSR: return DataMatrix::from_csr(c, r, csr_transpose(r, c, m.csr(), cj));
    case Format::Dia: {
      // diagonal k becomes -k with the same position index along it
      const auto& d = m.dia();
      const std::size_t len = diag_len(r, c);
      DiaData out;
      for (std::size_t i = d.offsets.size(); i-- > 0;) {
        out.offsets.push_back(-d.offsets[i]);
        for (std::size_t p = 0; p < len; ++p) {
          const cplx v = d.values[i * len + p];
          out.values.push_back(cj ? std::conj(v) : v);
        }
      }
      return DataMatrix::from_dia(c, r, std::move(out));
    }
  }
  return m;
}

cplx trace(const DataMatrix& m) {
  if (!m.is_square()) throw DimensionError("trace: matrix is not square " + shape_str(m.rows(), m.cols()));
  cplx t{0.0};
  const auto n = m.rows();
  switch (m.format()) {
    case Format::Dense:
      for (std::size_t i = 0; i < n; ++i) t += m.dense().values[i * n + i];
      break;
    case Format::CSR:
      for (std::size_t i = 0; i < n; ++i) t += m.at(i, i);
      break;
    case Format::Dia: {
      const auto& d = m.dia();
      auto it = std::lower_bound(d.offsets.begin(), d.offsets.end(), std::ptrdiff_t{0});
      if (it != d.offsets.end() && *it == 0) {
        const auto i = static_cast<std::size_t>(it - d.offsets.begin());
        for (std::size_t p = 0; p < n; ++p) t += d.values[i * n + p];
      }
      break;
    }
  }
  return t;
}

void matvec(const DataMatrix& m, std::span<const cplx> x, std::span<cplx> y, cplx alpha, cplx beta) {
  if (x.size() != m.cols() || y.size() != m.rows())
    throw DimensionError("matvec: operand sizes do not match " + shape_str(m.rows(), m.cols()));
  const bool par = m.stored() >= kernels::kParallelThreshold;
  switch (m.format()) {
    case Format::Dense:
      if (par)
        kernels::omp::dense_matvec(m.rows(), m.cols(), m.dense().values, x, y, alpha, beta);
      else
        kernels::serial::dense_matvec(m.rows(), m.cols(), m.dense().values, x, y, alpha, beta);
      break;
    case Format::CSR: {
      const auto& s = m.csr();
      if (par)
        kernels::omp::csr_matvec(m.rows(), s.row_ptr, s.col_idx, s.values, x, y, alpha, beta);
      else
        kernels::serial::csr_matvec(m.rows(), s.row_ptr, s.col_idx, s.values, x, y, alpha, beta);
      break;
    }
    case Format::Dia: {
      const auto& s = m.dia();
      if (par)
        kernels::omp::dia_matvec(m.rows(), m.cols(), s.offsets, s.values, x, y, alpha, beta);
      else
        kernels::serial::dia_matvec(m.rows(), m.cols(), s.offsets, s.values, x, y, alpha, beta);
      break;
    }
  }
}

std::vector<cplx> matvec(const DataMatrix& m, std::span<const cplx> x) {
  std::vector<cplx> y(m.rows());
  matvec(m, x, y);
  return y;
}

// ---- norms ---------------------------------------------------------------------

namespace {
std::span<const cplx> stored_values(const DataMatrix& m) {
  switch (m.format()) {
    case Format::Dense: return m.dense().values;
    case Format::CSR: return m.csr().values;
    case Format::Dia: return m.dia().values;
  }
  return {};
}
}  // namespace

double norm_max(const DataMatrix& m) {
  double out = 0.0;
  for (const cplx& v : stored_values(m)) out = std::max(out, std::abs(v));
  return out;
}

double norm_frobenius(const DataMatrix& m) {
  double s = 0.0;
  for (const cplx& v : stored_values(m)) s += std::norm(v);
  return std::sqrt(s);
}

double norm_one(const DataMatrix& m) {
  std::vector<double> col(m.cols(), 0.0);
  if (m.format() == Format::CSR) {
    const auto& s = m.csr();
    for (std::size_t k = 0; k < s.values.size(); ++k) col[s.col_idx[k]] += std::abs(s.values[k]);
  } else {
    const auto v = m.to_vector();
    for (std::size_t j = 0; j < m.cols(); ++j)
      for (std::size_t i = 0; i < m.rows(); ++i) col[j] += std::abs(v[j * m.rows() + i]);
  }
  return col.empty() ? 0.0 : *std::max_element(col.begin(), col.end());
}

double max_abs_diff(const DataMatrix& a, const DataMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("max_abs_diff: shape mismatch");
  return norm_max(add(a, b, -1.0));
}

bool is_hermitian(const DataMatrix& m, double tol) {
  if (!m.is_square()) return false;
  return max_abs_diff(m, adjoint(m)) <= tol;
}

}  // namespace openq::data
