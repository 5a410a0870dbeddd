#include "openq/qobj.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "openq/data/linalg.hpp"
#include "openq/errors.hpp"

namespace openq {

namespace {

std::string dims_str(const Space& s) {
  std::ostringstream os;
  if (s.enr) os << "enr";
  os << "[";
  for (std::size_t i = 0; i < s.dims.size(); ++i) os << (i ? "," : "") << s.dims[i];
  os << "]";
  if (s.enr) os << "<=" << s.enr->n_exc;
  return os.str();
}

void require_plain(const Qobj& q, const char* what) {
  if (q.dims().rows.enr || q.dims().cols.enr)
    throw UnsupportedError(std::string(what) + ": not available on excitation-restricted spaces");
}

// Mixed-radix split of a flat index into subsystem indices.
void unravel(std::size_t flat, const std::vector<std::size_t>& dims, std::vector<std::size_t>& out) {
  out.resize(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    out[k] = flat % dims[k];
    flat /= dims[k];
  }
}

std::size_t ravel(const std::vector<std::size_t>& idx, const std::vector<std::size_t>& dims) {
  std::size_t flat = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) flat = flat * dims[k] + idx[k];
  return flat;
}

Qobj as_dm(const Qobj& q) {
  if (q.isket()) return ket2dm(q);
  if (q.isbra()) return ket2dm(q.dag());
  if (!q.isoper()) throw DimensionError("expected a ket or density operator");
  return q;
}

std::vector<double> herm_eigvals(const DataMatrix& m) {
  // average with the adjoint to remove rounding-level anti-Hermitian parts
  const DataMatrix h = data::scale(data::add(m, data::adjoint(m)), 0.5);
  return data::eig_herm(h).values;
}

void check_psd(const std::vector<double>& ev, const char* what) {
  for (double v : ev)
    if (v < -1e-10) throw PreconditionError(std::string(what) + ": state has negative eigenvalue " +
                                            std::to_string(v));
}

}  // namespace

// ---- Space / Dimensions ---------------------------------------------------------

std::size_t Space::size() const {
  if (enr) return enr->size();
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

bool Space::is_scalar() const {
  return !enr && std::all_of(dims.begin(), dims.end(), [](std::size_t d) { return d == 1; });
}

bool Space::operator==(const Space& o) const {
  if (bool(enr) != bool(o.enr)) return false;
  if (enr) return *enr == *o.enr;
  return dims == o.dims;
}

std::size_t Dimensions::nrows() const {
  const auto s = rows.size();
  return super_rows ? s * s : s;
}
std::size_t Dimensions::ncols() const {
  const auto s = cols.size();
  return super_cols ? s * s : s;
}

bool Dimensions::operator==(const Dimensions& o) const {
  return rows == o.rows && cols == o.cols && super_rows == o.super_rows && super_cols == o.super_cols;
}

std::string Dimensions::str() const {
  auto side = [](const Space& s, bool sup) { return sup ? "[" + dims_str(s) + "," + dims_str(s) + "]" : dims_str(s); };
  return "[" + side(rows, super_rows) + "," + side(cols, super_cols) + "]";
}

const char* kind_name(QobjKind k) {
  switch (k) {
    case QobjKind::ket: return "ket";
    case QobjKind::bra: return "bra";
    case QobjKind::oper: return "oper";
    case QobjKind::super: return "super";
    case QobjKind::operator_ket: return "operator-ket";
    case QobjKind::operator_bra: return "operator-bra";
  }
  return "?";
}

QobjKind infer_kind(const Dimensions& d, std::size_t nrows, std::size_t ncols) {
  if (d.nrows() != nrows || d.ncols() != ncols)
    throw DimensionError("dims " + d.str() + " inconsistent with data shape (" + std::to_string(nrows) + "x" +
                         std::to_string(ncols) + ")");
  if (d.super_rows && d.super_cols) return QobjKind::super;
  if (d.super_rows) {
    if (!d.cols.is_scalar()) throw DimensionError("operator-ket must have a scalar column space");
    return QobjKind::operator_ket;
  }
  if (d.super_cols) {
    if (!d.rows.is_scalar()) throw DimensionError("operator-bra must have a scalar row space");
    return QobjKind::operator_bra;
  }
  if (ncols == 1 && d.cols.is_scalar()) return QobjKind::ket;
  if (nrows == 1 && d.rows.is_scalar()) return QobjKind::bra;
  return QobjKind::oper;
}

// ---- Qobj ---------------------------------------------------------------------------

Qobj::Qobj() : Qobj(DataMatrix::zeros(1, 1, Format::Dense)) {}

Qobj::Qobj(DataMatrix data, std::optional<Dimensions> dims) : data_(std::move(data)) {
  dims_ = dims ? *dims : Dimensions{Space{data_.rows()}, Space{data_.cols()}, false, false};
  kind_ = infer_kind(dims_, data_.rows(), data_.cols());
}

Qobj::Qobj(const Qobj& o) : data_(o.data_), dims_(o.dims_), kind_(o.kind_), herm_(o.herm_.load()) {}
Qobj::Qobj(Qobj&& o) noexcept
    : data_(std::move(o.data_)), dims_(std::move(o.dims_)), kind_(o.kind_), herm_(o.herm_.load()) {}
Qobj& Qobj::operator=(const Qobj& o) {
  data_ = o.data_;
  dims_ = o.dims_;
  kind_ = o.kind_;
  herm_.store(o.herm_.load());
  return *this;
}
Qobj& Qobj::operator=(Qobj&& o) noexcept {
  data_ = std::move(o.data_);
  dims_ = std::move(o.dims_);
  kind_ = o.kind_;
  herm_.store(o.herm_.load());
  return *this;
}

bool Qobj::isherm() const {
  int8_t h = herm_.load(std::memory_order_relaxed);
  if (h < 0) {
    const bool v = data_.is_square() && dims_.rows == dims_.cols && dims_.super_rows == dims_.super_cols &&
                   data::is_hermitian(data_, 1e-12);
    h = v ? 1 : 0;
    herm_.store(h, std::memory_order_relaxed);
  }
  return h == 1;
}

Qobj Qobj::to(Format f) const {
  Qobj out(data::convert(data_, f), dims_);
  out.herm_.store(herm_.load());
  return out;
}

Qobj Qobj::dag() const {
  return Qobj(data::adjoint(data_), Dimensions{dims_.cols, dims_.rows, dims_.super_cols, dims_.super_rows});
}
Qobj Qobj::trans() const {
  return Qobj(data::transpose(data_), Dimensions{dims_.cols, dims_.rows, dims_.super_cols, dims_.super_rows});
}
Qobj Qobj::conj() const { return Qobj(data::conj(data_), dims_); }

cplx Qobj::tr() const { return data::trace(data_); }

double Qobj::norm() const {
  if (kind_ == QobjKind::oper) {
    if (isherm()) {
      double s = 0.0;
      for (double v : data::eig_herm(data_).values) s += std::abs(v);
      return s;
    }
    double s = 0.0;
    for (double v : herm_eigvals(data::matmul(data::adjoint(data_), data_))) s += std::sqrt(std::max(0.0, v));
    return s;
  }
  return data::norm_frobenius(data_);
}

Qobj Qobj::unit() const {
  const double n = norm();
  if (n == 0.0) throw NumericalError("unit: object has zero norm");
  return Qobj(data::scale(data_, 1.0 / n), dims_);
}

Qobj Qobj::expm() const {
  if (kind_ != QobjKind::oper && kind_ != QobjKind::super) throw DimensionError("expm: requires a square operator");
  return Qobj(data::expm(data_), dims_);
}

Qobj Qobj::tidyup(double atol) const { return Qobj(data::tidyup(data_, atol), dims_); }

Qobj& Qobj::operator+=(const Qobj& o) { return *this = *this + o; }
Qobj& Qobj::operator-=(const Qobj& o) { return *this = *this - o; }
Qobj& Qobj::operator*=(cplx s) { return *this = *this * s; }

Qobj operator+(const Qobj& a, const Qobj& b) {
  if (a.dims() != b.dims())
    throw DimensionError("add: dims " + a.dims().str() + " and " + b.dims().str() + " differ");
  return Qobj(data::add(a.data(), b.data()), a.dims());
}
Qobj operator-(const Qobj& a, const Qobj& b) {
  if (a.dims() != b.dims())
    throw DimensionError("subtract: dims " + a.dims().str() + " and " + b.dims().str() + " differ");
  return Qobj(data::add(a.data(), b.data(), -1.0), a.dims());
}
Qobj operator-(const Qobj& a) { return Qobj(data::scale(a.data(), -1.0), a.dims()); }

Qobj operator*(const Qobj& a, const Qobj& b) {
  const auto& da = a.dims();
  const auto& db = b.dims();
  if (da.cols != db.rows || da.super_cols != db.super_rows)
    throw DimensionError("multiply: incompatible dims " + da.str() + " * " + db.str());
  return Qobj(data::matmul(a.data(), b.data()), Dimensions{da.rows, db.cols, da.super_rows, db.super_cols});
}
Qobj operator*(cplx s, const Qobj& a) { return Qobj(data::scale(a.data(), s), a.dims()); }
Qobj operator*(const Qobj& a, cplx s) { return s * a; }
Qobj operator/(const Qobj& a, cplx s) { return Qobj(data::scale(a.data(), 1.0 / s), a.dims()); }

// ---- structure ------------------------------------------------------------------------

Qobj tensor(const std::vector<Qobj>& objs) {
  if (objs.empty()) throw DimensionError("tensor: empty list");
  const QobjKind k = objs.front().kind();
  if (k != QobjKind::ket && k != QobjKind::bra && k != QobjKind::oper)
    throw UnsupportedError("tensor: only kets, bras and operators are supported");
  DataMatrix d = objs.front().data();
  std::vector<std::size_t> rd, cd;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const Qobj& q = objs[i];
    require_plain(q, "tensor");
    if (q.kind() != k)
      throw DimensionError(std::string("tensor: mixed kinds ") + kind_name(k) + " and " + kind_name(q.kind()));
    if (i > 0) d = data::kron(d, q.data());
    rd.insert(rd.end(), q.dims().rows.dims.begin(), q.dims().rows.dims.end());
    cd.insert(cd.end(), q.dims().cols.dims.begin(), q.dims().cols.dims.end());
  }
  return Qobj(std::move(d), Dimensions{Space{rd}, Space{cd}, false, false});
}

Qobj ket2dm(const Qobj& psi) {
  if (psi.isbra()) return psi.dag() * psi;
  if (!psi.isket()) throw DimensionError("ket2dm: expected a ket");
  return psi * psi.dag();
}

Qobj ptrace(const Qobj& q, std::vector<std::size_t> keep) {
  require_plain(q, "ptrace");
  const Qobj rho = q.isket() ? ket2dm(q) : q;
  if (!rho.isoper() || rho.dims().rows != rho.dims().cols)
    throw DimensionError("ptrace: expected a ket or square operator");
  const auto& dims = rho.dims().rows.dims;
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  for (std::size_t k : keep)
    if (k >= dims.size()) throw RangeError("ptrace: subsystem index " + std::to_string(k) + " out of range");
  std::vector<bool> kept(dims.size(), false);
  for (std::size_t k : keep) kept[k] = true;
  std::vector<std::size_t> kdims;
  for (std::size_t k : keep) kdims.push_back(dims[k]);
  if (kdims.empty()) kdims.push_back(1);
  const std::size_t nk = std::accumulate(kdims.begin(), kdims.end(), std::size_t{1}, std::multiplies<>());

  const DataMatrix csr = data::convert(rho.data(), Format::CSR);
  const auto& s = csr.csr();
  std::vector<cplx> out(nk * nk);
  std::vector<std::size_t> ri, ci, rk, ck;
  for (std::size_t r = 0; r < csr.rows(); ++r) {
    unravel(r, dims, ri);
    for (std::size_t p = s.row_ptr[r]; p < s.row_ptr[r + 1]; ++p) {
      unravel(s.col_idx[p], dims, ci);
      bool match = true;
      rk.clear();
      ck.clear();
      for (std::size_t k = 0; k < dims.size() && match; ++k) {
        if (kept[k]) {
          rk.push_back(ri[k]);
          ck.push_back(ci[k]);
        } else if (ri[k] != ci[k]) {
          match = false;
        }
      }
      if (!match) continue;
      const std::size_t a = keep.empty() ? 0 : ravel(rk, kdims);
      const std::size_t b = keep.empty() ? 0 : ravel(ck, kdims);
      out[b * nk + a] += s.values[p];
    }
  }
  Space ks{kdims};
  return Qobj(DataMatrix::from_dense(nk, nk, std::move(out)), Dimensions::oper(ks));
}

Qobj partial_transpose(const Qobj& rho, const std::vector<bool>& mask) {
  require_plain(rho, "partial_transpose");
  if (!rho.isoper() || rho.dims().rows != rho.dims().cols)
    throw DimensionError("partial_transpose: expected a square operator");
  const auto& dims = rho.dims().rows.dims;
  if (mask.size() != dims.size()) throw DimensionError("partial_transpose: mask length mismatch");
  const DataMatrix csr = data::convert(rho.data(), Format::CSR);
  const auto& s = csr.csr();
  std::vector<data::Triplet> trip;
  trip.reserve(s.values.size());
  std::vector<std::size_t> ri, ci;
  for (std::size_t r = 0; r < csr.rows(); ++r)
    for (std::size_t p = s.row_ptr[r]; p < s.row_ptr[r + 1]; ++p) {
      unravel(r, dims, ri);
      unravel(s.col_idx[p], dims, ci);
      for (std::size_t k = 0; k < dims.size(); ++k)
        if (mask[k]) std::swap(ri[k], ci[k]);
      trip.push_back({ravel(ri, dims), ravel(ci, dims), s.values[p]});
    }
  return Qobj(DataMatrix::from_triplets(csr.rows(), csr.cols(), std::move(trip), rho.format()), rho.dims());
}

cplx expect(const Qobj& op, const Qobj& state) {
  if (!op.isoper()) throw DimensionError("expect: operator must be an oper");
  cplx val{0.0};
  bool real = false;
  if (state.isket()) {
    if (op.dims().cols != state.dims().rows) throw DimensionError("expect: dims mismatch");
    const auto psi = state.full();
    const auto y = data::matvec(op.data(), psi);
    for (std::size_t i = 0; i < psi.size(); ++i) val += std::conj(psi[i]) * y[i];
    real = op.isherm();
  } else if (state.isoper()) {
    if (op.dims().cols != state.dims().rows || op.dims().rows != state.dims().cols)
      throw DimensionError("expect: dims mismatch");
    const std::size_t n = state.rows();
    const auto rho = state.full();
    const DataMatrix csr = data::convert(op.data(), Format::CSR);
    const auto& s = csr.csr();
    for (std::size_t i = 0; i < csr.rows(); ++i)
      for (std::size_t p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p) val += s.values[p] * rho[i * n + s.col_idx[p]];
    real = op.isherm() && state.isherm();
  } else {
    throw DimensionError("expect: state must be a ket or operator");
  }
  return real ? cplx{val.real(), 0.0} : val;
}

cplx inner(const Qobj& a, const Qobj& b) {
  if (!a.isket() || !b.isket() || a.dims() != b.dims()) throw DimensionError("inner: expected kets with equal dims");
  const auto x = a.full(), y = b.full();
  cplx s{0.0};
  for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

Qobj commutator(const Qobj& a, const Qobj& b, bool anti) { return anti ? a * b + b * a : a * b - b * a; }

Eigenstates eigenstates(const Qobj& h) {
  if (!h.isoper()) throw DimensionError("eigenstates: expected an operator");
  auto eig = data::eig_herm(h.data());
  Eigenstates out;
  out.values = eig.values;
  const std::size_t n = h.rows();
  const auto& v = eig.vectors.dense().values;
  for (std::size_t k = 0; k < n; ++k)
    out.states.emplace_back(DataMatrix::from_dense(n, 1, std::vector<cplx>(v.begin() + k * n, v.begin() + (k + 1) * n)),
                            Dimensions::ket(h.dims().rows));
  return out;
}

// ---- superoperators -----------------------------------------------------------------

namespace {
void require_square_oper(const Qobj& q, const char* what) {
  if (!q.isoper() || q.dims().rows != q.dims().cols)
    throw DimensionError(std::string(what) + ": expected a square operator");
}
}  // namespace

Qobj super_lr(const Qobj& a, const Qobj& b) {
  require_square_oper(a, "super_lr");
  require_square_oper(b, "super_lr");
  if (a.dims() != b.dims()) throw DimensionError("super_lr: operand dims differ");
  return Qobj(data::kron(data::transpose(b.data()), a.data()), Dimensions::super(a.dims().rows));
}

Qobj spre(const Qobj& a) {
  require_square_oper(a, "spre");
  const Format f = a.format() == Format::Dense ? Format::Dense : Format::CSR;
  return Qobj(data::kron(DataMatrix::identity(a.rows(), f), a.data()), Dimensions::super(a.dims().rows));
}

Qobj spost(const Qobj& b) {
  require_square_oper(b, "spost");
  const Format f = b.format() == Format::Dense ? Format::Dense : Format::CSR;
  return Qobj(data::kron(data::transpose(b.data()), DataMatrix::identity(b.rows(), f)),
              Dimensions::super(b.dims().rows));
}

Qobj lindblad_dissipator(const Qobj& a) {
  require_square_oper(a, "lindblad_dissipator");
  const Qobj ad = a.dag();
  const Qobj n = ad * a;
  return super_lr(a, ad) - 0.5 * spre(n) - 0.5 * spost(n);
}

Qobj liouvillian(const std::optional<Qobj>& h, const std::vector<Qobj>& c_ops) {
  std::optional<Qobj> l;
  if (h) {
    if (h->issuper()) {
      l = *h;
    } else {
      require_square_oper(*h, "liouvillian");
      l = cplx{0.0, -1.0} * (spre(*h) - spost(*h));
    }
  }
  for (const Qobj& c : c_ops) {
    const Qobj d = c.issuper() ? c : lindblad_dissipator(c);
    if (l && l->dims() != d.dims()) throw DimensionError("liouvillian: collapse operator dims do not match H");
    l = l ? *l + d : d;
  }
  if (!l) throw DimensionError("liouvillian: needs a Hamiltonian or at least one collapse operator");
  return *l;
}

Qobj operator_to_vector(const Qobj& op) {
  if (!op.isoper() || op.dims().rows != op.dims().cols)
    throw DimensionError("operator_to_vector: expected a square operator");
  auto v = op.full();
  const std::size_t n = v.size();
  return Qobj(DataMatrix::from_dense(n, 1, std::move(v)), Dimensions{op.dims().rows, Space{1}, true, false});
}

Qobj vector_to_operator(const Qobj& vec) {
  if (!vec.isoperket()) throw DimensionError("vector_to_operator: expected an operator-ket");
  const std::size_t n = vec.dims().rows.size();
  return Qobj(DataMatrix::from_dense(n, n, vec.full()), Dimensions::oper(vec.dims().rows));
}

// ---- metrics ----------------------------------------------------------------------------

double fidelity(const Qobj& a, const Qobj& b) {
  const Qobj r = as_dm(a), s = as_dm(b);
  if (r.dims() != s.dims()) throw DimensionError("fidelity: dims mismatch");
  check_psd(herm_eigvals(r.data()), "fidelity");
  check_psd(herm_eigvals(s.data()), "fidelity");
  const DataMatrix sr = data::herm_function(data::scale(data::add(r.data(), data::adjoint(r.data())), 0.5),
                                            [](double x) { return cplx{std::sqrt(std::max(0.0, x))}; });
  const DataMatrix m = data::matmul(data::matmul(sr, s.data()), sr);
  double f = 0.0;
  for (double v : herm_eigvals(m)) f += std::sqrt(std::max(0.0, v));
  return std::min(1.0, f);
}

double tracedist(const Qobj& a, const Qobj& b) {
  const Qobj r = as_dm(a), s = as_dm(b);
  if (r.dims() != s.dims()) throw DimensionError("tracedist: dims mismatch");
  double t = 0.0;
  for (double v : herm_eigvals(data::add(r.data(), s.data(), -1.0))) t += std::abs(v);
  return std::min(1.0, 0.5 * t);
}

double entropy_vn(const Qobj& rho, double base) {
  const Qobj r = as_dm(rho);
  const auto ev = herm_eigvals(r.data());
  check_psd(ev, "entropy_vn");
  double s = 0.0;
  for (double v : ev)
    if (v > 0) s -= v * std::log(v);
  return s / std::log(base);
}

double entropy_linear(const Qobj& rho) {
  const Qobj r = as_dm(rho);
  return 1.0 - (r * r).tr().real();
}

double concurrence(const Qobj& rho) {
  const Qobj r = as_dm(rho);
  if (r.dims().rows.enr || r.dims().rows.dims != std::vector<std::size_t>{2, 2})
    throw DimensionError("concurrence: requires a two-qubit state");
  const std::vector<cplx> yy_vals{0, 0, 0, -1, 0, 0, 1, 0, 0, 1, 0, 0, -1, 0, 0, 0};
  const DataMatrix yy = DataMatrix::from_dense(4, 4, yy_vals);
  const DataMatrix tilde = data::matmul(data::matmul(yy, data::conj(r.data())), yy);
  const DataMatrix sr = data::herm_function(data::scale(data::add(r.data(), data::adjoint(r.data())), 0.5),
                                            [](double x) { return cplx{std::sqrt(std::max(0.0, x))}; });
  auto ev = herm_eigvals(data::matmul(data::matmul(sr, tilde), sr));
  std::vector<double> lam;
  for (double v : ev) lam.push_back(std::sqrt(std::max(0.0, v)));
  std::sort(lam.rbegin(), lam.rend());
  return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

double negativity(const Qobj& rho, std::size_t subsys, bool logarithmic) {
  const Qobj r = as_dm(rho);
  if (subsys >= r.dims().rows.dims.size()) throw RangeError("negativity: subsystem index out of range");
  std::vector<bool> mask(r.dims().rows.dims.size(), false);
  mask[subsys] = true;
  const Qobj pt = partial_transpose(r, mask);
  double tn = 0.0;
  for (double v : herm_eigvals(pt.data())) tn += std::abs(v);
  return logarithmic ? std::log2(tn) : 0.5 * (tn - 1.0);
}

double metric(const std::string& kind, const Qobj& a, const std::optional<Qobj>& b) {
  auto need_b = [&]() -> const Qobj& {
    if (!b) throw PreconditionError("metric '" + kind + "' needs two states");
    return *b;
  };
  if (kind == "fidelity") return fidelity(a, need_b());
  if (kind == "tracedist") return tracedist(a, need_b());
  if (kind == "entropy_vn") return entropy_vn(a);
  if (kind == "entropy_linear") return entropy_linear(a);
  if (kind == "concurrence") return concurrence(a);
  if (kind == "negativity") return negativity(a, 0);
  throw PreconditionError("unknown metric '" + kind + "'");
}

}  // namespace openq
