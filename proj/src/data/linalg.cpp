#include "openq/data/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "openq/errors.hpp"

namespace openq::data {

namespace {

std::vector<cplx> dense_copy(const DataMatrix& m) { return m.to_vector(); }

// Real symmetric tridiagonal QL with implicit shifts (tql2 layout):
// d = diagonal, e[i] = T(i+1, i) with e[n-1] = 0. z (n x n, column-major)
// accumulates the rotations.
void tql2(std::vector<double>& d, std::vector<double>& e, std::vector<double>& z, std::size_t n) {
  const double eps = std::numeric_limits<double>::epsilon();
  double f = 0.0, tst1 = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n - 1 && std::abs(e[m]) > eps * tst1) ++m;
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > 60) throw ConvergenceError("eig_herm: QL iteration did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          double* zi = z.data() + ii * n;
          double* zi1 = z.data() + (ii + 1) * n;
          for (std::size_t k = 0; k < n; ++k) {
            h = zi1[k];
            zi1[k] = s * zi[k] + c * h;
            zi[k] = c * zi[k] - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

// C = A * B for dense column-major n x n.
std::vector<cplx> mul(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t n) {
  std::vector<cplx> c(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      const cplx bkj = b[j * n + k];
      if (bkj == cplx{0.0}) continue;
      const cplx* ak = a.data() + k * n;
      cplx* cj = c.data() + j * n;
      for (std::size_t i = 0; i < n; ++i) cj[i] += ak[i] * bkj;
    }
  return c;
}

}  // namespace

EigResult eig_herm(const DataMatrix& m, double herm_tol) {
  if (!m.is_square()) throw DimensionError("eig_herm: matrix is not square");
  if (!is_hermitian(m, herm_tol)) throw PreconditionError("eig_herm: matrix is not Hermitian");
  const std::size_t n = m.rows();
  if (n == 0) return {{}, DataMatrix::zeros(0, 0, Format::Dense)};

  auto a = dense_copy(m);
  // symmetrize exactly so rounding in the input cannot leak in
  for (std::size_t j = 0; j < n; ++j) {
    a[j * n + j] = a[j * n + j].real();
    for (std::size_t i = j + 1; i < n; ++i) {
      const cplx avg = 0.5 * (a[j * n + i] + std::conj(a[i * n + j]));
      a[j * n + i] = avg;
      a[i * n + j] = std::conj(avg);
    }
  }

  std::vector<cplx> q(n * n);
  for (std::size_t i = 0; i < n; ++i) q[i * n + i] = 1.0;

  // Householder: A <- H A H with H = I - 2 v v^H, v supported on k+1..n-1.
  std::vector<cplx> v(n), p(n), qv(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double xnorm2 = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) xnorm2 += std::norm(a[k * n + i]);
    const double xnorm = std::sqrt(xnorm2);
    double tail = xnorm2 - std::norm(a[k * n + k + 1]);
    if (xnorm == 0.0 || tail == 0.0) continue;
    const cplx x0 = a[k * n + k + 1];
    const cplx phase = std::abs(x0) > 0 ? x0 / std::abs(x0) : cplx{1.0};
    const cplx alpha = -phase * xnorm;
    std::fill(v.begin(), v.end(), cplx{0.0});
    for (std::size_t i = k + 1; i < n; ++i) v[i] = a[k * n + i];
    v[k + 1] -= alpha;
    double vn = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vn += std::norm(v[i]);
    vn = std::sqrt(vn);
    for (std::size_t i = k + 1; i < n; ++i) v[i] /= vn;

    // p = A v
    std::fill(p.begin(), p.end(), cplx{0.0});
    for (std::size_t j = k + 1; j < n; ++j) {
      const cplx vj = v[j];
      for (std::size_t i = k; i < n; ++i) p[i] += a[j * n + i] * vj;
    }
    cplx vp{0.0};
    for (std::size_t i = k + 1; i < n; ++i) vp += std::conj(v[i]) * p[i];
    // A - 2 v p^H - 2 p v^H + 4 (v^H p) v v^H
    for (std::size_t j = k; j < n; ++j)
      for (std::size_t i = k; i < n; ++i)
        a[j * n + i] += -2.0 * v[i] * std::conj(p[j]) - 2.0 * p[i] * std::conj(v[j]) +
                        4.0 * vp * v[i] * std::conj(v[j]);
    // Q <- Q H
    std::fill(qv.begin(), qv.end(), cplx{0.0});
    for (std::size_t j = k + 1; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) qv[i] += q[j * n + i] * v[j];
    for (std::size_t j = k + 1; j < n; ++j) {
      const cplx cv = 2.0 * std::conj(v[j]);
      for (std::size_t i = 0; i < n; ++i) q[j * n + i] -= qv[i] * cv;
    }
  }

  // Phase-rotate so the sub-diagonal is real and non-negative.
  std::vector<double> d(n), e(n, 0.0);
  cplx dk{1.0};
  for (std::size_t k = 0; k < n; ++k) {
    d[k] = a[k * n + k].real();
    if (k > 0)
      for (std::size_t i = 0; i < n; ++i) q[k * n + i] *= dk;
    if (k + 1 < n) {
      const cplx sub = a[k * n + k + 1];
      const double mag = std::abs(sub);
      e[k] = mag;
      if (mag > 0) dk *= sub / mag;
    }
  }

  std::vector<double> z(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) z[i * n + i] = 1.0;
  tql2(d, e, z, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d[x] < d[y]; });

  EigResult out;
  out.values.resize(n);
  std::vector<cplx> vec(n * n);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.values[c] = d[src];
    for (std::size_t k = 0; k < n; ++k) {
      const double zk = z[src * n + k];
      if (zk == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) vec[c * n + i] += q[k * n + i] * zk;
    }
  }
  out.vectors = DataMatrix::from_dense(n, n, std::move(vec));
  return out;
}

DataMatrix expm(const DataMatrix& m) {
  if (!m.is_square()) throw DimensionError("expm: matrix is not square");
  const std::size_t n = m.rows();
  if (n == 0) return m;
  if (is_hermitian(m, 1e-12)) return herm_function(m, [](double x) { return cplx{std::exp(x)}; });

  const double norm = norm_one(m);
  int s = 0;
  if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  auto a = dense_copy(m);
  const double sc = std::ldexp(1.0, -s);
  for (auto& x : a) x *= sc;

  // [6/6] Pade: N = sum c_k A^k, D = sum (-1)^k c_k A^k.
  constexpr int p = 6;
  std::vector<cplx> num(n * n), den(n * n);
  std::vector<cplx> pow(n * n);
  for (std::size_t i = 0; i < n; ++i) pow[i * n + i] = 1.0;
  double c = 1.0;
  for (int k = 0; k <= p; ++k) {
    if (k > 0) {
      c *= static_cast<double>(p + 1 - k) / static_cast<double>(k * (2 * p + 1 - k));
      pow = mul(pow, a, n);
    }
    const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < n * n; ++i) {
      num[i] += c * pow[i];
      den[i] += sgn * c * pow[i];
    }
  }
  LuFactorization lu(DataMatrix::from_dense(n, n, std::move(den)));
  for (std::size_t j = 0; j < n; ++j) lu.solve_in_place(std::span<cplx>(num.data() + j * n, n));
  for (int k = 0; k < s; ++k) num = mul(num, num, n);
  return DataMatrix::from_dense(n, n, std::move(num));
}

// ---- LU --------------------------------------------------------------------------

LuFactorization::LuFactorization(const DataMatrix& a) : n_(a.rows()) {
  if (!a.is_square()) throw DimensionError("lu: matrix is not square");
  lu_ = a.to_vector();
  piv_.resize(n_);
  const double scale = norm_max(a);
  const double floor = 1e-14 * scale;
  if (n_ > 0 && scale == 0.0) throw SingularityError("lu: matrix is zero");
  const std::size_t n = n_;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pr = k;
    double best = std::abs(lu_[k * n + k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::abs(lu_[k * n + i]);
      if (v > best) {
        best = v;
        pr = i;
      }
    }
    if (best <= floor)
      throw SingularityError("lu: numerically singular matrix (pivot " + std::to_string(best) + " at column " +
                             std::to_string(k) + ")");
    piv_[k] = pr;
    if (pr != k)
      for (std::size_t j = 0; j < n; ++j) std::swap(lu_[j * n + k], lu_[j * n + pr]);
    const cplx inv = 1.0 / lu_[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) lu_[k * n + i] *= inv;
    for (std::size_t j = k + 1; j < n; ++j) {
      const cplx ukj = lu_[j * n + k];
      if (ukj == cplx{0.0}) continue;
      cplx* colj = lu_.data() + j * n;
      const cplx* colk = lu_.data() + k * n;
      for (std::size_t i = k + 1; i < n; ++i) colj[i] -= colk[i] * ukj;
    }
  }
}

void LuFactorization::solve_in_place(std::span<cplx> b) const {
  if (b.size() != n_) throw DimensionError("lu: right-hand side has wrong length");
  const std::size_t n = n_;
  for (std::size_t k = 0; k < n; ++k)
    if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx bk = b[k];
    if (bk == cplx{0.0}) continue;
    for (std::size_t i = k + 1; i < n; ++i) b[i] -= lu_[k * n + i] * bk;
  }
  for (std::size_t k = n; k-- > 0;) {
    b[k] /= lu_[k * n + k];
    const cplx bk = b[k];
    for (std::size_t i = 0; i < k; ++i) b[i] -= lu_[k * n + i] * bk;
  }
}

std::vector<cplx> LuFactorization::solve(std::span<const cplx> b) const {
  std::vector<cplx> x(b.begin(), b.end());
  solve_in_place(x);
  return x;
}

// ---- GMRES -------------------------------------------------------------------------

namespace {
double norm2(std::span<const cplx> x) {
  double s = 0.0;
  for (const cplx& v : x) s += std::norm(v);
  return std::sqrt(s);
}
cplx dot(std::span<const cplx> x, std::span<const cplx> y) {
  cplx s{0.0};
  for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}
}  // namespace

std::vector<cplx> gmres(const DataMatrix& a, std::span<const cplx> b, const GmresOptions& opts,
                        std::span<const cplx> x0) {
  const std::size_t n = a.rows();
  if (!a.is_square() || b.size() != n) throw DimensionError("gmres: operand sizes do not match");
  std::vector<cplx> dinv(n, 1.0);
  if (opts.jacobi_precondition)
    for (std::size_t i = 0; i < n; ++i) {
      const cplx di = a.at(i, i);
      dinv[i] = std::abs(di) > 0 ? 1.0 / di : cplx{1.0};
    }
  // Right preconditioning: solve (A M) u = b, x = M u.
  std::vector<cplx> x = x0.empty() ? std::vector<cplx>(n) : std::vector<cplx>(x0.begin(), x0.end());
  const double bnorm = norm2(b);
  if (bnorm == 0.0) return std::vector<cplx>(n);
  const std::size_t mres = std::max<std::size_t>(1, std::min(opts.restart, n));
  std::vector<std::vector<cplx>> V(mres + 1, std::vector<cplx>(n));
  std::vector<cplx> H((mres + 1) * mres), cs(mres), sn(mres), g(mres + 1), w(n), mv(n);
  std::size_t total = 0;
  while (total < opts.max_iter) {
    // r = b - A x
    std::vector<cplx> r = matvec(a, x);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    double beta = norm2(r);
    if (beta / bnorm <= opts.tol) return x;
    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), cplx{0.0});
    g[0] = beta;
    std::size_t j = 0;
    for (; j < mres && total < opts.max_iter; ++j, ++total) {
      for (std::size_t i = 0; i < n; ++i) mv[i] = dinv[i] * V[j][i];
      matvec(a, mv, w);
      for (std::size_t i = 0; i <= j; ++i) {  // modified Gram-Schmidt
        const cplx hij = dot(V[i], w);
        H[j * (mres + 1) + i] = hij;
        for (std::size_t k = 0; k < n; ++k) w[k] -= hij * V[i][k];
      }
      const double hn = norm2(w);
      H[j * (mres + 1) + j + 1] = hn;
      if (hn > 0)
        for (std::size_t k = 0; k < n; ++k) V[j + 1][k] = w[k] / hn;
      for (std::size_t i = 0; i < j; ++i) {
        const cplx h1 = H[j * (mres + 1) + i], h2 = H[j * (mres + 1) + i + 1];
        H[j * (mres + 1) + i] = std::conj(cs[i]) * h1 + std::conj(sn[i]) * h2;
        H[j * (mres + 1) + i + 1] = -sn[i] * h1 + cs[i] * h2;
      }
      const cplx h1 = H[j * (mres + 1) + j], h2 = H[j * (mres + 1) + j + 1];
      const double den = std::sqrt(std::norm(h1) + std::norm(h2));
      cs[j] = den > 0 ? h1 / den : cplx{1.0};
      sn[j] = den > 0 ? h2 / den : cplx{0.0};
      H[j * (mres + 1) + j] = den;
      H[j * (mres + 1) + j + 1] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = std::conj(cs[j]) * g[j];
      if (std::abs(g[j + 1]) / bnorm <= opts.tol || hn == 0.0) {
        ++j;
        ++total;
        break;
      }
    }
    // back-substitute y, then x += M V y
    std::vector<cplx> y(j);
    for (std::size_t i = j; i-- > 0;) {
      cplx s = g[i];
      for (std::size_t k = i + 1; k < j; ++k) s -= H[k * (mres + 1) + i] * y[k];
      y[i] = s / H[i * (mres + 1) + i];
    }
    for (std::size_t i = 0; i < j; ++i)
      for (std::size_t k = 0; k < n; ++k) x[k] += dinv[k] * V[i][k] * y[i];
  }
  std::vector<cplx> r = matvec(a, x);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  if (norm2(r) / bnorm <= opts.tol) return x;
  throw ConvergenceError("gmres: no convergence after " + std::to_string(opts.max_iter) +
                         " iterations (relative residual " + std::to_string(norm2(r) / bnorm) + ")");
}

DataMatrix solve_linear(const DataMatrix& a, const DataMatrix& b, LinearMethod method,
                        const GmresOptions& opts) {
  if (!a.is_square()) throw DimensionError("solve_linear: matrix is not square");
  if (b.rows() != a.rows()) throw DimensionError("solve_linear: right-hand side row count mismatch");
  const std::size_t n = a.rows(), k = b.cols();
  auto rhs = b.to_vector();
  if (method == LinearMethod::direct_lu) {
    LuFactorization lu(a);
    for (std::size_t j = 0; j < k; ++j) lu.solve_in_place(std::span<cplx>(rhs.data() + j * n, n));
    return DataMatrix::from_dense(n, k, std::move(rhs));
  }
  std::vector<cplx> out(n * k);
  for (std::size_t j = 0; j < k; ++j) {
    auto x = gmres(a, std::span<const cplx>(rhs.data() + j * n, n), opts);
    std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(j * n));
  }
  return DataMatrix::from_dense(n, k, std::move(out));
}

}  // namespace openq::data
