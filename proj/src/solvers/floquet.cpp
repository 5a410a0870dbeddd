#include "openq/solvers/floquet.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "openq/errors.hpp"

namespace openq {

IntegratorOptions floquet_default_integrator() {
  IntegratorOptions o;
  o.atol = 1e-11;
  o.rtol = 1e-10;
  o.nsteps = 100000;
  return o;
}

FloquetBasis floquet_basis(const QobjEvo& h, double period, std::size_t nt, const Args& args,
                           const IntegratorOptions& opts) {
  if (h.issuper()) throw DimensionError("floquet_basis: H must be an operator");
  if (!(period > 0)) throw PreconditionError("floquet_basis: period must be positive");
  if (nt < 2) throw PreconditionError("floquet_basis: need at least two grid points per period");
  const std::size_t n = h.size();
  const QobjEvo gen = cplx(0, -1) * h;
  OdeRhs rhs = [&gen, &args](double t, std::span<const cplx> y, std::span<cplx> dy) { gen.matvec(t, y, dy, args); };

  std::vector<double> grid(nt + 1);
  for (std::size_t j = 0; j <= nt; ++j) grid[j] = period * double(j) / double(nt);
  grid[nt] = period;

  // u[j] = U(t_j, 0), column-major
  std::vector<std::vector<cplx>> u(nt + 1, std::vector<cplx>(n * n));
  for (std::size_t col = 0; col < n; ++col) {
    std::vector<cplx> e(n);
    e[col] = 1.0;
    const auto ys = integrate(rhs, e, 0.0, grid, opts);
    for (std::size_t j = 0; j <= nt; ++j) std::copy(ys[j].begin(), ys[j].end(), u[j].begin() + col * n);
  }

  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXcd ut = Eigen::Map<const Eigen::MatrixXcd>(u[nt].data(), N, N);
  // U(T) is normal, so its Schur form is diagonal and Z holds orthonormal eigenvectors.
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(ut);
  if (schur.info() != Eigen::Success) throw NumericalError("floquet_basis: Schur decomposition failed");
  const Eigen::MatrixXcd& z = schur.matrixU();
  const Eigen::MatrixXcd& tri = schur.matrixT();

  std::vector<double> eps(n);
  const double zone = M_PI / period;
  for (std::size_t a = 0; a < n; ++a) {
    double e = -std::arg(tri(Eigen::Index(a), Eigen::Index(a))) / period;
    if (e <= -zone) e += 2 * zone;
    if (e > zone) e -= 2 * zone;
    eps[a] = e;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return eps[x] < eps[y]; });

  FloquetBasis fb;
  fb.period_ = period;
  fb.nt_ = nt;
  fb.ket_dims_ = Dimensions::ket(h.dims().rows);
  fb.u_ = Qobj(DataMatrix::from_dense(n, n, u[nt]), h.dims());
  for (std::size_t a : order) fb.eps_.push_back(eps[a]);
  fb.table_.assign(nt + 1, std::vector<std::vector<cplx>>(n, std::vector<cplx>(n)));
  for (std::size_t j = 0; j <= nt; ++j) {
    Eigen::Map<const Eigen::MatrixXcd> uj(u[j].data(), N, N);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t a = order[k];
      const Eigen::VectorXcd phi = uj * z.col(Eigen::Index(a)) * std::exp(cplx(0, eps[a] * grid[j]));
      std::copy(phi.data(), phi.data() + n, fb.table_[j][k].begin());
    }
  }
  return fb;
}

Qobj FloquetBasis::mode(std::size_t alpha, double t) const {
  if (alpha >= dim()) throw RangeError("floquet: mode index out of range");
  double tau = std::fmod(t, period_);
  if (tau < 0) tau += period_;
  const double s = tau / period_ * double(nt_);
  std::size_t j = std::min(static_cast<std::size_t>(s), nt_ - 1);
  const double f = s - double(j);
  const auto& a = table_[j][alpha];
  const auto& b = table_[j + 1][alpha];
  std::vector<cplx> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - f) * a[i] + f * b[i];
  const std::size_t n = v.size();
  return Qobj(DataMatrix::from_dense(n, 1, std::move(v)), ket_dims_);
}

std::vector<Qobj> FloquetBasis::modes(double t) const {
  std::vector<Qobj> out;
  for (std::size_t a = 0; a < dim(); ++a) out.push_back(mode(a, t));
  return out;
}

Qobj FloquetBasis::state(std::size_t alpha, double t) const {
  return std::exp(cplx(0, -eps_[alpha] * t)) * mode(alpha, t);
}

SolveResult fsesolve(const FloquetBasis& fb, const Qobj& psi0, std::span<const double> tlist,
                     const std::vector<Qobj>& e_ops, const SolverOptions& opts) {
  const auto clock0 = std::chrono::steady_clock::now();
  if (!psi0.isket() || psi0.rows() != fb.dim()) throw DimensionError("fsesolve: initial ket does not match the basis");
  const std::size_t n = fb.dim();
  const auto psi = psi0.full();
  std::vector<cplx> c(n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto& phi = fb.grid_mode(0, a);
    for (std::size_t i = 0; i < n; ++i) c[a] += std::conj(phi[i]) * psi[i];
  }
  const ExpectTable table(e_ops, n, false);
  const bool store = opts.store_states.value_or(e_ops.empty()) || e_ops.empty();
  SolveResult res;
  res.stats.solver = "fsesolve";
  res.times.assign(tlist.begin(), tlist.end());
  res.expect.assign(e_ops.size(), std::vector<cplx>(tlist.size()));
  for (std::size_t k = 0; k < tlist.size(); ++k) {
    const double t = tlist[k];
    std::vector<cplx> y(n);
    for (std::size_t a = 0; a < n; ++a) {
      const cplx w = c[a] * std::exp(cplx(0, -fb.quasienergies()[a] * t));
      const auto m = fb.mode(a, t).full();
      for (std::size_t i = 0; i < n; ++i) y[i] += w * m[i];
    }
    for (std::size_t e = 0; e < table.size(); ++e) res.expect[e][k] = table(e, y);
    Qobj st(DataMatrix::from_dense(n, 1, y), psi0.dims());
    if (store) res.states.push_back(st);
    if (k + 1 == tlist.size() && opts.store_final_state) res.final_state = st;
  }
  res.stats.run_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
  return res;
}

}  // namespace openq
