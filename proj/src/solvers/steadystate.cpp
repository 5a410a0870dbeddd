#include "openq/solvers/steadystate.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "openq/errors.hpp"

namespace openq {

std::string_view steady_method_name(SteadyMethod m) {
  switch (m) {
    case SteadyMethod::direct: return "direct";
    case SteadyMethod::power: return "power";
    case SteadyMethod::svd: return "svd";
  }
  return "?";
}

SteadyMethod parse_steady_method(std::string_view s) {
  if (s == "direct") return SteadyMethod::direct;
  if (s == "power") return SteadyMethod::power;
  if (s == "svd") return SteadyMethod::svd;
  throw PreconditionError("steadystate: unknown method '" + std::string(s) + "'");
}

namespace {

double norm2(std::span<const cplx> v) {
  double s = 0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}

std::vector<cplx> solve_direct(const DataMatrix& l, std::size_t n, const SteadyStateOptions& o) {
  const std::size_t nn = n * n;
  // Population rows of L sum to zero (trace preservation), so any one of them
  // is redundant; swap the best-conditioned one for the trace condition.
  std::size_t row = 0;
  double best = -1;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = k * n + k;
    const double d = std::abs(l.at(i, i));
    if (d > best) {
      best = d;
      row = i;
    }
  }
  const auto csr = data::convert(l, Format::CSR);
  const auto& c = csr.csr();
  std::vector<data::Triplet> t;
  t.reserve(c.values.size() + n);
  for (std::size_t i = 0; i < nn; ++i) {
    if (i == row) continue;
    for (std::size_t p = c.row_ptr[i]; p < c.row_ptr[i + 1]; ++p) t.push_back({i, c.col_idx[p], c.values[p]});
  }
  for (std::size_t k = 0; k < n; ++k) t.push_back({row, k * n + k, 1.0});
  const auto a = DataMatrix::from_triplets(nn, nn, std::move(t), Format::CSR);
  std::vector<cplx> b(nn);
  b[row] = 1.0;
  return data::solve_linear(a, DataMatrix::column(b), o.solver, o.gmres).to_vector();
}

std::vector<cplx> solve_power(const DataMatrix& l, std::size_t n, double lnorm, const SteadyStateOptions& o,
                              std::size_t& iters) {
  const std::size_t nn = n * n;
  const auto shifted = data::add(l, DataMatrix::identity(nn, Format::CSR), -o.power_shift);
  std::optional<data::LuFactorization> lu;
  if (o.solver == data::LinearMethod::direct_lu) lu.emplace(shifted);
  std::vector<cplx> x(nn);
  for (std::size_t k = 0; k < n; ++k) x[k * n + k] = 1.0 / std::sqrt(double(n));
  for (iters = 1; iters <= o.power_maxiter; ++iters) {
    if (lu)
      lu->solve_in_place(x);
    else
      x = data::gmres(shifted, x, o.gmres, x);
    const double nx = norm2(x);
    if (!(nx > 0) || !std::isfinite(nx)) throw NumericalError("steadystate(power): iterate vanished");
    for (auto& v : x) v /= nx;
    if (norm2(data::matvec(l, x)) < o.power_tol * std::max(1.0, lnorm)) return x;
  }
  throw ConvergenceError("steadystate(power): no convergence in " + std::to_string(o.power_maxiter) + " sweeps");
}

std::vector<cplx> solve_svd(const DataMatrix& l, bool& degenerate) {
  const auto nn = static_cast<Eigen::Index>(l.rows());
  const auto v = l.to_vector();
  Eigen::MatrixXcd m = Eigen::Map<const Eigen::MatrixXcd>(v.data(), nn, nn);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  degenerate = nn > 1 && s(nn - 2) < 1e-10 * s(0);
  const Eigen::VectorXcd x = svd.matrixV().col(nn - 1);
  return {x.data(), x.data() + nn};
}

}  // namespace

SteadyStateResult steadystate_full(const Qobj& h, const std::vector<Qobj>& c_ops, const SteadyStateOptions& opts) {
  const Qobj l = liouvillian(h, c_ops);
  const std::size_t n = l.dims().rows.size();
  const double lnorm = data::norm_frobenius(l.data());
  SteadyStateResult res;
  std::vector<cplx> x;
  switch (opts.method) {
    case SteadyMethod::direct:
      x = solve_direct(l.data(), n, opts);
      res.iterations = 1;
      break;
    case SteadyMethod::power:
      x = solve_power(l.data(), n, lnorm, opts, res.iterations);
      break;
    case SteadyMethod::svd:
      x = solve_svd(l.data(), res.degenerate);
      res.iterations = 1;
      break;
  }
  cplx tr = 0.0;
  for (std::size_t k = 0; k < n; ++k) tr += x[k * n + k];
  if (std::abs(tr) < 1e-300) throw NumericalError("steadystate: null vector has zero trace");
  const Dimensions od = Dimensions::oper(l.dims().rows);
  Qobj rho(DataMatrix::from_dense(n, n, std::move(x)), od);
  rho = rho / tr;
  rho = 0.5 * (rho + rho.dag());
  const auto r = data::matvec(l.data(), rho.full());
  res.residual = norm2(r) / std::max(lnorm, 1e-300);
  if (res.residual > opts.residual_tol)
    throw ConvergenceError("steadystate(" + std::string(steady_method_name(opts.method)) +
                           "): residual " + std::to_string(res.residual) + " above tolerance");
  res.rho = std::move(rho);
  return res;
}

}  // namespace openq
