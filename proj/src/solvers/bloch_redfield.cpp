#include "openq/solvers/bloch_redfield.hpp"

#include <cmath>

#include "openq/data/linalg.hpp"
#include "openq/errors.hpp"

namespace openq {

std::function<double(double)> flat_spectrum(double gamma) {
  return [gamma](double w) { return w > 0 ? gamma : (w == 0 ? 0.5 * gamma : 0.0); };
}

namespace {

Qobj basis_oper(const BRTensor& br, const Dimensions& d) { return Qobj(br.basis, d); }

}  // namespace

Qobj to_eigenbasis(const BRTensor& br, const Qobj& op) {
  const Qobj v = basis_oper(br, Dimensions::oper(op.dims().rows));
  return Qobj((v.dag() * op * v).data(), op.dims());
}

Qobj from_eigenbasis(const BRTensor& br, const Qobj& op) {
  const Qobj v = basis_oper(br, Dimensions::oper(op.dims().rows));
  return Qobj((v * op * v.dag()).data(), op.dims());
}

BRTensor br_tensor(const Qobj& h, const std::vector<BRCoupling>& couplings, double sec_cutoff) {
  if (!h.isoper() || !h.isherm()) throw PreconditionError("br_tensor: H must be a Hermitian operator");
  const auto eig = data::eig_herm(h.data());
  const std::size_t n = h.rows();
  BRTensor out;
  out.energies = eig.values;
  out.basis = eig.vectors;
  const auto& e = eig.values;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(e[i] - e[j]) < 1e-10 * std::max(1.0, std::abs(e[i]))) ++out.degenerate_pairs;

  auto w = [&](std::size_t x, std::size_t y) { return e[x] - e[y]; };
  auto keep = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return sec_cutoff < 0 || std::abs(w(a, b) - w(c, d)) <= sec_cutoff;
  };

  const std::size_t nn = n * n;
  std::vector<cplx> r(nn * nn);  // column-major: r[J * nn + I]
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t i = b * n + a;
      r[i * nn + i] += cplx(0, -w(a, b));
    }

  const Qobj v(eig.vectors, h.dims());
  for (const auto& cp : couplings) {
    if (!cp.a.isoper() || cp.a.dims() != h.dims()) throw DimensionError("br_tensor: coupling operator dims differ from H");
    if (!cp.a.isherm()) throw PreconditionError("br_tensor: coupling operator must be Hermitian");
    if (!cp.spectrum) throw PreconditionError("br_tensor: missing power spectrum");
    const auto av = (v.dag() * cp.a * v).data().to_vector();  // column-major
    auto A = [&](std::size_t x, std::size_t y) { return av[y * n + x]; };
    std::vector<double> s(nn);  // s[x * n + y] = S(w_xy)
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y) s[x * n + y] = cp.spectrum(w(x, y));
    auto S = [&](std::size_t x, std::size_t y) { return s[x * n + y]; };
    // sum_m A_xm A_my S(w_ym), used on the diagonal blocks
    std::vector<cplx> gsum(nn);
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y) {
        cplx acc = 0.0;
        for (std::size_t m = 0; m < n; ++m) acc += A(x, m) * A(m, y) * S(y, m);
        gsum[x * n + y] = acc;
      }

    for (std::size_t d = 0; d < n; ++d)
      for (std::size_t c = 0; c < n; ++c) {
        const std::size_t J = d * n + c;
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t a = 0; a < n; ++a) {
            if (!keep(a, b, c, d)) continue;
            const std::size_t I = b * n + a;
            cplx elem = 0.5 * A(a, c) * A(d, b) * (S(c, a) + S(d, b));
            if (b == d) elem -= 0.5 * gsum[a * n + c];
            if (a == c) elem -= 0.5 * std::conj(gsum[b * n + d]);
            r[J * nn + I] += elem;
          }
      }
  }
  out.r = Qobj(data::tidyup(DataMatrix::from_dense(nn, nn, std::move(r)), 1e-15), Dimensions::super(h.dims().rows));
  out.r = out.r.to(Format::CSR);
  return out;
}

SolveResult brmesolve(const Qobj& h, const std::vector<BRCoupling>& couplings, const Qobj& rho0,
                      std::span<const double> tlist, const std::vector<Qobj>& e_ops, double sec_cutoff,
                      const SolverOptions& opts) {
  const BRTensor br = br_tensor(h, couplings, sec_cutoff);
  const Qobj rho = rho0.isket() ? ket2dm(rho0) : rho0;
  if (rho.dims() != h.dims()) throw DimensionError("brmesolve: initial state dims differ from H");
  std::vector<Qobj> eb_ops;
  for (const auto& op : e_ops) eb_ops.push_back(to_eigenbasis(br, op));
  auto res = Solver(QobjEvo(br.r), {}, opts).run(to_eigenbasis(br, rho), tlist, eb_ops);
  // the eigenbasis rotation breaks the cached Hermiticity check; restore real parts
  for (std::size_t k = 0; k < e_ops.size(); ++k)
    if (e_ops[k].isherm())
      for (auto& x : res.expect[k]) x = cplx(x.real(), 0.0);
  for (auto& st : res.states) st = from_eigenbasis(br, st);
  if (res.final_state) res.final_state = from_eigenbasis(br, *res.final_state);
  res.stats.solver = "brmesolve";
  if (br.degenerate_pairs)
    res.stats.warnings.push_back("brmesolve: H has " + std::to_string(br.degenerate_pairs) +
                                 " degenerate eigenvalue pair(s); eigenbasis within those blocks is arbitrary");
  return res;
}

SolveResult brmesolve(const QobjEvo& h, const std::vector<BRCoupling>& couplings, const Qobj& rho0,
                      std::span<const double> tlist, const std::vector<Qobj>& e_ops, double sec_cutoff,
                      const SolverOptions& opts) {
  if (!h.is_constant()) throw UnsupportedError("brmesolve: time-dependent Hamiltonians are not supported");
  return brmesolve(h.constant_part(), couplings, rho0, tlist, e_ops, sec_cutoff, opts);
}

}  // namespace openq
