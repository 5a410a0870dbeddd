#include <chrono>
#include <cmath>
#include <memory>

#include "ensemble.hpp"
#include "openq/data/linalg.hpp"
#include "openq/errors.hpp"
#include "openq/factories.hpp"
#include "openq/stochastic/mcsolve.hpp"

namespace openq {

double NmPrepared::shift(double t, const Args& args) const {
  double m = 0.0;
  for (const auto& g : rates) m = std::min(m, g(t, args).real());
  return 2.0 * std::abs(m);
}

double NmPrepared::shifted_rate(std::size_t n, double t, const Args& args) const {
  return rates.at(n)(t, args).real() + shift(t, args);
}

NmPrepared nm_prepare(const std::vector<NmOperator>& ops_and_rates) {
  if (ops_and_rates.empty()) throw PreconditionError("nm_prepare: no operators");
  const auto& first = ops_and_rates.front().a;
  if (!first.isoper() || first.rows() != first.cols()) throw DimensionError("nm_prepare: operators must be square");
  const std::size_t n = first.rows();
  NmPrepared out;
  Qobj sum = qzero(n);
  sum = Qobj(sum.data(), first.dims());
  for (const auto& [a, rate] : ops_and_rates) {
    if (!a.isoper() || a.rows() != a.cols()) throw DimensionError("nm_prepare: operators must be square");
    if (a.dims() != first.dims()) throw DimensionError("nm_prepare: operators have different dims");
    sum = sum + a.dag() * a;
    out.ops.push_back(a);
    out.rates.push_back(rate);
  }
  const auto eig = data::eig_herm(sum.data(), 1e-10);
  out.alpha = eig.values.back();
  if (!(out.alpha > 0)) throw PreconditionError("nm_prepare: sum of A^dag A has no positive eigenvalue");
  const auto id = Qobj(qeye(n).data(), first.dims());
  const Qobj gap = out.alpha * id - sum;
  if (data::max_abs_diff(gap.data(), qzero(n).data()) > 1e-10) {
    const auto ge = data::eig_herm(gap.data(), 1e-10);
    const auto v = ge.vectors.to_vector();
    std::vector<cplx> b(n * n);
    for (std::size_t k = 0; k < n; ++k) {
      if (ge.values[k] < -1e-10) throw NumericalError("nm_prepare: padding operator is not positive semidefinite");
      const double s = std::sqrt(std::max(ge.values[k], 0.0));
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) b[j * n + i] += s * v[k * n + i] * std::conj(v[k * n + j]);
    }
    Qobj pad(data::tidyup(DataMatrix::from_dense(n, n, std::move(b)), 1e-14), first.dims());
    out.ops.push_back(pad.to(Format::CSR));
    out.rates.push_back(Coefficient::constant(0.0));
    out.padded = true;
  }
  return out;
}

MultiTrajResult nm_mcsolve(const QobjEvo& h, const Qobj& psi0, std::span<const double> tlist,
                           const std::vector<NmOperator>& ops_and_rates, const std::vector<Qobj>& e_ops,
                           const NmOptions& opts, const Args& args) {
  const auto clock0 = std::chrono::steady_clock::now();
  const auto prep = std::make_shared<const NmPrepared>(nm_prepare(ops_and_rates));
  std::vector<QobjEvo> c_ops;
  for (std::size_t k = 0; k < prep->ops.size(); ++k) {
    auto root = Coefficient::function([prep, k](double t, const Args& a) {
      return cplx(std::sqrt(std::max(prep->shifted_rate(k, t, a), 0.0)));
    });
    c_ops.emplace_back(prep->ops[k], root);
  }
  const detail::McProblem p(h, c_ops, tlist, e_ops, opts.mc, args);
  MixedState init;
  if (psi0.isket())
    init.components.emplace_back(1.0, psi0);
  else if (psi0.isoper())
    init = MixedState::from_dm(psi0);
  else
    throw DimensionError("nm_mcsolve: initial state must be a ket or a density operator");
  auto ens = detail::run_ensemble(p, init);

  // exp(alpha int_0^t s) by the trapezoid rule, shared by every trajectory
  const std::size_t nt = p.tlist.size();
  const std::size_t m = std::max<std::size_t>(1, opts.shift_substeps);
  std::vector<double> cont(nt, 1.0);
  double integral = 0.0;
  for (std::size_t k = 1; k < nt; ++k) {
    const double a = p.tlist[k - 1], b = p.tlist[k], dt = (b - a) / double(m);
    double prev = prep->shift(a, args);
    for (std::size_t j = 1; j <= m; ++j) {
      const double t = j == m ? b : a + double(j) * dt;
      const double cur = prep->shift(t, args);
      integral += 0.5 * dt * (prev + cur);
      prev = cur;
    }
    cont[k] = std::exp(prep->alpha * integral);
  }

  std::vector<std::vector<double>> factor(ens.used, std::vector<double>(nt));
  for (std::size_t i = 0; i < ens.used; ++i) {
    const auto& rec = ens.runs[i].rec;
    std::size_t j = 0;
    double jumps = 1.0;
    for (std::size_t k = 0; k < nt; ++k) {
      for (; j < rec.jump_times.size() && rec.jump_times[j] <= p.tlist[k]; ++j) {
        const std::size_t ch = rec.jump_channels[j];
        const double tj = rec.jump_times[j];
        const double big = prep->shifted_rate(ch, tj, args);
        // a channel with Gamma ~ 0 is selected with probability ~ 0
        if (big >= 1e-14) jumps *= prep->rates[ch](tj, args).real() / big;
      }
      factor[i][k] = cont[k] * jumps;
    }
  }
  auto res = detail::finalize(p, ens, &factor);
  res.run_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
  return res;
}

}  // namespace openq
