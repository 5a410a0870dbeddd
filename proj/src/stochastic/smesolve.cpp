#include "openq/stochastic/smesolve.hpp"

#include <chrono>
#include <cmath>
#include <exception>

#include "openq/data/data_matrix.hpp"
#include "openq/errors.hpp"
#include "openq/stochastic/rng.hpp"

namespace openq {

WienerPath wiener_path(std::uint64_t seed, double t0, double dt, std::size_t nsteps, std::size_t nchannels) {
  if (!(dt > 0)) throw PreconditionError("wiener_path: dt must be positive");
  WienerPath w;
  w.times.resize(nsteps + 1);
  for (std::size_t i = 0; i <= nsteps; ++i) w.times[i] = t0 + double(i) * dt;
  w.dw.assign(nchannels, std::vector<double>(nsteps));
  Philox rng(seed);
  const double sq = std::sqrt(dt);
  for (std::size_t i = 0; i < nsteps; ++i)
    for (std::size_t c = 0; c < nchannels; ++c) w.dw[c][i] = sq * rng.normal();
  return w;
}

namespace {

struct SmeProblem {
  QobjEvo l;
  std::vector<DataMatrix> meas;  // spre(s) + spost(s^dag)
  ExpectTable table;
  std::vector<double> tlist;
  std::size_t n = 0, m = 0, n_eops = 0;
  Args args;
  SmeOptions opts;
  Dimensions oper_dims;
};

struct SmeTraj {
  std::vector<std::vector<cplx>> expect;
  std::vector<std::vector<double>> record;
  std::vector<std::vector<cplx>> states;  // vec rho per output
};

cplx vtrace(std::span<const cplx> v, std::size_t n) {
  cplx s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += v[k * n + k];
  return s;
}

void normalize_hermitize(std::vector<cplx>& v, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    v[j * n + j] = v[j * n + j].real();
    for (std::size_t i = j + 1; i < n; ++i) {
      const cplx a = 0.5 * (v[j * n + i] + std::conj(v[i * n + j]));
      v[j * n + i] = a;
      v[i * n + j] = std::conj(a);
    }
  }
  const double tr = vtrace(v, n).real();
  if (!(std::abs(tr) > 1e-300) || !std::isfinite(tr)) throw NumericalError("smesolve: trace vanished");
  for (auto& x : v) x /= tr;
}

SmeTraj run_sme(const SmeProblem& p, std::span<const cplx> rho0, std::uint64_t seed) {
  const std::size_t nn = p.n * p.n, nt = p.tlist.size(), ns = p.meas.size();
  Philox rng(seed);
  SmeTraj out;
  out.expect.assign(p.n_eops, std::vector<cplx>(nt));
  out.record.assign(ns, std::vector<double>(nt - 1, 0.0));
  std::vector<cplx> rho(rho0.begin(), rho0.end());
  std::vector<cplx> k1(nn), k2(nn), k3(nn), k4(nn), tmp(nn), noise(nn), srho(nn);
  auto store = [&](std::size_t k) {
    for (std::size_t e = 0; e < p.n_eops; ++e) out.expect[e][k] = p.table(e, rho);
    if (p.opts.store_states) out.states.push_back(rho);
  };
  store(0);
  std::vector<double> dw(ns);
  for (std::size_t k = 0; k + 1 < nt; ++k) {
    const double t0 = p.tlist[k], span = p.tlist[k + 1] - t0, dt = span / double(p.m), sq = std::sqrt(dt);
    std::vector<double> wsum(ns, 0.0), xsum(ns, 0.0);
    for (std::size_t j = 0; j < p.m; ++j) {
      const double t = t0 + double(j) * dt;
      for (std::size_t c = 0; c < ns; ++c) dw[c] = sq * rng.normal();
      // Ito noise evaluated at the start of the substep
      std::fill(noise.begin(), noise.end(), cplx(0.0));
      for (std::size_t c = 0; c < ns; ++c) {
        data::matvec(p.meas[c], rho, srho);
        const double x = vtrace(srho, p.n).real();
        xsum[c] += x;
        wsum[c] += dw[c];
        for (std::size_t i = 0; i < nn; ++i) noise[i] += (srho[i] - x * rho[i]) * dw[c];
      }
      p.l.matvec(t, rho, k1, p.args);
      for (std::size_t i = 0; i < nn; ++i) tmp[i] = rho[i] + 0.5 * dt * k1[i];
      p.l.matvec(t + 0.5 * dt, tmp, k2, p.args);
      for (std::size_t i = 0; i < nn; ++i) tmp[i] = rho[i] + 0.5 * dt * k2[i];
      p.l.matvec(t + 0.5 * dt, tmp, k3, p.args);
      for (std::size_t i = 0; i < nn; ++i) tmp[i] = rho[i] + dt * k3[i];
      p.l.matvec(t + dt, tmp, k4, p.args);
      for (std::size_t i = 0; i < nn; ++i)
        rho[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) + noise[i];
      normalize_hermitize(rho, p.n);
    }
    for (std::size_t c = 0; c < ns; ++c) out.record[c][k] = xsum[c] / double(p.m) + wsum[c] / span;
    store(k + 1);
  }
  return out;
}

}  // namespace

SmeResult smesolve(const QobjEvo& h, const Qobj& rho0, std::span<const double> tlist,
                   const std::vector<QobjEvo>& c_ops, const std::vector<Qobj>& sc_ops, const std::vector<Qobj>& e_ops,
                   const SmeOptions& opts, const Args& args) {
  const auto clock0 = std::chrono::steady_clock::now();
  if (opts.ntraj < 1) throw PreconditionError("smesolve: ntraj must be at least 1");
  if (tlist.size() < 2) throw PreconditionError("smesolve: tlist needs at least two points");
  const double spacing = (tlist.back() - tlist.front()) / double(tlist.size() - 1);
  if (!(spacing > 0)) throw PreconditionError("smesolve: tlist must be ascending");
  for (std::size_t k = 1; k < tlist.size(); ++k)
    if (std::abs((tlist[k] - tlist[k - 1]) - spacing) > 1e-9 * spacing)
      throw PreconditionError("smesolve: tlist must be uniformly spaced");
  const double dt_sub = opts.dt_sub > 0 ? opts.dt_sub : spacing / 100.0;
  const double ratio = spacing / dt_sub;
  const double mr = std::round(ratio);
  if (mr < 1 || std::abs(ratio - mr) > 1e-8 * mr) throw PreconditionError("smesolve: dt_sub must divide the tlist spacing");

  const Qobj rho = rho0.isket() ? ket2dm(rho0) : rho0;
  if (h.issuper()) throw DimensionError("smesolve: H must be an operator");
  if (!rho.isoper() || rho.rows() != h.size()) throw DimensionError("smesolve: initial state dims differ from H");

  SmeProblem p;
  p.n = h.size();
  p.m = std::size_t(mr);
  p.tlist.assign(tlist.begin(), tlist.end());
  p.args = args;
  p.opts = opts;
  p.oper_dims = rho.dims();
  std::vector<QobjEvo> all = c_ops;
  for (const auto& s : sc_ops) {
    if (!s.isoper() || s.rows() != p.n) throw DimensionError("smesolve: sc_op dims differ from H");
    all.emplace_back(s);
    p.meas.push_back(data::add(spre(s).data(), spost(s.dag()).data()));
  }
  p.l = qevo_liouvillian(h, all);
  p.table = ExpectTable(e_ops, p.n, true);
  p.n_eops = e_ops.size();

  const auto r0 = rho.full();
  const std::size_t ntraj = opts.ntraj;
  std::vector<SmeTraj> runs(ntraj);
  std::vector<std::exception_ptr> errs(ntraj);
  auto body = [&](std::size_t i) {
    try {
      runs[i] = run_sme(p, r0, trajectory_seed(opts.seed, i));
    } catch (...) {
      errs[i] = std::current_exception();
    }
  };
  if (opts.map == MapKind::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < ntraj; ++i) body(i);
  } else {
    for (std::size_t i = 0; i < ntraj; ++i) body(i);
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);

  SmeResult res;
  const std::size_t nt = tlist.size();
  res.times = p.tlist;
  res.ntraj_used = ntraj;
  res.substeps = p.m;
  res.average_expect.assign(p.n_eops, std::vector<cplx>(nt));
  res.std_expect.assign(p.n_eops, std::vector<double>(nt, 0.0));
  const double w = 1.0 / double(ntraj);
  for (std::size_t i = 0; i < ntraj; ++i) {
    res.seeds.push_back(trajectory_seed(opts.seed, i));
    res.weights.push_back(w);
    for (std::size_t e = 0; e < p.n_eops; ++e)
      for (std::size_t k = 0; k < nt; ++k) res.average_expect[e][k] += w * runs[i].expect[e][k];
  }
  if (ntraj > 1)
    for (std::size_t e = 0; e < p.n_eops; ++e)
      for (std::size_t k = 0; k < nt; ++k) {
        double s2 = 0;
        for (const auto& r : runs) s2 += std::norm(r.expect[e][k] - res.average_expect[e][k]);
        res.std_expect[e][k] = std::sqrt(s2 / double(ntraj - 1));
      }
  for (auto& r : runs) {
    if (opts.keep_runs_results) res.runs_expect.push_back(r.expect);
    if (opts.store_measurement) res.measurement.push_back(std::move(r.record));
  }
  if (opts.store_states) {
    for (std::size_t k = 0; k < nt; ++k) {
      std::vector<cplx> acc(p.n * p.n);
      for (const auto& r : runs)
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * r.states[k][i];
      res.average_states.emplace_back(DataMatrix::from_dense(p.n, p.n, std::move(acc)), p.oper_dims);
    }
  }
  res.run_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
  return res;
}

}  // namespace openq
