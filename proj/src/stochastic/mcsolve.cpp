#include "openq/stochastic/mcsolve.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>

#include "openq/data/linalg.hpp"
#include "openq/errors.hpp"
#include "openq/stochastic/rng.hpp"
#include "ensemble.hpp"

namespace openq {

MixedState MixedState::from_dm(const Qobj& rho, double cutoff) {
  if (!rho.isoper() || rho.rows() != rho.cols()) throw DimensionError("mixed state: expected a density operator");
  const auto eig = data::eig_herm(rho.data(), 1e-10);
  const std::size_t n = rho.rows();
  const auto v = eig.vectors.to_vector();
  MixedState m;
  const Dimensions kd = Dimensions::ket(rho.dims().rows);
  for (std::size_t k = n; k-- > 0;) {
    if (eig.values[k] < -1e-10) throw PreconditionError("mixed state: density operator is not positive");
    if (eig.values[k] <= cutoff) continue;
    std::vector<cplx> col(v.begin() + std::ptrdiff_t(k * n), v.begin() + std::ptrdiff_t((k + 1) * n));
    m.components.emplace_back(eig.values[k], Qobj(DataMatrix::from_dense(n, 1, std::move(col)), kd));
  }
  return m;
}

namespace detail {

McProblem::McProblem(const QobjEvo& h, const std::vector<QobjEvo>& c, std::span<const double> t,
                     const std::vector<Qobj>& e_ops, const McOptions& o, const Args& a)
    : c_ops(c), tlist(t.begin(), t.end()), opts(o), args(a) {
  if (h.issuper()) throw DimensionError("mcsolve: H must be an operator");
  if (tlist.empty()) throw PreconditionError("mcsolve: empty tlist");
  for (std::size_t i = 1; i < tlist.size(); ++i)
    if (!(tlist[i] > tlist[i - 1])) throw PreconditionError("mcsolve: tlist must be strictly ascending");
  if (o.ntraj < 1) throw PreconditionError("mcsolve: ntraj must be at least 1");
  o.integrator.validate();
  n = h.size();
  QobjEvo heff = h;
  for (const auto& cop : c_ops) {
    if (cop.issuper() || cop.size() != n) throw DimensionError("mcsolve: collapse operator dims differ from H");
    heff = heff - cplx(0, 0.5) * (cop.dag() * cop);
  }
  gen = cplx(0, -1) * heff;
  table = ExpectTable(e_ops, n, false);
  n_eops = e_ops.size();
  ket_dims = Dimensions::ket(h.dims().rows);
}

namespace {

double norm2(std::span<const cplx> v) {
  double s = 0;
  for (const auto& x : v) s += std::norm(x);
  return s;
}

}  // namespace

TrajRun run_trajectory(const McProblem& p, std::span<const cplx> psi0, std::uint64_t seed, double first_lo,
                       bool no_jump) {
  const std::size_t n = p.n;
  const auto& tl = p.tlist;
  const std::size_t nt = tl.size();
  Philox rng(seed);
  TrajRun out;
  out.rec.seed = seed;
  out.rec.expect.assign(p.n_eops, std::vector<cplx>(nt));
  out.norm2.resize(nt);

  auto record = [&](std::size_t k, std::span<const cplx> y) {
    const double nn = norm2(y);
    out.norm2[k] = nn;
    for (std::size_t e = 0; e < p.n_eops; ++e) out.rec.expect[e][k] = p.table(e, y) / nn;
    if (p.opts.store_states) {
      std::vector<cplx> v(y.begin(), y.end());
      const double s = 1.0 / std::sqrt(nn);
      for (auto& x : v) x *= s;
      out.rec.states.emplace_back(DataMatrix::from_dense(n, 1, std::move(v)), p.ket_dims);
    }
  };

  const Args& args = p.args;
  const QobjEvo& gen = p.gen;
  Dopri5 ode([&gen, &args](double t, std::span<const cplx> y, std::span<cplx> dy) { gen.matvec(t, y, dy, args); },
             n, p.opts.integrator);
  ode.set_bound(tl.back());
  ode.reset(tl.front(), psi0);
  record(0, psi0);
  std::size_t k = 1;
  auto draw = [&](double lo) { return lo + (1.0 - lo) * rng.uniform(); };
  double r = no_jump ? -1.0 : draw(first_lo);
  std::vector<cplx> buf(n), tmp(n);
  std::size_t steps_since_output = 0;

  while (k < nt) {
    if (!ode.step()) throw NumericalError("mcsolve: integrator stopped before the last output time");
    if (++steps_since_output > p.opts.integrator.nsteps)
      throw StepLimitError("mcsolve: exceeded " + std::to_string(p.opts.integrator.nsteps) +
                           " steps between output times");
    const double tn = ode.t();
    if (norm2(ode.y()) > r) {
      for (; k < nt && tl[k] <= tn; ++k) {
        ode.dense(tl[k], buf);
        record(k, buf);
        steps_since_output = 0;
      }
      continue;
    }
    // locate ||psi(t)||^2 = r on the interpolant
    double lo = ode.t_prev(), hi = tn;
    ode.dense(lo, buf);
    if (!(norm2(buf) > r)) throw NumericalError("mcsolve: jump time not bracketed by the last step");
    const double tol = p.opts.jump_tol * std::max(std::abs(hi), hi - lo);
    for (std::size_t it = 0; hi - lo > tol; ++it) {
      if (it >= p.opts.jump_max_bisect) throw NumericalError("mcsolve: jump-time bisection did not converge");
      const double mid = 0.5 * (lo + hi);
      ode.dense(mid, buf);
      (norm2(buf) > r ? lo : hi) = mid;
    }
    const double tj = hi;
    for (; k < nt && tl[k] < tj; ++k) {
      ode.dense(tl[k], buf);
      record(k, buf);
      steps_since_output = 0;
    }
    ode.dense(tj, buf);
    // channel n with probability proportional to ||C_n psi||^2
    std::vector<double> w(p.c_ops.size());
    std::vector<std::vector<cplx>> cpsi(p.c_ops.size(), std::vector<cplx>(n));
    double total = 0;
    for (std::size_t c = 0; c < p.c_ops.size(); ++c) {
      p.c_ops[c].matvec(tj, buf, cpsi[c], args);
      w[c] = norm2(cpsi[c]);
      total += w[c];
    }
    if (!(total > 0)) throw NumericalError("mcsolve: every collapse channel annihilates the state");
    const double u = rng.uniform() * total;
    std::size_t chan = 0;
    double acc = w[0];
    while (chan + 1 < w.size() && (u >= acc || w[chan] == 0.0)) acc += w[++chan];
    const double s = 1.0 / std::sqrt(w[chan]);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = cpsi[chan][i] * s;
    out.rec.jump_times.push_back(tj);
    out.rec.jump_channels.push_back(chan);
    ode.reset(tj, tmp);
    if (tj >= tl.back()) {
      for (; k < nt; ++k) record(k, tmp);
      break;
    }
    r = draw(0.0);
  }
  return out;
}

Ensemble run_ensemble(const McProblem& p, const MixedState& psi0) {
  const auto clock0 = std::chrono::steady_clock::now();
  const auto& o = p.opts;
  const std::size_t ncomp = psi0.components.size();
  if (ncomp == 0) throw PreconditionError("mcsolve: empty initial ensemble");
  double ptot = 0;
  for (const auto& [pr, ket] : psi0.components) {
    if (!ket.isket() || ket.rows() != p.n) throw DimensionError("mcsolve: initial state dims differ from H");
    if (!(pr > 0)) throw PreconditionError("mcsolve: component probabilities must be positive");
    ptot += pr;
  }
  const bool improved = o.improved_sampling;
  const std::size_t min_per = improved ? 2 : 1;
  if (o.ntraj < min_per * ncomp)
    throw PreconditionError("mcsolve: ntraj too small for the number of initial-state components");

  // largest-remainder allotment with a floor of min_per per component
  std::vector<std::size_t> alloc(ncomp, min_per);
  {
    const std::size_t spare = o.ntraj - min_per * ncomp;
    std::vector<double> ideal(ncomp);
    std::size_t used = 0;
    for (std::size_t c = 0; c < ncomp; ++c) {
      ideal[c] = spare * psi0.components[c].first / ptot;
      alloc[c] += std::size_t(ideal[c]);
      used += std::size_t(ideal[c]);
    }
    std::vector<std::size_t> ord(ncomp);
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
      return ideal[a] - std::floor(ideal[a]) > ideal[b] - std::floor(ideal[b]);
    });
    for (std::size_t i = 0; used < spare; ++i, ++used) ++alloc[ord[i % ncomp]];
  }

  Ensemble ens;
  ens.improved = improved;
  ens.comp_prob.resize(ncomp);
  for (std::size_t c = 0; c < ncomp; ++c) ens.comp_prob[c] = psi0.components[c].first / ptot;
  ens.p0.assign(ncomp, 0.0);
  std::vector<std::vector<cplx>> kets;
  for (const auto& comp : psi0.components) kets.push_back(comp.second.full());

  // interleave components so every prefix keeps the allotted proportions
  struct Job {
    std::size_t comp;
    bool no_jump;
    double key;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < ncomp; ++c)
    for (std::size_t j = 0; j < alloc[c]; ++j) jobs.push_back({c, improved && j == 0, (j + 0.5) / double(alloc[c])});
  std::stable_sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.key < b.key; });

  // no-jump trajectories first: their final norms fix the conditional draws
  ens.runs.resize(jobs.size());
  std::vector<bool> done(jobs.size(), false);
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (jobs[i].no_jump) {
      ens.runs[i] = run_trajectory(p, kets[jobs[i].comp], trajectory_seed(o.seed, i), 0.0, true);
      ens.p0[jobs[i].comp] = ens.runs[i].norm2.back();
      done[i] = true;
    }

  auto run_range = [&](std::size_t b0, std::size_t b1) {
    std::vector<std::exception_ptr> errs(b1 - b0);
    auto body = [&](std::size_t i) {
      if (done[i]) return;
      try {
        const auto& jb = jobs[i];
        ens.runs[i] = run_trajectory(p, kets[jb.comp], trajectory_seed(o.seed, i), improved ? ens.p0[jb.comp] : 0.0,
                                     false);
      } catch (...) {
        errs[i - b0] = std::current_exception();
      }
    };
    if (o.map == MapKind::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
      for (std::size_t i = b0; i < b1; ++i) body(i);
    } else {
      for (std::size_t i = b0; i < b1; ++i) body(i);
    }
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  };

  const std::size_t batch = std::max<std::size_t>(1, o.batch);
  std::size_t used = 0;
  while (used < jobs.size()) {
    const std::size_t b1 = std::min(jobs.size(), used + batch);
    run_range(used, b1);
    used = b1;
    if (used == jobs.size()) break;
    ens.used = used;
    ens.jobs_comp.clear();
    ens.jobs_no_jump.clear();
    for (std::size_t i = 0; i < used; ++i) {
      ens.jobs_comp.push_back(jobs[i].comp);
      ens.jobs_no_jump.push_back(jobs[i].no_jump);
    }
    // every component needs its minimum before the sample can stop early
    std::vector<std::size_t> have(ncomp, 0);
    for (std::size_t i = 0; i < used; ++i) ++have[jobs[i].comp];
    bool complete = true;
    // (two sampled trajectories per group for a variance estimate)
    for (std::size_t c = 0; c < ncomp; ++c) complete = complete && have[c] >= min_per + 1;
    if (!complete) continue;
    if (o.timeout) {
      const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
      if (el > *o.timeout) {
        ens.warnings.push_back("mcsolve: timeout after " + std::to_string(used) + " trajectories");
        break;
      }
    }
    if (!o.target_tol.empty() && p.n_eops > 0 && ens.target_reached(p)) break;
  }
  ens.used = used;
  ens.runs.resize(used);
  ens.jobs_comp.clear();
  ens.jobs_no_jump.clear();
  for (std::size_t i = 0; i < used; ++i) {
    ens.jobs_comp.push_back(jobs[i].comp);
    ens.jobs_no_jump.push_back(jobs[i].no_jump);
  }
  ens.assign_weights();
  return ens;
}

void Ensemble::assign_weights() {
  const std::size_t ncomp = comp_prob.size();
  // group 2c: all trajectories of component c, or its no-jump run under
  // improved sampling; group 2c+1: the conditioned jump runs
  groups.assign(2 * ncomp, Group{});
  group_of.assign(used, 0);
  for (std::size_t i = 0; i < used; ++i) {
    const std::size_t c = jobs_comp[i];
    const std::size_t g = improved && !jobs_no_jump[i] ? 2 * c + 1 : 2 * c;
    group_of[i] = g;
    ++groups[g].count;
  }
  for (std::size_t c = 0; c < ncomp; ++c) {
    if (improved) {
      groups[2 * c].weight = comp_prob[c] * p0[c];
      groups[2 * c + 1].weight = comp_prob[c] * (1.0 - p0[c]);
    } else {
      groups[2 * c].weight = comp_prob[c];
    }
  }
  for (std::size_t i = 0; i < used; ++i) {
    const auto& g = groups[group_of[i]];
    runs[i].rec.weight = g.weight / double(g.count);
  }
}

void Ensemble::statistics(const std::vector<const std::vector<std::vector<cplx>>*>& vals, std::size_t nrow,
                          std::size_t nt, std::vector<std::vector<cplx>>& mean,
                          std::vector<std::vector<double>>& std_out) const {
  mean.assign(nrow, std::vector<cplx>(nt));
  std::vector<std::vector<double>> var(nrow, std::vector<double>(nt, 0.0));
  const std::size_t ng = groups.size();
  for (std::size_t g = 0; g < ng; ++g) {
    const auto& gr = groups[g];
    if (gr.count == 0) continue;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < used; ++i)
      if (group_of[i] == g) members.push_back(i);
    for (std::size_t e = 0; e < nrow; ++e)
      for (std::size_t k = 0; k < nt; ++k) {
        cplx m = 0.0;
        for (std::size_t i : members) m += (*vals[i])[e][k];
        m /= double(members.size());
        mean[e][k] += gr.weight * m;
        if (members.size() > 1) {
          double s2 = 0;
          for (std::size_t i : members) s2 += std::norm((*vals[i])[e][k] - m);
          s2 /= double(members.size() - 1);
          var[e][k] += gr.weight * gr.weight * s2 / double(members.size());
        }
      }
  }
  std_out.assign(nrow, std::vector<double>(nt));
  for (std::size_t e = 0; e < nrow; ++e)
    for (std::size_t k = 0; k < nt; ++k) std_out[e][k] = std::sqrt(var[e][k] * double(used));
}

bool Ensemble::target_reached(const McProblem& p) {
  Ensemble tmp;
  tmp.improved = improved;
  tmp.comp_prob = comp_prob;
  tmp.p0 = p0;
  tmp.used = used;
  tmp.jobs_comp = jobs_comp;
  tmp.jobs_no_jump = jobs_no_jump;
  tmp.runs.assign(runs.begin(), runs.begin() + std::ptrdiff_t(used));
  tmp.assign_weights();
  std::vector<const std::vector<std::vector<cplx>>*> vals;
  for (const auto& r : tmp.runs) vals.push_back(&r.rec.expect);
  std::vector<std::vector<cplx>> mean;
  std::vector<std::vector<double>> sd;
  tmp.statistics(vals, p.n_eops, p.tlist.size(), mean, sd);
  const auto& tt = p.opts.target_tol;
  for (std::size_t e = 0; e < p.n_eops; ++e) {
    const TargetTol t = tt.size() == 1 ? tt[0] : tt.at(e);
    for (std::size_t k = 0; k < p.tlist.size(); ++k) {
      const double err = sd[e][k] / std::sqrt(double(used));
      if (err > t.atol + t.rtol * std::abs(mean[e][k])) return false;
    }
  }
  return true;
}

MultiTrajResult finalize(const McProblem& p, Ensemble& ens,
                         const std::vector<std::vector<double>>* factor /* [traj][time] or null */) {
  MultiTrajResult res;
  const std::size_t nt = p.tlist.size();
  const std::size_t nch = p.c_ops.size();
  res.times = p.tlist;
  res.ntraj_used = ens.used;
  res.warnings = ens.warnings;
  res.no_jump_probability = ens.p0.empty() ? 1.0 : ens.p0.front();

  std::vector<std::vector<std::vector<cplx>>> scaled;
  std::vector<const std::vector<std::vector<cplx>>*> vals;
  if (factor) {
    scaled.resize(ens.used);
    for (std::size_t i = 0; i < ens.used; ++i) {
      scaled[i] = ens.runs[i].rec.expect;
      for (auto& row : scaled[i])
        for (std::size_t k = 0; k < nt; ++k) row[k] *= (*factor)[i][k];
      vals.push_back(&scaled[i]);
    }
  } else {
    for (const auto& r : ens.runs) vals.push_back(&r.rec.expect);
  }
  ens.statistics(vals, p.n_eops, nt, res.average_expect, res.std_expect);
  if (factor) {
    std::vector<std::vector<std::vector<cplx>>> mu(ens.used, std::vector<std::vector<cplx>>(1, std::vector<cplx>(nt)));
    std::vector<const std::vector<std::vector<cplx>>*> mv;
    for (std::size_t i = 0; i < ens.used; ++i) {
      for (std::size_t k = 0; k < nt; ++k) mu[i][0][k] = (*factor)[i][k];
      mv.push_back(&mu[i]);
    }
    std::vector<std::vector<cplx>> m;
    std::vector<std::vector<double>> sd;
    ens.statistics(mv, 1, nt, m, sd);
    res.trace.resize(nt);
    for (std::size_t k = 0; k < nt; ++k) res.trace[k] = m[0][k].real();
  }

  res.photocurrent.assign(nch, std::vector<double>(nt > 0 ? nt - 1 : 0, 0.0));
  for (std::size_t i = 0; i < ens.used; ++i) {
    const auto& rec = ens.runs[i].rec;
    res.seeds.push_back(rec.seed);
    res.weights.push_back(rec.weight);
    res.jump_times.push_back(rec.jump_times);
    res.jump_channels.push_back(rec.jump_channels);
    for (std::size_t j = 0; j < rec.jump_times.size(); ++j) {
      const double tj = rec.jump_times[j];
      auto it = std::upper_bound(p.tlist.begin(), p.tlist.end(), tj);
      if (it == p.tlist.begin()) continue;
      std::size_t bin = std::size_t(it - p.tlist.begin()) - 1;
      if (bin >= nt - 1) bin = nt - 2;
      res.photocurrent[rec.jump_channels[j]][bin] += rec.weight / (p.tlist[bin + 1] - p.tlist[bin]);
    }
    if (p.opts.keep_runs_results) res.runs_expect.push_back(factor ? scaled[i] : rec.expect);
  }

  if (p.opts.store_states) {
    const std::size_t n = p.n;
    const Dimensions od = Dimensions::oper(p.ket_dims.rows);
    for (std::size_t k = 0; k < nt; ++k) {
      std::vector<cplx> acc(n * n);
      for (std::size_t i = 0; i < ens.used; ++i) {
        const auto& rec = ens.runs[i].rec;
        const double w = rec.weight * (factor ? (*factor)[i][k] : 1.0);
        const auto v = rec.states[k].full();
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t a = 0; a < n; ++a) acc[b * n + a] += w * v[a] * std::conj(v[b]);
      }
      res.average_states.emplace_back(DataMatrix::from_dense(n, n, std::move(acc)), od);
    }
  }
  return res;
}

}  // namespace detail

namespace {

MultiTrajResult closed_system(const QobjEvo& h, const MixedState& psi0, std::span<const double> tlist,
                              const std::vector<Qobj>& e_ops, const McOptions& opts, const Args& args) {
  MultiTrajResult res;
  res.times.assign(tlist.begin(), tlist.end());
  res.average_expect.assign(e_ops.size(), std::vector<cplx>(tlist.size()));
  res.std_expect.assign(e_ops.size(), std::vector<double>(tlist.size(), 0.0));
  SolverOptions so;
  so.integrator = opts.integrator;
  so.store_states = opts.store_states;
  double ptot = 0;
  for (const auto& c : psi0.components) ptot += c.first;
  for (const auto& [pr, ket] : psi0.components) {
    const auto r = sesolve(h, ket, tlist, e_ops, so, args);
    const double w = pr / ptot;
    for (std::size_t e = 0; e < e_ops.size(); ++e)
      for (std::size_t k = 0; k < tlist.size(); ++k) res.average_expect[e][k] += w * r.expect[e][k];
    if (opts.store_states) {
      if (res.average_states.empty())
        for (const auto& s : r.states) res.average_states.push_back(w * ket2dm(s));
      else
        for (std::size_t k = 0; k < r.states.size(); ++k)
          res.average_states[k] = res.average_states[k] + w * ket2dm(r.states[k]);
    }
    res.weights.push_back(w);
    res.seeds.push_back(0);
    res.jump_times.emplace_back();
    res.jump_channels.emplace_back();
  }
  res.ntraj_used = psi0.components.size();
  res.warnings.push_back("mcsolve: no collapse operators, solved with sesolve");
  return res;
}

}  // namespace

MultiTrajResult mcsolve(const QobjEvo& h, const MixedState& psi0, std::span<const double> tlist,
                        const std::vector<QobjEvo>& c_ops, const std::vector<Qobj>& e_ops, const McOptions& opts,
                        const Args& args) {
  const auto clock0 = std::chrono::steady_clock::now();
  MultiTrajResult res;
  if (c_ops.empty()) {
    res = closed_system(h, psi0, tlist, e_ops, opts, args);
  } else {
    const detail::McProblem p(h, c_ops, tlist, e_ops, opts, args);
    auto ens = detail::run_ensemble(p, psi0);
    res = detail::finalize(p, ens, nullptr);
  }
  res.run_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
  return res;
}

MultiTrajResult mcsolve(const QobjEvo& h, const Qobj& psi0, std::span<const double> tlist,
                        const std::vector<QobjEvo>& c_ops, const std::vector<Qobj>& e_ops, const McOptions& opts,
                        const Args& args) {
  if (psi0.isket()) return mcsolve(h, MixedState{{{1.0, psi0}}}, tlist, c_ops, e_ops, opts, args);
  if (psi0.isoper()) return mcsolve(h, MixedState::from_dm(psi0), tlist, c_ops, e_ops, opts, args);
  throw DimensionError("mcsolve: initial state must be a ket or a density operator");
}

std::vector<double> no_jump_norms(const QobjEvo& h, const Qobj& psi0, std::span<const double> tlist,
                                  const std::vector<QobjEvo>& c_ops, const IntegratorOptions& opts, const Args& args) {
  McOptions mo;
  mo.integrator = opts;
  mo.ntraj = 1;
  const detail::McProblem p(h, c_ops, tlist, {}, mo, args);
  if (!psi0.isket() || psi0.rows() != p.n) throw DimensionError("no_jump_norms: expected a ket matching H");
  const auto v = psi0.full();
  return detail::run_trajectory(p, v, 0, 0.0, true).norm2;
}

}  // namespace openq
