#include "openq/solvers/mesolve.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

#include "openq/errors.hpp"

namespace openq {

// ---- expectation table -------------------------------------------------------------

ExpectTable::ExpectTable(const std::vector<Qobj>& e_ops, std::size_t n, bool density) : n_(n), density_(density) {
  for (const auto& op : e_ops) {
    if (!op.isoper() || op.rows() != n || op.cols() != n)
      throw DimensionError("e_ops: operator dims " + op.dims().str() + " do not match the state");
    ops_.push_back(op.data());
    herm_.push_back(op.isherm());
    if (density) {
      std::vector<cplx> f(n * n);
      const auto& d = op.data();
      // row-major copy, matching vec(rho)[i*n + j] = rho_ji
      if (d.format() == Format::CSR) {
        const auto& c = d.csr();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = c.row_ptr[i]; p < c.row_ptr[i + 1]; ++p) f[i * n + c.col_idx[p]] = c.values[p];
      } else {
        const auto v = d.to_vector();
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t i = 0; i < n; ++i) f[i * n + j] = v[j * n + i];
      }
      flat_.push_back(std::move(f));
    }
  }
}

cplx ExpectTable::operator()(std::size_t k, std::span<const cplx> y) const {
  cplx s = 0.0;
  if (density_) {
    const auto& f = flat_[k];
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * y[i];
  } else {
    const auto oy = data::matvec(ops_[k], y);
    for (std::size_t i = 0; i < n_; ++i) s += std::conj(y[i]) * oy[i];
  }
  return herm_[k] ? cplx(s.real(), 0.0) : s;
}

std::vector<QobjEvo> to_evo(const std::vector<Qobj>& ops) { return {ops.begin(), ops.end()}; }

std::vector<cplx> vec_of(const Qobj& rho) {
  if (!rho.isoper() || rho.rows() != rho.cols()) throw DimensionError("expected a square density operator");
  return rho.full();
}

Qobj dm_from_vec(std::span<const cplx> v, const Dimensions& oper_dims) {
  const std::size_t n = oper_dims.nrows();
  if (v.size() != n * n) throw DimensionError("vector length does not match operator dims");
  return Qobj(DataMatrix::from_dense(n, n, std::vector<cplx>(v.begin(), v.end())), oper_dims);
}

// ---- Solver -------------------------------------------------------------------------------

struct Solver::Session {
  bool density = false;
  Qobj like;
  Args args;
  double t0 = 0;
  std::vector<cplx> y0;
  std::unique_ptr<Dopri5> ode;
  std::optional<Qobj> diag_gen;
  double last_t = 0;
};

Solver::Solver(QobjEvo h, std::vector<QobjEvo> c_ops, SolverOptions opts)
    : h_(std::move(h)), c_ops_(std::move(c_ops)), opts_(std::move(opts)) {
  opts_.integrator.validate();
  if (h_.size() == 0) throw DimensionError("solver: empty Hamiltonian");
  for (const auto& c : c_ops_) {
    if (c.issuper()) {
      if (h_.issuper() ? c.dims() != h_.dims() : c.dims() != Dimensions::super(h_.dims().rows))
        throw DimensionError("solver: collapse superoperator dims do not match");
    } else if (h_.issuper() ? Dimensions::super(c.dims().rows) != h_.dims() : c.dims() != h_.dims()) {
      throw DimensionError("solver: c_op dims " + c.dims().str() + " differ from H dims " + h_.dims().str());
    }
  }
  if (!h_.issuper()) minus_i_h_ = std::make_shared<const QobjEvo>(cplx(0, -1) * h_);
  // built eagerly so a constructed solver is safe to share across threads
  if (h_.issuper() && c_ops_.empty())
    l_ = std::make_shared<const QobjEvo>(h_);
  else
    l_ = std::make_shared<const QobjEvo>(qevo_liouvillian(h_, c_ops_));
}

const QobjEvo& Solver::liouvillian() const { return *l_; }

Qobj Solver::rebuild_state(std::span<const cplx> y, const Qobj& like, bool density) const {
  if (density) return dm_from_vec(y, like.dims());
  return Qobj(DataMatrix::from_dense(y.size(), 1, std::vector<cplx>(y.begin(), y.end())), like.dims());
}

namespace {

// The operator space the state lives on, given H or L.
Dimensions oper_dims_of(const QobjEvo& h) {
  return h.issuper() ? Dimensions::oper(h.dims().rows) : h.dims();
}

struct Prepared {
  bool density;
  Qobj like;  // ket or oper carrying output dims
  std::vector<cplx> y0;
};

Prepared prepare_state(const Qobj& state0, const QobjEvo& h, bool schrodinger) {
  const Dimensions od = oper_dims_of(h);
  if (schrodinger) {
    if (state0.dims().rows != od.rows) throw DimensionError("initial ket dims do not match H");
    return {false, state0, state0.full()};
  }
  Qobj rho = state0.isket() ? ket2dm(state0) : state0;
  if (!rho.isoper() || rho.dims() != od)
    throw DimensionError("initial state dims " + state0.dims().str() + " do not match " + od.str());
  return {true, rho, vec_of(rho)};
}

}  // namespace

SolveResult Solver::run(const Qobj& state0, std::span<const double> tlist, const std::vector<Qobj>& e_ops,
                        const Args& args) const {
  const auto clock0 = std::chrono::steady_clock::now();
  if (tlist.empty()) throw PreconditionError("solver: empty tlist");
  for (std::size_t i = 1; i < tlist.size(); ++i)
    if (tlist[i] < tlist[i - 1]) throw PreconditionError("solver: tlist must be ascending");
  const bool se = schrodinger_for(state0);
  const QobjEvo& gen = se ? *minus_i_h_ : liouvillian();
  const Prepared p = prepare_state(state0, h_, se);
  const std::size_t n = p.like.rows();
  const ExpectTable table(e_ops, n, p.density);
  const bool store = opts_.store_states.value_or(e_ops.empty()) || e_ops.empty();

  SolveResult res;
  res.stats.solver = se ? "sesolve" : "mesolve";
  res.times.assign(tlist.begin(), tlist.end());
  res.expect.assign(e_ops.size(), std::vector<cplx>(tlist.size()));

  auto record = [&](std::size_t i, std::span<const cplx> y) {
    for (std::size_t k = 0; k < table.size(); ++k) res.expect[k][i] = table(k, y);
    if (store) res.states.push_back(rebuild_state(y, p.like, p.density));
    if (i + 1 == tlist.size() && opts_.store_final_state) res.final_state = rebuild_state(y, p.like, p.density);
    if (opts_.progress && tlist.size() >= 10 && (i + 1) % (tlist.size() / 10) == 0)
      std::cerr << res.stats.solver << ": " << (100 * (i + 1)) / tlist.size() << "%\n";
  };

  const double t0 = tlist[0];
  if (opts_.integrator.method == OdeMethod::diag_expm) {
    if (!gen.is_constant()) throw UnsupportedError("diag method requires a time-independent generator");
    const auto ys = propagate_diag(gen.constant_part(), p.y0, t0, tlist);
    for (std::size_t i = 0; i < ys.size(); ++i) record(i, ys[i]);
  } else {
    OdeRhs rhs = [&gen, &args](double t, std::span<const cplx> y, std::span<cplx> dy) { gen.matvec(t, y, dy, args); };
    Dopri5 ode(rhs, p.y0.size(), opts_.integrator);
    ode.set_bound(tlist.back());
    ode.reset(t0, p.y0);
    std::vector<cplx> y(p.y0.size());
    for (std::size_t i = 0; i < tlist.size(); ++i) {
      if (tlist[i] == t0)
        y = p.y0;
      else
        ode.integrate_to(tlist[i], y);
      record(i, y);
    }
    res.stats.nfev = ode.nfev();
  }
  res.stats.run_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
  return res;
}

void Solver::start(const Qobj& state0, double t0, const Args& args) {
  auto s = std::make_shared<Session>();
  const bool se = schrodinger_for(state0);
  Prepared p = prepare_state(state0, h_, se);
  s->density = p.density;
  s->like = p.like;
  s->args = args;
  s->t0 = s->last_t = t0;
  s->y0 = p.y0;
  std::shared_ptr<const QobjEvo> gen;
  if (se) {
    gen = minus_i_h_;
  } else {
    gen = l_;
  }
  if (opts_.integrator.method == OdeMethod::diag_expm) {
    if (!gen->is_constant()) throw UnsupportedError("diag method requires a time-independent generator");
    s->diag_gen = gen->constant_part();
  } else {
    Session* raw = s.get();
    OdeRhs rhs = [gen, raw](double t, std::span<const cplx> y, std::span<cplx> dy) { gen->matvec(t, y, dy, raw->args); };
    s->ode = std::make_unique<Dopri5>(rhs, p.y0.size(), opts_.integrator);
    s->ode->set_bound(t0);
    s->ode->reset(t0, p.y0);
  }
  session_ = std::move(s);
}

Qobj Solver::step(double t) {
  if (!session_) throw PreconditionError("solver: call start() before step()");
  auto& s = *session_;
  if (t < s.last_t) throw PreconditionError("solver: step() target lies before the current time");
  s.last_t = t;
  if (t == s.t0) return rebuild_state(s.y0, s.like, s.density);
  std::vector<cplx> y(s.y0.size());
  if (s.diag_gen) {
    const double ts[] = {t};
    y = propagate_diag(*s.diag_gen, s.y0, s.t0, ts)[0];
  } else {
    // extend the bound only as far as asked so coefficients are never sampled beyond t
    s.ode->set_bound(t);
    s.ode->integrate_to(t, y);
  }
  return rebuild_state(y, s.like, s.density);
}

double Solver::time() const {
  if (!session_) throw PreconditionError("solver: no active session");
  return session_->last_t;
}

// ---- free functions ------------------------------------------------------------------------

SolveResult sesolve(const QobjEvo& h, const Qobj& psi0, std::span<const double> tlist, const std::vector<Qobj>& e_ops,
                    const SolverOptions& opts, const Args& args) {
  if (h.issuper()) throw DimensionError("sesolve: H must be an operator");
  if (!psi0.isket() && !psi0.isoper()) throw DimensionError("sesolve: initial state must be a ket (or propagator)");
  if (psi0.isoper()) {
    // evolve each column: U(t) from U(0)
    if (psi0.dims().rows != h.dims().rows) throw DimensionError("sesolve: dims mismatch");
    const std::size_t n = psi0.rows();
    const auto cols = psi0.full();
    std::vector<std::vector<std::vector<cplx>>> per_col;
    SolveResult res;
    res.stats.solver = "sesolve";
    res.times.assign(tlist.begin(), tlist.end());
    for (std::size_t j = 0; j < n; ++j) {
      Qobj col(DataMatrix::from_dense(n, 1, std::vector<cplx>(cols.begin() + j * n, cols.begin() + (j + 1) * n)),
               Dimensions::ket(h.dims().rows));
      SolverOptions o = opts;
      o.store_states = true;
      auto r = Solver(h, {}, o).run(col, tlist, {}, args);
      res.stats.nfev += r.stats.nfev;
      std::vector<std::vector<cplx>> ys;
      for (const auto& st : r.states) ys.push_back(st.full());
      per_col.push_back(std::move(ys));
    }
    for (std::size_t i = 0; i < tlist.size(); ++i) {
      std::vector<cplx> u(n * n);
      for (std::size_t j = 0; j < n; ++j) std::copy(per_col[j][i].begin(), per_col[j][i].end(), u.begin() + j * n);
      res.states.emplace_back(DataMatrix::from_dense(n, n, std::move(u)), psi0.dims());
    }
    res.final_state = res.states.back();
    if (!e_ops.empty()) throw UnsupportedError("sesolve: e_ops are not defined for propagator evolution");
    return res;
  }
  return Solver(h, {}, opts).run(psi0, tlist, e_ops, args);
}

SolveResult mesolve(const QobjEvo& h, const Qobj& rho0, std::span<const double> tlist,
                    const std::vector<QobjEvo>& c_ops, const std::vector<Qobj>& e_ops, const SolverOptions& opts,
                    const Args& args) {
  return Solver(h, c_ops, opts).run(rho0, tlist, e_ops, args);
}

}  // namespace openq
