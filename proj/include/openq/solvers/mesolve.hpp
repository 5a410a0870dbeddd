#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "openq/odeint.hpp"
#include "openq/qobj.hpp"
#include "openq/tdep.hpp"

namespace openq {

struct SolverOptions {
  // Unset: store states only when there are no e_ops.
  std::optional<bool> store_states;
  bool store_final_state = true;
  IntegratorOptions integrator;
  bool progress = false;  // progress lines on stderr
};

struct SolveStats {
  std::size_t nfev = 0;
  double run_time = 0.0;  // seconds
  std::string solver;
  std::vector<std::string> warnings;
};

struct SolveResult {
  std::vector<double> times;
  std::vector<std::vector<cplx>> expect;  // expect[k][i] = <e_ops[k]>(times[i])
  std::vector<Qobj> states;
  std::optional<Qobj> final_state;
  SolveStats stats;
};

// Fast <op> on raw state vectors: kets (psi) or column-stacked density
// matrices (vec rho). Imaginary parts are dropped for Hermitian operators.
class ExpectTable {
 public:
  ExpectTable() = default;
  ExpectTable(const std::vector<Qobj>& e_ops, std::size_t n, bool density);
  std::size_t size() const { return ops_.size(); }
  cplx operator()(std::size_t k, std::span<const cplx> y) const;

 private:
  std::vector<DataMatrix> ops_;
  std::vector<std::vector<cplx>> flat_;  // row-major op entries for the density path
  std::vector<bool> herm_;
  std::size_t n_ = 0;
  bool density_ = false;
};

std::vector<QobjEvo> to_evo(const std::vector<Qobj>& ops);

// Unified deterministic solver: Schrodinger when the system is closed and the
// state is a ket, Lindblad otherwise. Build once, then run() or start()/step().
class Solver {
 public:
  Solver(QobjEvo h, std::vector<QobjEvo> c_ops = {}, SolverOptions opts = {});

  SolveResult run(const Qobj& state0, std::span<const double> tlist, const std::vector<Qobj>& e_ops = {},
                  const Args& args = {}) const;

  void start(const Qobj& state0, double t0, const Args& args = {});
  Qobj step(double t);
  double time() const;

  const SolverOptions& options() const { return opts_; }
  // Full generator acting on vec(rho).
  const QobjEvo& liouvillian() const;

 private:
  struct Session;
  bool closed() const { return c_ops_.empty() && !h_.issuper(); }
  bool schrodinger_for(const Qobj& state) const { return closed() && state.isket(); }
  Qobj rebuild_state(std::span<const cplx> y, const Qobj& like, bool density) const;

  QobjEvo h_;
  std::vector<QobjEvo> c_ops_;
  SolverOptions opts_;
  std::shared_ptr<const QobjEvo> minus_i_h_;
  std::shared_ptr<const QobjEvo> l_;
  std::shared_ptr<Session> session_;
};

SolveResult sesolve(const QobjEvo& h, const Qobj& psi0, std::span<const double> tlist,
                    const std::vector<Qobj>& e_ops = {}, const SolverOptions& opts = {}, const Args& args = {});

// h may be a Hamiltonian or an already-built Liouvillian (super).
SolveResult mesolve(const QobjEvo& h, const Qobj& rho0, std::span<const double> tlist,
                    const std::vector<QobjEvo>& c_ops = {}, const std::vector<Qobj>& e_ops = {},
                    const SolverOptions& opts = {}, const Args& args = {});

// Helpers for column-stacked density matrices.
std::vector<cplx> vec_of(const Qobj& rho);
Qobj dm_from_vec(std::span<const cplx> v, const Dimensions& oper_dims);

}  // namespace openq
