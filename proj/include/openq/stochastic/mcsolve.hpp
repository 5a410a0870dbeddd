#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "openq/solvers/mesolve.hpp"

namespace openq {

enum class MapKind { serial, parallel };

struct TargetTol {
  double atol = 0.0;
  double rtol = 0.0;
};

struct McOptions {
  std::size_t ntraj = 500;
  bool improved_sampling = false;
  // One entry applies to every e_op; otherwise one per e_op.
  std::vector<TargetTol> target_tol;
  std::optional<double> timeout;  // seconds
  std::uint64_t seed = 0;
  MapKind map = MapKind::parallel;
  bool keep_runs_results = false;
  bool store_states = false;
  double jump_tol = 1e-8;          // relative tolerance on the jump time
  std::size_t jump_max_bisect = 200;
  IntegratorOptions integrator;
  std::size_t batch = 50;          // target_tol / timeout are checked between batches
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  double weight = 0.0;
  std::vector<double> jump_times;
  std::vector<std::size_t> jump_channels;
  std::vector<std::vector<cplx>> expect;  // [e_op][time], normalized state
  std::vector<Qobj> states;               // normalized, iff store_states
};

struct MultiTrajResult {
  std::vector<double> times;
  std::vector<std::vector<cplx>> average_expect;
  // sqrt(ntraj) x standard error of average_expect, so std/sqrt(ntraj) is the
  // error bar under every sampling scheme.
  std::vector<std::vector<double>> std_expect;
  std::vector<std::vector<std::vector<cplx>>> runs_expect;  // [traj][e_op][time], iff keep_runs_results
  std::vector<Qobj> average_states;                          // iff store_states
  // Jump rate per channel, binned per tlist interval: photocurrent[c][k] covers [t_k, t_{k+1}).
  std::vector<std::vector<double>> photocurrent;
  std::size_t ntraj_used = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> weights;
  std::vector<std::vector<double>> jump_times;
  std::vector<std::vector<std::size_t>> jump_channels;
  std::vector<double> trace;  // E[mu(t)], nm_mcsolve only
  double no_jump_probability = 1.0;  // improved sampling: p0 of the first pure component
  std::vector<std::string> warnings;
  double run_time = 0.0;
};

// Weighted pure-state ensemble for mixed initial states.
struct MixedState {
  std::vector<std::pair<double, Qobj>> components;
  static MixedState from_dm(const Qobj& rho, double cutoff = 1e-12);
};

MultiTrajResult mcsolve(const QobjEvo& h, const Qobj& psi0, std::span<const double> tlist,
                        const std::vector<QobjEvo>& c_ops, const std::vector<Qobj>& e_ops = {},
                        const McOptions& opts = {}, const Args& args = {});
MultiTrajResult mcsolve(const QobjEvo& h, const MixedState& psi0, std::span<const double> tlist,
                        const std::vector<QobjEvo>& c_ops, const std::vector<Qobj>& e_ops = {},
                        const McOptions& opts = {}, const Args& args = {});

// Squared norm of the no-jump (non-Hermitian) evolution at each time.
std::vector<double> no_jump_norms(const QobjEvo& h, const Qobj& psi0, std::span<const double> tlist,
                                  const std::vector<QobjEvo>& c_ops, const IntegratorOptions& opts = {},
                                  const Args& args = {});

// ---- non-Markovian unraveling ------------------------------------------------

struct NmOperator {
  Qobj a;
  Coefficient rate;  // gamma_n(t), may go negative
};

struct NmPrepared {
  std::vector<Qobj> ops;          // including the padding operator, if any
  std::vector<Coefficient> rates;  // gamma_n(t); padding has rate 0
  double alpha = 0.0;
  bool padded = false;
  double shift(double t, const Args& args = {}) const;                   // s(t)
  double shifted_rate(std::size_t n, double t, const Args& args = {}) const;  // Gamma_n(t)
};

NmPrepared nm_prepare(const std::vector<NmOperator>& ops_and_rates);

struct NmOptions {
  McOptions mc;
  std::size_t shift_substeps = 64;  // trapezoid nodes per tlist interval for int s dt
};

MultiTrajResult nm_mcsolve(const QobjEvo& h, const Qobj& psi0, std::span<const double> tlist,
                           const std::vector<NmOperator>& ops_and_rates, const std::vector<Qobj>& e_ops = {},
                           const NmOptions& opts = {}, const Args& args = {});

}  // namespace openq
