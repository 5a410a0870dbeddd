#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "openq/stochastic/mcsolve.hpp"

namespace openq {

struct WienerPath {
  std::vector<double> times;            // step boundaries, size nsteps + 1
  std::vector<std::vector<double>> dw;  // dw[channel][step], N(0, dt)
};

// Increments drawn in (step, channel) order from Philox(seed), exactly as one
// smesolve trajectory with that seed consumes them.
WienerPath wiener_path(std::uint64_t seed, double t0, double dt, std::size_t nsteps, std::size_t nchannels);

struct SmeOptions {
  std::size_t ntraj = 50;
  std::uint64_t seed = 0;
  MapKind map = MapKind::parallel;
  double dt_sub = 0.0;  // 0: tlist spacing / 100
  bool keep_runs_results = false;
  bool store_states = false;
  bool store_measurement = true;
};

struct SmeResult : MultiTrajResult {
  // measurement[traj][sc_op][k] = mean_{interval k} tr[(s + s^dag) rho] + dW_k / dt_k
  // over [t_k, t_{k+1}).
  std::vector<std::vector<std::vector<double>>> measurement;
  std::size_t substeps = 0;  // per tlist interval
};

// Homodyne stochastic master equation. Deterministic part: RK4 per substep;
// noise: Euler-Maruyama; trace renormalized and rho hermitized each substep.
SmeResult smesolve(const QobjEvo& h, const Qobj& rho0, std::span<const double> tlist,
                   const std::vector<QobjEvo>& c_ops, const std::vector<Qobj>& sc_ops,
                   const std::vector<Qobj>& e_ops = {}, const SmeOptions& opts = {}, const Args& args = {});

}  // namespace openq
