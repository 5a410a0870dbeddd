#pragma once

// Internal trajectory machinery shared by mcsolve and nm_mcsolve.

#include <string>
#include <vector>

#include "openq/stochastic/mcsolve.hpp"

namespace openq::detail {

struct McProblem {
  McProblem(const QobjEvo& h, const std::vector<QobjEvo>& c_ops, std::span<const double> tlist,
            const std::vector<Qobj>& e_ops, const McOptions& opts, const Args& args);
  std::vector<QobjEvo> c_ops;
  QobjEvo gen;  // -i H_eff
  std::vector<double> tlist;
  McOptions opts;
  Args args;
  ExpectTable table;
  std::size_t n_eops = 0;
  std::size_t n = 0;
  Dimensions ket_dims;
};

struct TrajRun {
  TrajectoryRecord rec;
  std::vector<double> norm2;  // unnormalized ||psi||^2 at each output (meaningful for no-jump runs)
};

// Trajectories with equal weight inside a group; a group of weight W and m
// members contributes W * mean and W^2 s^2 / m to the estimator variance.
struct Group {
  double weight = 0.0;
  std::size_t count = 0;
};

struct Ensemble {
  bool improved = false;
  std::vector<double> comp_prob;
  std::vector<double> p0;
  std::size_t used = 0;
  std::vector<std::size_t> jobs_comp;
  std::vector<bool> jobs_no_jump;
  std::vector<TrajRun> runs;
  std::vector<Group> groups;
  std::vector<std::size_t> group_of;
  std::vector<std::string> warnings;

  void assign_weights();
  // vals[traj][row][time]
  void statistics(const std::vector<const std::vector<std::vector<cplx>>*>& vals, std::size_t nrow, std::size_t nt,
                  std::vector<std::vector<cplx>>& mean, std::vector<std::vector<double>>& std_out) const;
  bool target_reached(const McProblem& p);
};

TrajRun run_trajectory(const McProblem& p, std::span<const cplx> psi0, std::uint64_t seed, double first_lo,
                       bool no_jump);
Ensemble run_ensemble(const McProblem& p, const MixedState& psi0);
// factor[traj][time] multiplies each trajectory's values (martingale weights).
MultiTrajResult finalize(const McProblem& p, Ensemble& ens, const std::vector<std::vector<double>>* factor);

}  // namespace openq::detail
