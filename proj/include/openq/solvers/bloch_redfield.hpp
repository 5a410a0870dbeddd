#pragma once

#include <functional>
#include <vector>

#include "openq/solvers/mesolve.hpp"

namespace openq {

// System operator A coupled to a bath with power spectrum S(omega).
// S(omega > 0) is the emission rate for a transition releasing energy omega.
struct BRCoupling {
  Qobj a;
  std::function<double(double)> spectrum;
};

// gamma * theta(omega) with theta(0) = 1/2.
std::function<double(double)> flat_spectrum(double gamma);

struct BRTensor {
  Qobj r;                     // superoperator on vec(rho) in the eigenbasis of H
  std::vector<double> energies;
  DataMatrix basis;           // eigenvectors as columns (lab -> eigen: V^dag . V)
  std::size_t degenerate_pairs = 0;
};

// sec_cutoff < 0 keeps every term; otherwise terms with |w_ab - w_cd| > sec_cutoff
// are dropped (absolute frequency units of H).
BRTensor br_tensor(const Qobj& h, const std::vector<BRCoupling>& couplings, double sec_cutoff = 0.1);

SolveResult brmesolve(const Qobj& h, const std::vector<BRCoupling>& couplings, const Qobj& rho0,
                      std::span<const double> tlist, const std::vector<Qobj>& e_ops = {}, double sec_cutoff = 0.1,
                      const SolverOptions& opts = {});
// Time-dependent Hamiltonians are rejected.
SolveResult brmesolve(const QobjEvo& h, const std::vector<BRCoupling>& couplings, const Qobj& rho0,
                      std::span<const double> tlist, const std::vector<Qobj>& e_ops = {}, double sec_cutoff = 0.1,
                      const SolverOptions& opts = {});

// Operator in the eigenbasis of a BRTensor and back.
Qobj to_eigenbasis(const BRTensor& br, const Qobj& op);
Qobj from_eigenbasis(const BRTensor& br, const Qobj& op);

}  // namespace openq
