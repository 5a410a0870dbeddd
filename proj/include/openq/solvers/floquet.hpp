#pragma once

#include <vector>

#include "openq/solvers/mesolve.hpp"

namespace openq {

class FloquetBasis {
 public:
  double period() const { return period_; }
  std::size_t nt() const { return nt_; }
  // Folded into (-pi/T, pi/T], ascending.
  const std::vector<double>& quasienergies() const { return eps_; }
  const Qobj& propagator() const { return u_; }  // U(T, 0)
  // Floquet mode Phi_alpha(t) (T-periodic), linearly interpolated on the grid.
  Qobj mode(std::size_t alpha, double t) const;
  std::vector<Qobj> modes(double t) const;
  // Floquet state e^{-i eps t} Phi_alpha(t).
  Qobj state(std::size_t alpha, double t) const;
  // Grid values: grid_mode(j, alpha) at t_j = j T / nt, j = 0..nt.
  const std::vector<cplx>& grid_mode(std::size_t j, std::size_t alpha) const { return table_[j][alpha]; }
  std::size_t dim() const { return eps_.size(); }

 private:
  friend FloquetBasis floquet_basis(const QobjEvo&, double, std::size_t, const Args&, const IntegratorOptions&);
  double period_ = 0;
  std::size_t nt_ = 0;
  std::vector<double> eps_;
  Qobj u_;
  Dimensions ket_dims_;
  std::vector<std::vector<std::vector<cplx>>> table_;  // [j][alpha][component]
};

// Tight default tolerances: stroboscopic comparisons run over many periods.
IntegratorOptions floquet_default_integrator();

FloquetBasis floquet_basis(const QobjEvo& h, double period, std::size_t nt, const Args& args = {},
                           const IntegratorOptions& opts = floquet_default_integrator());

SolveResult fsesolve(const FloquetBasis& fb, const Qobj& psi0, std::span<const double> tlist,
                     const std::vector<Qobj>& e_ops = {}, const SolverOptions& opts = {});

}  // namespace openq
