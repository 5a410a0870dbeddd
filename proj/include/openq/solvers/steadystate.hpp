#pragma once

#include <optional>
#include <vector>

#include "openq/data/linalg.hpp"
#include "openq/qobj.hpp"

namespace openq {

enum class SteadyMethod { direct, power, svd };

struct SteadyStateOptions {
  SteadyMethod method = SteadyMethod::direct;
  data::LinearMethod solver = data::LinearMethod::direct_lu;
  data::GmresOptions gmres;
  double power_shift = 1e-10;   // (L - sigma I) x_n = x_{n-1}
  double power_tol = 1e-12;     // stop when ||L x|| < tol with ||x|| = 1
  std::size_t power_maxiter = 50;
  double residual_tol = 1e-10;  // accept when ||L vec(rho)|| <= tol * ||L||_F
};

struct SteadyStateResult {
  Qobj rho;
  double residual = 0.0;
  bool degenerate = false;  // null space of L looks more than one-dimensional (svd only)
  std::size_t iterations = 0;
};

// h may be a Hamiltonian or a Liouvillian.
SteadyStateResult steadystate_full(const Qobj& h, const std::vector<Qobj>& c_ops = {},
                                   const SteadyStateOptions& opts = {});
inline Qobj steadystate(const Qobj& h, const std::vector<Qobj>& c_ops = {}, const SteadyStateOptions& opts = {}) {
  return steadystate_full(h, c_ops, opts).rho;
}

std::string_view steady_method_name(SteadyMethod m);
SteadyMethod parse_steady_method(std::string_view s);

}  // namespace openq
