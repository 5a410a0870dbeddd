#pragma once

#include <cstdint>
#include <vector>

#include "openq/heom/environment.hpp"
#include "openq/solvers/mesolve.hpp"

namespace openq {

// Multi-indices n over N exponents with |n| <= cutoff, graded lexicographic.
class AdoIndexSet {
 public:
  static constexpr std::size_t none = static_cast<std::size_t>(-1);

  AdoIndexSet(std::size_t n_exponents, std::size_t cutoff);

  std::size_t size() const { return labels_.size(); }
  std::size_t n_exponents() const { return nexp_; }
  std::size_t cutoff() const { return cutoff_; }
  const std::vector<std::uint16_t>& label(std::size_t i) const { return labels_[i]; }
  std::size_t level(std::size_t i) const;
  std::size_t find(const std::vector<std::uint16_t>& label) const;  // none if absent
  std::size_t up(std::size_t i, std::size_t k) const { return up_[i * nexp_ + k]; }
  std::size_t down(std::size_t i, std::size_t k) const { return down_[i * nexp_ + k]; }

 private:
  std::size_t nexp_, cutoff_;
  std::vector<std::vector<std::uint16_t>> labels_;
  std::vector<std::size_t> up_, down_;
};

struct HeomBath {
  Qobj q;  // Hermitian coupling operator
  ExponentSet exps;
  static HeomBath from_env(const BosonicEnvironment& env, const Qobj& q, std::size_t nk, bool merge = true);
};

struct Hierarchy {
  DataMatrix generator;  // CSR over the stacked vec(ADO) space
  AdoIndexSet index;
  std::size_t d = 0;      // system dimension
  Dimensions oper_dims;
};

Hierarchy hierarchy_build(const Qobj& h, const std::vector<HeomBath>& baths, std::size_t cutoff);
Hierarchy hierarchy_build(const Qobj& h, const Qobj& q, const ExponentSet& exps, std::size_t cutoff);

struct HeomOptions {
  IntegratorOptions integrator;
  bool store_states = false;
};

struct HeomResult : SolveResult {
  std::vector<cplx> final_ados;  // full stack, ADO i at [i*d*d, (i+1)*d*d)
  std::shared_ptr<const Hierarchy> hierarchy;
  Qobj ado(std::size_t i) const;
};

HeomResult heomsolve(const Qobj& h, const std::vector<HeomBath>& baths, const Qobj& rho0,
                     std::span<const double> tlist, std::size_t cutoff, const std::vector<Qobj>& e_ops = {},
                     const HeomOptions& opts = {});

// ceil(w_s / min_k Re gamma_k)
std::size_t heom_cutoff_hint(const ExponentSet& exps, double w_s);

}  // namespace openq
