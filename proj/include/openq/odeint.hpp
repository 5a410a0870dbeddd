#pragma once

#include <array>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "openq/qobj.hpp"

namespace openq {

enum class OdeMethod { rk45_adaptive, diag_expm };

struct IntegratorOptions {
  double atol = 1e-8;
  double rtol = 1e-6;
  std::size_t nsteps = 2048;  // max internal steps between two outputs
  double max_step = 0.0;      // 0: unbounded
  double first_step = 0.0;    // 0: automatic
  OdeMethod method = OdeMethod::rk45_adaptive;

  void validate() const;
};

using OdeRhs = std::function<void(double t, std::span<const cplx> y, std::span<cplx> dydt)>;

// Dormand-Prince 5(4) with the standard continuous extension. Steps are never
// restarted to land on output times; outputs come from the interpolant.
class Dopri5 {
 public:
  Dopri5(OdeRhs rhs, std::size_t n, IntegratorOptions opts = {});

  void reset(double t0, std::span<const cplx> y0);
  // Never step past t_bound (e.g. the end of a coefficient's domain).
  void set_bound(double t_bound) { t_bound_ = t_bound; }
  double bound() const { return t_bound_; }

  // One accepted step. Returns false when already at the bound.
  bool step();
  double t() const { return t_; }
  double t_prev() const { return t_prev_; }
  std::span<const cplx> y() const { return y_; }

  // Interpolant over the last accepted step [t_prev, t].
  void dense(double t, std::span<cplx> out) const;

  // Advance until t() >= target and write y(target) into out.
  void integrate_to(double target, std::span<cplx> out);

  std::size_t nfev() const { return nfev_; }
  std::size_t naccept() const { return naccept_; }
  std::size_t nreject() const { return nreject_; }
  const IntegratorOptions& options() const { return opts_; }

 private:
  double initial_step();
  double error_scale(std::size_t i, const std::vector<cplx>& a, const std::vector<cplx>& b) const;

  OdeRhs rhs_;
  std::size_t n_;
  IntegratorOptions opts_;
  double t_ = 0, t_prev_ = 0, h_ = 0, facold_ = 1e-4;
  double t_bound_ = std::numeric_limits<double>::infinity();
  bool have_step_ = false;
  bool last_rejected_ = false;
  std::vector<cplx> y_, y_prev_, f0_;
  std::array<std::vector<cplx>, 7> k_;
  std::vector<cplx> ytmp_, yerr_;
  std::array<std::vector<cplx>, 5> cont_;
  std::size_t nfev_ = 0, naccept_ = 0, nreject_ = 0;
};

// States at each target time (targets ascending, targets[0] >= t0).
std::vector<std::vector<cplx>> integrate(const OdeRhs& rhs, std::span<const cplx> y0, double t0,
                                         std::span<const double> targets, const IntegratorOptions& opts = {});

// y(t) = V exp(Lambda (t - t0)) V^-1 y0 from one eigendecomposition of a
// constant generator.
std::vector<std::vector<cplx>> propagate_diag(const Qobj& l, std::span<const cplx> y0, double t0,
                                              std::span<const double> targets);

}  // namespace openq
