#include "openq/odeint.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "openq/errors.hpp"

namespace openq {

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;  // step may shrink to 1/5
constexpr double kMaxFactor = 5.0;  // or grow 5x
constexpr double kBeta = 0.04;      // PI stabilization
constexpr double kExpo = 0.2 - kBeta * 0.75;

}  // namespace

void IntegratorOptions::validate() const {
  if (!(atol > 0) || !(rtol > 0)) throw PreconditionError("integrator: atol and rtol must be positive");
  if (nsteps < 1) throw PreconditionError("integrator: nsteps must be >= 1");
  if (max_step < 0) throw PreconditionError("integrator: max_step must be positive when set");
  if (first_step < 0) throw PreconditionError("integrator: first_step must be positive when set");
}

Dopri5::Dopri5(OdeRhs rhs, std::size_t n, IntegratorOptions opts) : rhs_(std::move(rhs)), n_(n), opts_(opts) {
  opts_.validate();
  y_.resize(n);
  y_prev_.resize(n);
  f0_.resize(n);
  ytmp_.resize(n);
  yerr_.resize(n);
  for (auto& k : k_) k.resize(n);
  for (auto& c : cont_) c.resize(n);
}

void Dopri5::reset(double t0, std::span<const cplx> y0) {
  if (y0.size() != n_) throw DimensionError("integrator: initial state has wrong length");
  std::copy(y0.begin(), y0.end(), y_.begin());
  std::copy(y0.begin(), y0.end(), y_prev_.begin());
  t_ = t_prev_ = t0;
  have_step_ = false;
  last_rejected_ = false;
  facold_ = 1e-4;
  rhs_(t_, y_, k_[0]);
  ++nfev_;
  h_ = opts_.first_step > 0 ? opts_.first_step : initial_step();
  // the interpolant of a zero-length step is the constant y0
  for (std::size_t i = 0; i < n_; ++i) {
    cont_[0][i] = y_[i];
    cont_[1][i] = cont_[2][i] = cont_[3][i] = cont_[4][i] = 0.0;
  }
}

double Dopri5::error_scale(std::size_t i, const std::vector<cplx>& a, const std::vector<cplx>& b) const {
  return opts_.atol + opts_.rtol * std::max(std::abs(a[i]), std::abs(b[i]));
}

double Dopri5::initial_step() {
  double dnf = 0.0, dny = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double sk = opts_.atol + opts_.rtol * std::abs(y_[i]);
    dnf += std::norm(k_[0][i]) / (sk * sk);
    dny += std::norm(y_[i]) / (sk * sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  if (opts_.max_step > 0) h = std::min(h, opts_.max_step);
  // the probe must not evaluate the rhs past the bound (splines throw there)
  const double room = t_bound_ - t_;
  if (!(room > 0)) return 1e-6;
  h = std::min(h, room);
  for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y_[i] + h * k_[0][i];
  rhs_(t_ + h, ytmp_, k_[1]);
  ++nfev_;
  double der2 = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double sk = opts_.atol + opts_.rtol * std::abs(y_[i]);
    der2 += std::norm(k_[1][i] - k_[0][i]) / (sk * sk);
  }
  der2 = std::sqrt(der2) / h;
  const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.2);
  h = std::min(100 * std::abs(h), h1);
  if (opts_.max_step > 0) h = std::min(h, opts_.max_step);
  return h;
}

bool Dopri5::step() {
  if (t_ >= t_bound_) return false;
  const double eps = std::numeric_limits<double>::epsilon();
  auto& k1 = k_[0];
  auto& k2 = k_[1];
  auto& k3 = k_[2];
  auto& k4 = k_[3];
  auto& k5 = k_[4];
  auto& k6 = k_[5];
  auto& k7 = k_[6];
  for (;;) {
    double h = h_;
    if (opts_.max_step > 0) h = std::min(h, opts_.max_step);
    bool hits_bound = false;
    if (t_ + 1.01 * h >= t_bound_) {
      h = t_bound_ - t_;
      hits_bound = true;
    }
    if (h < 16 * eps * std::max(1.0, std::abs(t_)))
      throw StiffnessError("integrator: step size underflow at t = " + std::to_string(t_));

    for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y_[i] + h * a21 * k1[i];
    rhs_(t_ + c2 * h, ytmp_, k2);
    for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y_[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs_(t_ + c3 * h, ytmp_, k3);
    for (std::size_t i = 0; i < n_; ++i) ytmp_[i] = y_[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs_(t_ + c4 * h, ytmp_, k4);
    for (std::size_t i = 0; i < n_; ++i)
      ytmp_[i] = y_[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs_(t_ + c5 * h, ytmp_, k5);
    for (std::size_t i = 0; i < n_; ++i)
      ytmp_[i] = y_[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const double tnew = hits_bound ? t_bound_ : t_ + h;
    rhs_(tnew, ytmp_, k6);
    // 5th-order solution, reused as the FSAL stage
    for (std::size_t i = 0; i < n_; ++i)
      yerr_[i] = y_[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    rhs_(tnew, yerr_, k7);
    nfev_ += 6;

    double err = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const cplx e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sk = error_scale(i, y_, yerr_);
      err += std::norm(e) / (sk * sk);
    }
    err = n_ > 0 ? std::sqrt(err / static_cast<double>(n_)) : 0.0;
    if (!std::isfinite(err)) throw NumericalError("integrator: non-finite state at t = " + std::to_string(t_));

    const double fac11 = std::pow(std::max(err, 1e-300), kExpo);
    if (err <= 1.0) {
      double fac = fac11 / std::pow(facold_, kBeta);
      fac = std::clamp(fac / kSafety, 1.0 / kMaxFactor, 1.0 / kMinFactor);
      double hnew = h / fac;
      if (last_rejected_) hnew = std::min(hnew, h);
      facold_ = std::max(err, 1e-4);
      last_rejected_ = false;
      ++naccept_;

      for (std::size_t i = 0; i < n_; ++i) {
        const cplx ydiff = yerr_[i] - y_[i];
        const cplx bspl = h * k1[i] - ydiff;
        cont_[0][i] = y_[i];
        cont_[1][i] = ydiff;
        cont_[2][i] = bspl;
        cont_[3][i] = ydiff - h * k7[i] - bspl;
        cont_[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      y_prev_.swap(y_);
      y_.swap(yerr_);
      k1.swap(k7);
      t_prev_ = t_;
      t_ = tnew;
      have_step_ = true;
      // keep the unclipped proposal so hitting the bound does not shrink later steps
      h_ = hits_bound ? std::max(hnew, h_) : hnew;
      return true;
    }
    h_ = h / std::min(1.0 / kMinFactor, fac11 / kSafety);
    last_rejected_ = true;
    ++nreject_;
  }
}

void Dopri5::dense(double t, std::span<cplx> out) const {
  if (out.size() != n_) throw DimensionError("integrator: output buffer has wrong length");
  if (!have_step_ || t_ == t_prev_) {
    std::copy(y_.begin(), y_.end(), out.begin());
    return;
  }
  const double h = t_ - t_prev_;
  if (t == t_) {
    std::copy(y_.begin(), y_.end(), out.begin());
    return;
  }
  if (t == t_prev_) {
    std::copy(y_prev_.begin(), y_prev_.end(), out.begin());
    return;
  }
  const double th = (t - t_prev_) / h;
  const double th1 = 1.0 - th;
  for (std::size_t i = 0; i < n_; ++i)
    out[i] = cont_[0][i] + th * (cont_[1][i] + th1 * (cont_[2][i] + th * (cont_[3][i] + th1 * cont_[4][i])));
}

void Dopri5::integrate_to(double target, std::span<cplx> out) {
  if (target < t_prev_ || (!have_step_ && target < t_))
    throw PreconditionError("integrator: target time " + std::to_string(target) + " lies before the current step");
  if (target > t_bound_) throw RangeError("integrator: target beyond the integration bound");
  const double start = t_;
  std::size_t steps = 0;
  while (t_ < target) {
    if (++steps > opts_.nsteps)
      throw StepLimitError("integrator: exceeded nsteps=" + std::to_string(opts_.nsteps) + " between t=" +
                           std::to_string(start) + " and t=" + std::to_string(target));
    step();
  }
  dense(target, out);
}

std::vector<std::vector<cplx>> integrate(const OdeRhs& rhs, std::span<const cplx> y0, double t0,
                                         std::span<const double> targets, const IntegratorOptions& opts) {
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (targets[i] < (i ? targets[i - 1] : t0))
      throw PreconditionError("integrate: target times must be ascending and >= t0");
  Dopri5 ode(rhs, y0.size(), opts);
  if (!targets.empty()) ode.set_bound(targets.back());
  ode.reset(t0, y0);
  std::vector<std::vector<cplx>> out;
  for (double t : targets) {
    out.emplace_back(y0.size());
    if (t == t0)
      std::copy(y0.begin(), y0.end(), out.back().begin());
    else
      ode.integrate_to(t, out.back());
  }
  return out;
}

std::vector<std::vector<cplx>> propagate_diag(const Qobj& l, std::span<const cplx> y0, double t0,
                                              std::span<const double> targets) {
  const std::size_t n = l.rows();
  if (l.rows() != l.cols() || y0.size() != n) throw DimensionError("propagate_diag: size mismatch");
  Eigen::MatrixXcd m(n, n);
  const auto full = l.full();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) m(Eigen::Index(i), Eigen::Index(j)) = full[j * n + i];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m);
  if (es.info() != Eigen::Success) throw UnsupportedError("propagate_diag: eigendecomposition failed; use rk45");
  const Eigen::MatrixXcd& v = es.eigenvectors();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) < 1e-10 * sv(0))
    throw UnsupportedError("propagate_diag: generator is (nearly) defective; use the rk45_adaptive method");
  Eigen::VectorXcd y(n);
  for (std::size_t i = 0; i < n; ++i) y(Eigen::Index(i)) = y0[i];
  const Eigen::VectorXcd c = v.partialPivLu().solve(y);
  std::vector<std::vector<cplx>> out;
  for (double t : targets) {
    if (t < t0) throw PreconditionError("propagate_diag: target before t0");
    if (t == t0) {
      out.emplace_back(y0.begin(), y0.end());
      continue;
    }
    Eigen::VectorXcd w = c;
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) *= std::exp(es.eigenvalues()(i) * (t - t0));
    const Eigen::VectorXcd r = v * w;
    out.emplace_back(r.data(), r.data() + r.size());
  }
  return out;
}

}  // namespace openq
