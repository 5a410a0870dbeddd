#include <cmath>
#include <random>

#include "doctest.h"
#include "openq/errors.hpp"
#include "openq/factories.hpp"
#include "openq/odeint.hpp"
#include "oracle.hpp"

using namespace openq;

namespace {
OdeRhs decay(double rate = 1.0) {
  return [rate](double, std::span<const cplx> y, std::span<cplx> dy) {
    for (std::size_t i = 0; i < y.size(); ++i) dy[i] = -rate * y[i];
  };
}

// Narrow Gaussian kick centred at t = 0.5.
OdeRhs pulse() {
  return [](double t, std::span<const cplx>, std::span<cplx> dy) {
    const double w = 1e-3;
    dy[0] = std::exp(-0.5 * std::pow((t - 0.5) / w, 2)) / (w * std::sqrt(2 * M_PI));
  };
}
}  // namespace

TEST_CASE("integrate: exponential decay") {
  std::vector<cplx> y0{1.0};
  std::vector<double> ts{0.5, 1.0};
  auto out = integrate(decay(), y0, 0.0, ts);
  CHECK(std::abs(out[1][0] - std::exp(-1.0)) < 1e-7);
  CHECK(std::abs(out[0][0] - std::exp(-0.5)) < 1e-7);
}

TEST_CASE("integrate: oscillator keeps unit modulus over 100 periods") {
  const double w = 2.0;
  OdeRhs rhs = [w](double, std::span<const cplx> y, std::span<cplx> dy) { dy[0] = cplx(0, w) * y[0]; };
  std::vector<cplx> y0{1.0};
  std::vector<double> ts;
  for (int k = 1; k <= 100; ++k) ts.push_back(k * 2 * M_PI / w);
  IntegratorOptions o;
  o.atol = 1e-10;
  o.rtol = 1e-10;
  auto out = integrate(rhs, y0, 0.0, ts, o);
  double worst = 0;
  for (const auto& y : out) worst = std::max(worst, std::abs(std::abs(y[0]) - 1.0));
  CHECK(worst < 1e-7);
}

TEST_CASE("integrate: a short pulse is skipped without max_step") {
  std::vector<cplx> y0{0.0};
  std::vector<double> ts{1.0};
  auto coarse = integrate(pulse(), y0, 0.0, ts);
  IntegratorOptions o;
  o.max_step = 1e-4;
  o.nsteps = 100000;
  auto fine = integrate(pulse(), y0, 0.0, ts, o);
  CHECK(std::abs(fine[0][0] - 1.0) < 1e-3);
  CHECK(std::abs(coarse[0][0] - fine[0][0]) > 1e-3);
}

TEST_CASE("integrate: tighter tolerances reduce the error proportionally") {
  // Global error scales like the tolerance, so one halving gives ~2x with
  // step-pattern noise; two halvings must clear 2x everywhere.
  std::vector<cplx> y0{1.0};
  std::vector<double> ts{5.0};
  auto err = [&](double tol) {
    IntegratorOptions o;
    o.atol = tol;
    o.rtol = tol;
    return std::abs(integrate(decay(), y0, 0.0, ts, o)[0][0] - std::exp(-5.0));
  };
  for (double tol = 1e-4; tol > 1e-9; tol /= 2) CHECK(err(tol / 4) <= err(tol) / 2);
  CHECK(err(1e-9) < err(1e-6) / 300);
}

TEST_CASE("integrate: errors") {
  std::vector<cplx> y0{1.0};
  std::vector<double> ts{100.0};
  IntegratorOptions o;
  o.nsteps = 3;
  o.max_step = 0.1;
  CHECK_THROWS_AS(integrate(decay(), y0, 0.0, ts, o), StepLimitError);
  try {
    integrate(decay(), y0, 0.0, ts, o);
  } catch (const StepLimitError& e) {
    CHECK(std::string(e.what()).find("100") != std::string::npos);
  }
  IntegratorOptions bad;
  bad.atol = -1;
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  std::vector<double> descending{1.0, 0.5};
  CHECK_THROWS_AS(integrate(decay(), y0, 0.0, descending), PreconditionError);
  // finite-time blow-up y' = y^2 forces the step size to underflow
  OdeRhs blow = [](double, std::span<const cplx> y, std::span<cplx> dy) { dy[0] = y[0] * y[0]; };
  std::vector<double> past{2.0};
  IntegratorOptions big;
  big.nsteps = 1000000;
  CHECK_THROWS_AS(integrate(blow, y0, 0.0, past, big), StiffnessError);
}

TEST_CASE("integrate: deterministic and dense output is consistent") {
  std::mt19937_64 rng(1);
  auto a = oracle::to_dm(oracle::random(rng, 5, 5, 1.0), Format::CSR);
  OdeRhs rhs = [&a](double t, std::span<const cplx> y, std::span<cplx> dy) {
    data::matvec(a, y, dy, cplx(0, std::cos(t)));
  };
  std::vector<cplx> y0{1, 0, 0, 0, 0};
  std::vector<double> ts{0.0, 0.3, 1.7, 2.0};
  auto r1 = integrate(rhs, y0, 0.0, ts);
  auto r2 = integrate(rhs, y0, 0.0, ts);
  CHECK(r1 == r2);
  CHECK(r1[0] == y0);

  Dopri5 s(rhs, 5);
  s.reset(0.0, y0);
  s.step();
  std::vector<cplx> out(5);
  s.dense(s.t(), out);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(out[i] - s.y()[i]) <= 1e-12 * std::max(1.0, std::abs(s.y()[i])));
  s.dense(s.t_prev(), out);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(out[i] - y0[i]) <= 1e-12);
}

TEST_CASE("integrate: bound is never crossed") {
  double latest = 0;
  OdeRhs rhs = [&latest](double t, std::span<const cplx> y, std::span<cplx> dy) {
    latest = std::max(latest, t);
    dy[0] = -y[0];
  };
  std::vector<cplx> y0{1.0};
  std::vector<double> ts{0.37};
  integrate(rhs, y0, 0.0, ts);
  CHECK(latest <= 0.37);
}

TEST_CASE("propagate_diag") {
  Qobj l(data::DataMatrix::from_triplets(2, 2, {{0, 0, -1.0}, {1, 1, -2.0}}, Format::CSR));
  std::vector<cplx> y0{1.0, 1.0};
  std::vector<double> ts{0.0, 1.0, 3.0};
  auto out = propagate_diag(l, y0, 0.0, ts);
  CHECK(out[0] == y0);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    CHECK(std::abs(out[k][0] - std::exp(-ts[k])) < 1e-10);
    CHECK(std::abs(out[k][1] - std::exp(-2 * ts[k])) < 1e-10);
  }

  // random Liouvillian on a qubit: cross-check against rk45
  std::mt19937_64 rng(3);
  auto h = Qobj(oracle::to_dm(oracle::random_herm(rng, 2), Format::Dense));
  auto c = Qobj(oracle::to_dm(oracle::random(rng, 2, 2, 1.0), Format::Dense));
  auto lv = liouvillian(h, {c});
  std::vector<cplx> rho0{0.7, cplx(0.1, 0.2), cplx(0.1, -0.2), 0.3};
  std::vector<double> tt{0.5, 1.0, 2.0};
  auto d = propagate_diag(lv, rho0, 0.0, tt);
  OdeRhs rhs = [&lv](double, std::span<const cplx> y, std::span<cplx> dy) { data::matvec(lv.data(), y, dy); };
  IntegratorOptions o;
  o.atol = 1e-10;
  o.rtol = 1e-10;
  auto r = integrate(rhs, rho0, 0.0, tt, o);
  for (std::size_t k = 0; k < tt.size(); ++k)
    for (int i = 0; i < 4; ++i) CHECK(std::abs(d[k][i] - r[k][i]) < 1e-6);

  // a Jordan block is defective
  Qobj jb(data::DataMatrix::from_triplets(2, 2, {{0, 0, -1.0}, {0, 1, 1.0}, {1, 1, -1.0}}, Format::CSR));
  CHECK_THROWS_AS(propagate_diag(jb, y0, 0.0, ts), UnsupportedError);
}

TEST_CASE("Dopri5: restarting near the bound never evaluates past it") {
  double latest = 0;
  OdeRhs rhs = [&](double t, std::span<const cplx> y, std::span<cplx> dy) {
    latest = std::max(latest, t);
    dy[0] = -1e-3 * y[0];  // slow: the step heuristic would like a huge first step
  };
  IntegratorOptions o;
  o.atol = 1e-10;
  o.rtol = 1e-9;
  Dopri5 s(rhs, 1);
  s.set_bound(15.0);
  const std::vector<cplx> y0{1.0};
  s.reset(14.9, y0);
  while (s.step()) {
  }
  CHECK(s.t() == 15.0);
  CHECK(latest <= 15.0);
  s.reset(15.0, y0);  // zero room left
  CHECK_FALSE(s.step());
  CHECK(latest <= 15.0);
}
