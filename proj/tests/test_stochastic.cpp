#include <cmath>

#include "doctest.h"
#include "openq/errors.hpp"
#include "openq/factories.hpp"
#include "openq/solvers/mesolve.hpp"
#include "openq/stochastic/mcsolve.hpp"
#include "openq/stochastic/rng.hpp"
#include "openq/stochastic/smesolve.hpp"

using namespace openq;

namespace {
std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = a + (b - a) * double(i) / double(n - 1);
  return t;
}

// |mc - exact| <= 5 sigma_err at every time, sigma_err = std / sqrt(ntraj)
bool within_5sigma(const MultiTrajResult& r, std::size_t e, const std::vector<cplx>& exact) {
  for (std::size_t k = 0; k < exact.size(); ++k) {
    const double err = r.std_expect[e][k] / std::sqrt(double(r.ntraj_used));
    if (std::abs(r.average_expect[e][k] - exact[k]) > 5 * err + 1e-9) return false;
  }
  return true;
}

McOptions mc_opts(std::size_t ntraj, std::uint64_t seed = 7) {
  McOptions o;
  o.ntraj = ntraj;
  o.seed = seed;
  o.integrator.atol = 1e-10;
  o.integrator.rtol = 1e-8;
  return o;
}
}  // namespace

TEST_CASE("Philox known answers") {
  using B = Philox::Block;
  CHECK(Philox::bijection({0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox::bijection({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox::bijection({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  Philox a(5), b(5), c(6);
  for (int i = 0; i < 10; ++i) CHECK(a() == b());
  CHECK(a() != c());
  CHECK(trajectory_seed(1, 0) != trajectory_seed(1, 1));
  CHECK(trajectory_seed(1, 0) != trajectory_seed(2, 0));
}

TEST_CASE("Wiener increments: mean 0, variance dt, reproducible") {
  const double dt = 0.01;
  const std::size_t n = 20000;
  const auto w = wiener_path(99, 0.0, dt, n, 2);
  for (const auto& ch : w.dw) {
    double m = 0, v = 0;
    for (double x : ch) m += x;
    m /= double(n);
    for (double x : ch) v += (x - m) * (x - m);
    v /= double(n - 1);
    CHECK(std::abs(m) <= 5 * std::sqrt(dt / double(n)));
    CHECK(std::abs(v - dt) <= 5 * dt * std::sqrt(2.0 / double(n)));
  }
  const auto w2 = wiener_path(99, 0.0, dt, n, 2);
  CHECK(w.dw == w2.dw);
  CHECK(w.times.size() == n + 1);
}

TEST_CASE("mcsolve: vanishing rates reproduce sesolve") {
  const auto h = 0.5 * sigmax();
  const auto t = linspace(0, 5, 11);
  auto o = mc_opts(8);
  o.keep_runs_results = true;
  auto r = mcsolve(h, basis(2, 0), t, {QobjEvo(1e-6 * sigmam())}, {sigmaz()}, o);
  SolverOptions so;
  so.integrator = o.integrator;
  auto se = sesolve(h, basis(2, 0), t, {sigmaz()}, so);
  REQUIRE(r.runs_expect.size() == 8);
  for (const auto& run : r.runs_expect)
    for (std::size_t k = 0; k < t.size(); ++k) CHECK(std::abs(run[0][k] - se.expect[0][k]) < 1e-6);
  for (const auto& j : r.jump_times) CHECK(j.empty());
}

TEST_CASE("mcsolve: no-jump survival probability") {
  const double g = 0.4;
  const auto t = linspace(0, 10, 21);
  IntegratorOptions io;
  io.atol = 1e-12;
  io.rtol = 1e-10;
  const auto nn = no_jump_norms(0.5 * sigmaz(), basis(2, 0), t, {QobjEvo(std::sqrt(g) * sigmam())}, io);
  for (std::size_t k = 0; k < t.size(); ++k) CHECK(std::abs(nn[k] - std::exp(-g * t[k])) < 1e-8);
}

TEST_CASE("mcsolve: decaying driven qubit vs mesolve") {
  const double g = 0.5;
  const auto h = 0.3 * sigmax();
  const auto t = linspace(0, 6, 13);
  const std::vector<QobjEvo> c{QobjEvo(std::sqrt(g) * sigmam())};
  const std::vector<Qobj> e{sigmap() * sigmam(), sigmax()};
  SolverOptions so;
  so.integrator.atol = 1e-10;
  so.integrator.rtol = 1e-8;
  auto me = mesolve(h, basis(2, 0), t, c, e, so);

  auto plain = mcsolve(h, basis(2, 0), t, c, e, mc_opts(300));
  CHECK(plain.ntraj_used == 300);
  CHECK(within_5sigma(plain, 0, me.expect[0]));
  CHECK(within_5sigma(plain, 1, me.expect[1]));
  double wsum = 0;
  for (double w : plain.weights) wsum += w;
  CHECK(std::abs(wsum - 1) < 1e-12);

  auto io = mc_opts(300);
  io.improved_sampling = true;
  auto imp = mcsolve(h, basis(2, 0), t, c, e, io);
  CHECK(within_5sigma(imp, 0, me.expect[0]));
  CHECK(imp.jump_times[0].empty());  // the deterministic no-jump run
  for (std::size_t i = 1; i < imp.jump_times.size(); ++i) CHECK(!imp.jump_times[i].empty());
  CHECK(std::abs(imp.weights[0] - imp.no_jump_probability) < 1e-15);
  wsum = 0;
  for (double w : imp.weights) wsum += w;
  CHECK(std::abs(wsum - 1) < 1e-12);

  // both samplers agree with each other within their combined error
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double s = std::hypot(plain.std_expect[0][k] / std::sqrt(300.0), imp.std_expect[0][k] / std::sqrt(300.0));
    CHECK(std::abs(plain.average_expect[0][k] - imp.average_expect[0][k]) <= 5 * s + 1e-9);
  }
}

TEST_CASE("mcsolve: photocurrent matches gamma <sigma+ sigma->") {
  const double g = 1.0;
  const auto t = linspace(0, 3, 7);
  const std::vector<QobjEvo> c{QobjEvo(std::sqrt(g) * sigmam())};
  const std::size_t ntraj = 800;
  auto r = mcsolve(QobjEvo(0.8 * sigmax()), basis(2, 0), t, c, {}, mc_opts(ntraj, 3));
  SolverOptions so;
  auto fine = linspace(0, 3, 601);
  auto me = mesolve(QobjEvo(0.8 * sigmax()), basis(2, 0), fine, c, {sigmap() * sigmam()}, so);
  REQUIRE(r.photocurrent.size() == 1);
  REQUIRE(r.photocurrent[0].size() == t.size() - 1);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    // interval average of gamma P_e from the fine mesolve grid
    double avg = 0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < fine.size(); ++i)
      if (fine[i] >= t[k] && fine[i] <= t[k + 1]) {
        avg += g * me.expect[0][i].real();
        ++cnt;
      }
    avg /= double(cnt);
    const double dt = t[k + 1] - t[k];
    const double sigma = std::sqrt(avg / dt / double(ntraj));  // Poisson counting error
    CHECK(std::abs(r.photocurrent[0][k] - avg) <= 5 * sigma);
  }
}

TEST_CASE("mcsolve: mixed initial state") {
  const double g = 0.6;
  const auto t = linspace(0, 4, 9);
  const auto rho0 = 0.7 * ket2dm(basis(2, 0)) + 0.3 * ket2dm(basis(2, 1));
  auto r = mcsolve(qzero(2), rho0, t, {QobjEvo(std::sqrt(g) * sigmam())}, {sigmap() * sigmam()}, mc_opts(200));
  std::vector<cplx> exact;
  for (double x : t) exact.emplace_back(0.7 * std::exp(-g * x));
  CHECK(within_5sigma(r, 0, exact));
  double w_exc = 0;
  for (std::size_t i = 0; i < r.weights.size(); ++i) w_exc += r.weights[i];
  CHECK(std::abs(w_exc - 1) < 1e-12);
  CHECK(r.ntraj_used == 200);
}

TEST_CASE("mcsolve: serial and parallel maps are bit-identical") {
  const auto t = linspace(0, 5, 11);
  const std::vector<QobjEvo> c{QobjEvo(0.7 * sigmam()), QobjEvo(0.2 * sigmaz())};
  auto o = mc_opts(60, 1234);
  o.map = MapKind::serial;
  o.improved_sampling = true;
  auto s = mcsolve(QobjEvo(0.4 * sigmax()), basis(2, 0), t, c, {sigmaz()}, o);
  o.map = MapKind::parallel;
  auto p = mcsolve(QobjEvo(0.4 * sigmax()), basis(2, 0), t, c, {sigmaz()}, o);
  CHECK(s.average_expect == p.average_expect);
  CHECK(s.jump_times == p.jump_times);
  CHECK(s.seeds == p.seeds);
  // a trajectory does not depend on how many others run
  o.ntraj = 30;
  auto fewer = mcsolve(QobjEvo(0.4 * sigmax()), basis(2, 0), t, c, {sigmaz()}, o);
  for (std::size_t i = 1; i < 30; ++i) CHECK(fewer.jump_times[i] == s.jump_times[i]);
}

TEST_CASE("mcsolve: target_tol stops early at batch boundaries") {
  const auto t = linspace(0, 2, 5);
  auto o = mc_opts(1000);
  o.target_tol = {{0.1, 0.0}};
  auto r = mcsolve(qzero(2), basis(2, 0), t, {QobjEvo(sigmam())}, {sigmaz()}, o);
  CHECK(r.ntraj_used < 1000);
  CHECK(r.ntraj_used % 50 == 0);
  for (std::size_t k = 0; k < t.size(); ++k) CHECK(r.std_expect[0][k] / std::sqrt(double(r.ntraj_used)) <= 0.1);
}

TEST_CASE("mcsolve: errors and closed-system delegation") {
  const auto t = linspace(0, 1, 3);
  auto r = mcsolve(0.5 * sigmax(), basis(2, 0), t, {}, {sigmaz()}, mc_opts(10));
  CHECK(std::abs(r.average_expect[0][2] - std::cos(1.0)) < 1e-5);
  CHECK(!r.warnings.empty());
  CHECK_THROWS_AS(mcsolve(sigmax(), basis(3, 0), t, {QobjEvo(sigmam())}), DimensionError);
  const std::vector<double> bad{0.0, 0.0, 1.0};
  CHECK_THROWS_AS(mcsolve(sigmax(), basis(2, 0), bad, {QobjEvo(sigmam())}), PreconditionError);
  auto o = mc_opts(0);
  CHECK_THROWS_AS(mcsolve(sigmax(), basis(2, 0), t, {QobjEvo(sigmam())}, {}, o), PreconditionError);
}

TEST_CASE("nm_prepare: padding and shift") {
  auto one = nm_prepare({{sigmax(), Coefficient::constant(0.3)}});
  CHECK(!one.padded);
  CHECK(one.alpha == doctest::Approx(1.0));
  CHECK(one.shift(1.0) == 0.0);

  auto p = nm_prepare({{sigmam(), Coefficient::constant(1.0)}});
  REQUIRE(p.padded);
  REQUIRE(p.ops.size() == 2);
  CHECK(data::max_abs_diff(p.ops[1].data(), (basis(2, 1) * basis(2, 1).dag()).data()) < 1e-12);
  Qobj sum = p.ops[0].dag() * p.ops[0] + p.ops[1].dag() * p.ops[1];
  CHECK(data::max_abs_diff(sum.data(), (p.alpha * qeye(2)).data()) < 1e-10);

  auto cosr = Coefficient::function([](double t, const Args&) { return cplx(std::cos(t)); });
  auto q = nm_prepare({{sigmam(), cosr}});
  for (double t : linspace(0, 10, 101)) {
    CHECK(q.shift(t) == doctest::Approx(2 * std::abs(std::min(0.0, std::cos(t)))));
    CHECK(q.shifted_rate(0, t) >= 0.0);
    CHECK(q.shifted_rate(1, t) >= 0.0);
  }
  CHECK_THROWS_AS(nm_prepare({{basis(2, 0), cosr}}), DimensionError);
}

TEST_CASE("nm_mcsolve: positive constant rates follow mcsolve") {
  const double g = 0.5;
  const auto t = linspace(0, 4, 9);
  auto o = mc_opts(40, 21);
  auto mc = mcsolve(QobjEvo(0.3 * sigmax()), basis(2, 0), t, {QobjEvo(std::sqrt(g) * sigmam())}, {sigmaz()}, o);
  NmOptions no;
  no.mc = o;
  auto nm = nm_mcsolve(QobjEvo(0.3 * sigmax()), basis(2, 0), t, {{sigmam(), Coefficient::constant(g)}}, {sigmaz()}, no);
  REQUIRE(nm.jump_times.size() == mc.jump_times.size());
  for (std::size_t i = 0; i < mc.jump_times.size(); ++i) {
    REQUIRE(nm.jump_times[i].size() == mc.jump_times[i].size());
    for (std::size_t j = 0; j < mc.jump_times[i].size(); ++j) {
      CHECK(std::abs(nm.jump_times[i][j] - mc.jump_times[i][j]) < 1e-6);
      CHECK(nm.jump_channels[i][j] == 0);
    }
  }
  for (double mu : nm.trace) CHECK(mu == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t k = 0; k < t.size(); ++k) CHECK(std::abs(nm.average_expect[0][k] - mc.average_expect[0][k]) < 1e-5);
}

TEST_CASE("smesolve: no monitored channel reproduces mesolve") {
  const auto a = destroy(6);
  const auto t = linspace(0, 2, 11);
  const auto h = QobjEvo(a.dag() * a);
  SmeOptions o;
  o.ntraj = 3;
  o.keep_runs_results = true;
  auto r = smesolve(h, coherent(6, 1.0), t, {QobjEvo(0.5 * a)}, {}, {a + a.dag()}, o);
  SolverOptions so;
  so.integrator.atol = 1e-11;
  so.integrator.rtol = 1e-10;
  auto me = mesolve(h, coherent(6, 1.0), t, {QobjEvo(0.5 * a)}, {a + a.dag()}, so);
  for (const auto& run : r.runs_expect)
    for (std::size_t k = 0; k < t.size(); ++k) CHECK(std::abs(run[0][k] - me.expect[0][k]) < 1e-8);
}

TEST_CASE("smesolve: trace, hermiticity, measurement record") {
  const std::size_t n = 8;
  const auto a = destroy(n);
  const auto t = linspace(0, 1, 11);
  SmeOptions o;
  o.ntraj = 40;
  o.seed = 5;
  o.store_states = true;
  o.keep_runs_results = true;
  const auto x = a + a.dag();
  auto r = smesolve(QobjEvo(0.5 * a.dag() * a), coherent(n, 1.0), t, {}, {a}, {x}, o);
  for (const auto& s : r.average_states) {
    CHECK(std::abs(s.tr() - 1.0) < 1e-12);
    CHECK(data::max_abs_diff(s.data(), s.dag().data()) < 1e-12);
  }
  REQUIRE(r.measurement.size() == 40);
  REQUIRE(r.measurement[0].size() == 1);
  REQUIRE(r.measurement[0][0].size() == t.size() - 1);
  // mean record ~ <x> over each interval, noise sd ~ 1/sqrt(dt N)
  const double dt = t[1] - t[0];
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    double m = 0;
    for (const auto& rec : r.measurement) m += rec[0][k];
    m /= 40.0;
    const double ref = 0.5 * (r.average_expect[0][k].real() + r.average_expect[0][k + 1].real());
    CHECK(std::abs(m - ref) <= 5 / std::sqrt(dt * 40.0) + 5 * r.std_expect[0][k] / std::sqrt(40.0));
  }
  // reproducible, independent of the map
  o.map = MapKind::serial;
  auto r2 = smesolve(QobjEvo(0.5 * a.dag() * a), coherent(n, 1.0), t, {}, {a}, {x}, o);
  CHECK(r2.runs_expect == r.runs_expect);
  CHECK(r2.measurement == r.measurement);

  const std::vector<double> uneven{0.0, 0.1, 0.3};
  CHECK_THROWS_AS(smesolve(QobjEvo(a), coherent(n, 1.0), uneven, {}, {a}), PreconditionError);
  o.dt_sub = 0.03;
  CHECK_THROWS_AS(smesolve(QobjEvo(a), coherent(n, 1.0), t, {}, {a}, {}, o), PreconditionError);
}
