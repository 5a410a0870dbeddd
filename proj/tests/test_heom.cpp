#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "doctest.h"
#include "openq/data/kernels.hpp"
#include "openq/errors.hpp"
#include "openq/factories.hpp"
#include "openq/heom/heom.hpp"
#include "openq/solvers/mesolve.hpp"

using namespace openq;

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = a + (b - a) * double(i) / double(n - 1);
  return t;
}

double binom(std::size_t n, std::size_t k) {
  double r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

// Re C(t) max-norm error of a decomposition on [0.1/g, 5/g] against quadrature.
double recon_err(const BosonicEnvironment& env, const ExponentSet& e, double g) {
  double m = 0;
  for (double t : linspace(0.1 / g, 5 / g, 25)) m = std::max(m, std::abs(e.correlation(t) - env.correlation(t)));
  return m;
}

}  // namespace

TEST_CASE("environment: spectral densities and power spectrum") {
  const auto ud = BosonicEnvironment::underdamped(0.5, 0.5, 0.1, 1.5);
  CHECK(ud.spectral_density(1.5) == doctest::Approx(0.25 / (0.1 * 1.5)).epsilon(1e-14));

  const double g = 0.3;
  const auto flat = BosonicEnvironment::custom(0.0, [g](double) { return g / 2; });
  CHECK(flat.power_spectrum(1.7) == doctest::Approx(g));
  CHECK(flat.power_spectrum(-1.7) == 0.0);

  // detailed balance
  for (const auto& env : {BosonicEnvironment::drude_lorentz(0.7, 0.2, 1.1), ud,
                          BosonicEnvironment::ohmic(2.0, 0.05, 3.0, 0.5)}) {
    for (double w : {0.1, 0.9, 2.5, 6.0}) {
      const double r = env.power_spectrum(w) / env.power_spectrum(-w);
      CHECK(r == doctest::Approx(std::exp(w / env.temperature)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(BosonicEnvironment::drude_lorentz(1.0, 0.1, 0.0), PreconditionError);
}

TEST_CASE("environment: quadrature correlation of a Drude-Lorentz bath") {
  // Im C(t) = -lam gamma e^{-gamma t} exactly, at any temperature
  const auto env = BosonicEnvironment::drude_lorentz(1.0, 0.1, 0.5);
  for (double t : {0.2, 1.0, 4.0}) CHECK(env.correlation(t).imag() == doctest::Approx(-0.05 * std::exp(-0.5 * t)).epsilon(1e-7));
  // underdamped at t = 0: Re C(0) = int J coth / pi, compare against a finite-interval Gauss-Kronrod integral
  const auto ud = BosonicEnvironment::underdamped(0.5, 0.5, 0.1, 1.5);
  auto f = [&](double w) { return ud.spectral_density(w) / std::tanh(w / (2 * 0.5)) / M_PI; };
  const double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 1e-12, 1.4, 15, 1e-12) +
                     boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 1.4, 1.6, 15, 1e-12) +
                     boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 1.6, 4000.0, 15, 1e-12);
  // tail beyond 4000: J ~ lam^2 Gamma / w^3
  const double tail = 0.25 * 0.1 / (2 * M_PI * 4000.0 * 4000.0);
  CHECK(ud.correlation(0.0).real() == doctest::Approx(ref + tail).epsilon(1e-7));
}

TEST_CASE("matsubara: structure and convergence against quadrature") {
  const double g = 0.8;
  const auto dl = BosonicEnvironment::drude_lorentz(0.6, 0.3, g);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t nk = 0; nk <= 5; ++nk) {
    const auto e = matsubara_decompose(dl, nk);
    CHECK(e.real.size() == nk + 1);
    CHECK(e.imag.size() == 1);
    for (const auto& x : e.real) CHECK(x.gamma.real() > 0);
    const double err = recon_err(dl, e, g);
    CHECK(err < prev);
    prev = err;
  }
  // residual is the Matsubara tail; a long series closes it
  CHECK(recon_err(dl, matsubara_decompose(dl, 200), g) < 1e-5);

  const auto ud = BosonicEnvironment::underdamped(0.5, 0.5, 0.1, 1.5);
  prev = std::numeric_limits<double>::infinity();
  for (std::size_t nk = 0; nk <= 5; ++nk) {
    const auto e = matsubara_decompose(ud, nk);
    CHECK(e.real.size() == nk + 2);
    CHECK(e.imag.size() == 2);
    for (const auto& x : e.imag) CHECK(x.gamma.real() == doctest::Approx(0.05));
    const double err = recon_err(ud, e, 0.1);
    CHECK(err <= prev);
    prev = err;
  }
  CHECK(prev < 1e-4);

  CHECK_THROWS_AS(matsubara_decompose(BosonicEnvironment::drude_lorentz(0.0, 0.1, 1), 2), UnsupportedError);
  CHECK_THROWS_AS(matsubara_decompose(BosonicEnvironment::ohmic(1.0, 0.1, 1), 2), UnsupportedError);
}

TEST_CASE("matsubara: combine merges equal rates without changing C(t)") {
  ExponentSet e;
  e.real = {{0.3, 1.0}, {0.2, 1.0}, {cplx(0.1, 0.1), cplx(2.0, 1.0)}};
  e.imag = {{-0.5, 1.0}};
  const auto c = combine(e);
  CHECK(c.real.size() == 2);
  CHECK(c.imag.size() == 1);
  for (double t : {0.0, 0.4, 3.0}) CHECK(std::abs(c.correlation(t) - e.correlation(t)) < 1e-15);
}

TEST_CASE("ado index set: counts, ordering, neighbour maps") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t n = 1 + rng() % 5, nc = rng() % 5;
    AdoIndexSet idx(n, nc);
    CHECK(double(idx.size()) == binom(nc + n, n));
    CHECK(idx.level(0) == 0);
    for (std::size_t i = 1; i < idx.size(); ++i) {
      CHECK(idx.level(i) >= idx.level(i - 1));
      if (idx.level(i) == idx.level(i - 1)) CHECK(idx.label(i - 1) < idx.label(i));
      CHECK(idx.find(idx.label(i)) == i);
    }
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t k = 0; k < n; ++k) {
        if (idx.up(i, k) != AdoIndexSet::none) CHECK(idx.down(idx.up(i, k), k) == i);
        CHECK((idx.up(i, k) == AdoIndexSet::none) == (idx.level(i) == nc));
        CHECK((idx.down(i, k) == AdoIndexSet::none) == (idx.label(i)[k] == 0));
      }
  }
}

TEST_CASE("hierarchy: cutoff zero, dimensions, first derivative") {
  const Qobj h = 0.5 * sigmaz() + 0.3 * sigmax();
  const auto env = BosonicEnvironment::drude_lorentz(1.0, 0.1, 1.0);
  const auto exps = matsubara_decompose(env, 2);
  auto hy0 = hierarchy_build(h, sigmaz(), exps, 0);
  const auto l = cplx(0, -1) * (spre(h) - spost(h));
  CHECK(data::max_abs_diff(hy0.generator, l.data()) < 1e-15);

  auto hy = hierarchy_build(h, sigmaz(), exps, 3);
  CHECK(hy.generator.rows() == 4 * std::size_t(binom(3 + 4, 4)));
  // (rho0, 0, 0, ...) -> level-0 derivative is just -i[H, rho0]
  const auto rho0 = ket2dm((basis(2, 0) + basis(2, 1)).unit());
  std::vector<cplx> y(hy.generator.rows()), dy(y.size());
  const auto v = vec_of(rho0);
  std::copy(v.begin(), v.end(), y.begin());
  data::matvec(hy.generator, y, dy);
  std::vector<cplx> ref(4);
  data::matvec(l.data(), v, ref);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(dy[i] - ref[i]) < 1e-15);

  CHECK_THROWS_AS(hierarchy_build(h, sigmap(), exps, 2), PreconditionError);
  CHECK_THROWS_AS(hierarchy_build(h, qeye(3), exps, 2), DimensionError);
  ExponentSet bad;
  bad.real = {{1.0, -0.1}};
  CHECK_THROWS_AS(hierarchy_build(h, sigmaz(), bad, 2), PreconditionError);
}

TEST_CASE("heomsolve: pure dephasing matches the analytic decoherence factor") {
  const double w0 = 1.0;
  const auto env = BosonicEnvironment::drude_lorentz(1.0, 0.05, 0.5);
  const auto exps = matsubara_decompose(env, 0);  // two exponents
  REQUIRE(exps.size() == 2);
  const auto t = linspace(0, 20, 41);
  const auto psi = (basis(2, 0) + basis(2, 1)).unit();
  HeomOptions o;
  o.integrator.atol = 1e-11;
  o.integrator.rtol = 1e-10;
  o.integrator.nsteps = 100000;
  o.store_states = true;
  auto r = heomsolve(0.5 * w0 * sigmaz(), {{sigmaz(), exps}}, psi, t, 10, {}, o);
  REQUIRE(r.states.size() == t.size());

  // independent: numerical double integral of Re C
  auto re_c = [&](double s) { return exps.correlation(s).real(); };
  for (std::size_t i = 0; i < t.size(); ++i) {
    // int_0^t (t - s) Re C(s) ds = int_0^t dtau int_0^tau Re C
    auto inner = [&](double s) { return (t[i] - s) * re_c(s); };
    const double phi = t[i] == 0 ? 0.0 : boost::math::quadrature::gauss_kronrod<double, 31>::integrate(inner, 0.0, t[i], 10, 1e-13);
    const cplx expect = 0.5 * std::exp(cplx(0, -w0 * t[i])) * std::exp(-4 * phi);
    const cplx got = r.states[i].data().at(0, 1);
    CHECK(std::abs(got - expect) < 1e-4);
    CHECK(std::abs(r.states[i].tr() - 1.0) < 1e-8);
  }
  // the wrong bracket on the real term would leave the coherence undamped at this order
  CHECK(std::abs(r.states.back().data().at(0, 1)) < 0.45);
  CHECK(r.ado(0).dims() == sigmaz().dims());
  CHECK_THROWS_AS(r.ado(r.hierarchy->index.size()), RangeError);
}

TEST_CASE("heomsolve: weak coupling agrees with the Born-Markov master equation") {
  const double delta = 1.0;
  const auto env = BosonicEnvironment::drude_lorentz(10 * delta, 0.005 * delta, 5 * delta);
  const auto bath = HeomBath::from_env(env, sigmax(), 3);
  const Qobj h = 0.5 * delta * sigmaz();
  const auto t = linspace(0, 40, 41);
  auto r = heomsolve(h, {bath}, basis(2, 0), t, 4, {sigmaz()});
  const double down = env.power_spectrum(delta), up = env.power_spectrum(-delta);
  auto m = mesolve(h, ket2dm(basis(2, 0)), t, {std::sqrt(down) * sigmam(), std::sqrt(up) * sigmap()}, {sigmaz()});
  double worst = 0;
  for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, std::abs(r.expect[0][i] - m.expect[0][i]));
  CHECK(worst < 0.02);
  CHECK(m.expect[0].back().real() < 0.5);  // something actually happened
}

TEST_CASE("heom cutoff hint") {
  ExponentSet e;
  e.real = {{1.0, 1.0}};
  CHECK(heom_cutoff_hint(e, 3.2) == 4);
  e.imag = {{1.0, 0.5}};
  CHECK(heom_cutoff_hint(e, 3.2) == 7);
  e.imag[0].gamma = 0.25;
  CHECK(heom_cutoff_hint(e, 3.2) == 13);
  CHECK_THROWS_AS(heom_cutoff_hint(ExponentSet{}, 1.0), PreconditionError);
  CHECK_THROWS_AS(heom_cutoff_hint(e, 0.0), PreconditionError);
}
