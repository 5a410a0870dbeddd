#include <cmath>
#include <random>

#include "doctest.h"
#include "openq/errors.hpp"
#include "openq/factories.hpp"
#include "openq/tdep.hpp"
#include "oracle.hpp"

using namespace openq;

namespace {
double diff(const Qobj& a, const Qobj& b) { return data::max_abs_diff(a.data(), b.data()); }

Coefficient cosine() {
  return Coefficient::function([](double t, const Args&) { return cplx(std::cos(t)); });
}
}  // namespace

TEST_CASE("coefficients") {
  CHECK(cosine()(0.0) == cplx(1));
  CHECK(Coefficient::constant(cplx(2, 1))(7.0) == cplx(2, 1));
  auto scaled = Coefficient::function([](double t, const Args& a) { return a.at("w") * t; });
  Args args{{"w", 3.0}};
  CHECK(scaled(2.0, args) == cplx(6));
  CHECK((cplx(0, 1) * cosine()).conj()(0.0) == cplx(0, -1));
  CHECK((cosine() * cosine())(M_PI) == cplx(1));
}

TEST_CASE("spline interpolates sin") {
  std::vector<double> t(101);
  std::vector<cplx> y(101);
  for (int i = 0; i <= 100; ++i) {
    t[i] = 2 * M_PI * i / 100.0;
    y[i] = std::sin(t[i]);
  }
  auto c = Coefficient::spline(t, y);
  for (int i = 0; i <= 100; ++i) CHECK(c(t[i]) == y[i]);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const double m = 0.5 * (t[i] + t[i + 1]);
    worst = std::max(worst, std::abs(c(m) - std::sin(m)));
  }
  CHECK(worst <= 1e-6);
  CHECK_THROWS_AS(c(-0.01), RangeError);
  CHECK_THROWS_AS(c(2 * M_PI + 0.01), RangeError);
  CHECK_THROWS_AS(CubicSpline({0, 0}, {1, 1}), PreconditionError);
  CHECK_THROWS_AS(CubicSpline({0}, {1}), PreconditionError);
}

TEST_CASE("spline is C2 at interior knots") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> t{0.0};
  std::vector<cplx> y{u(rng)};
  for (int i = 1; i < 12; ++i) {
    t.push_back(t.back() + 0.2 + 0.5 * (u(rng) + 1));
    y.emplace_back(u(rng), u(rng));
  }
  CubicSpline s(t, y);
  CHECK(s.second_derivative(0) == cplx(0));
  CHECK(s.second_derivative(11) == cplx(0));
  // second derivative of each piece at the shared knot via finite differences of the cubic
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    const double h = 1e-4;
    auto left = (s(t[i]) - 2.0 * s(t[i] - h) + s(t[i] - 2 * h)) / (h * h);
    auto right = (s(t[i] + 2 * h) - 2.0 * s(t[i] + h) + s(t[i])) / (h * h);
    const double scale = std::max(1.0, std::abs(s.second_derivative(i)));
    CHECK(std::abs(left - right) / scale < 1e-2);  // finite differences of a cubic: O(h) drift only
  }
  // exact second-derivative continuity is built in: both pieces share M_i
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
    auto lhs = h0 * s.second_derivative(i - 1) + 2 * (h0 + h1) * s.second_derivative(i) + h1 * s.second_derivative(i + 1);
    auto rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("QobjEvo evaluation") {
  auto h0 = sigmaz(), h1 = sigmax();
  QobjEvo c(h0);
  CHECK(c.is_constant());
  CHECK(diff(c(3.7), h0) == 0.0);

  auto qe = qevo_from_list({h0, EvoTerm{h1, cosine()}});
  CHECK_FALSE(qe.is_constant());
  CHECK(diff(qe(M_PI), h0 - h1) < 1e-15);
  CHECK(diff(qe(0.3), h0 + std::cos(0.3) * h1) < 1e-15);
  CHECK_THROWS_AS(qevo_from_list({h0, EvoTerm{qeye(3), cosine()}}), DimensionError);

  std::vector<double> t{0, 1, 2, 3};
  std::vector<cplx> y{0, 1, 4, 9};
  auto arr = qevo_from_list({h0, EvoTerm{h1, Coefficient::spline(t, y)}});
  CHECK(diff(arr(2.0), h0 + 4.0 * h1) < 1e-15);
  CHECK_THROWS_AS(arr(3.5), RangeError);

  std::mt19937_64 rng(8);
  std::vector<Qobj> ops;
  for (int k = 0; k < 3; ++k) ops.emplace_back(oracle::to_dm(oracle::random(rng, 3, 3), Format::CSR));
  auto f1 = Coefficient::function([](double s, const Args&) { return cplx(std::sin(s), s); });
  auto f2 = Coefficient::function([](double s, const Args&) { return std::exp(cplx(0, s)); });
  QobjEvo r({{ops[0], Coefficient::constant(2.0)}, {ops[1], f1}, {ops[2], f2}});
  for (double s : {0.0, 0.4, 2.5}) {
    auto ref = oracle::add(oracle::add(oracle::from(ops[0].data()), oracle::from(ops[1].data()), cplx(std::sin(s), s)),
                           oracle::from(ops[2].data()), std::exp(cplx(0, s)));
    ref = oracle::add(ref, oracle::from(ops[0].data()));  // ops[0] carries factor 2
    CHECK(oracle::maxdiff(r(s).data(), ref) < 1e-14);

    std::vector<cplx> x{1.0, cplx(0, 1), -0.5}, yv(3);
    r.matvec(s, x, yv);
    auto dense = data::matvec(r(s).data(), x);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(yv[i] - dense[i]) < 1e-14);
  }
}

TEST_CASE("QobjEvo arithmetic is pointwise") {
  std::mt19937_64 rng(10);
  auto a0 = Qobj(oracle::to_dm(oracle::random(rng, 2, 2), Format::CSR));
  auto a1 = Qobj(oracle::to_dm(oracle::random(rng, 2, 2), Format::Dense));
  auto b1 = Qobj(oracle::to_dm(oracle::random(rng, 2, 2), Format::Dia));
  auto f = Coefficient::function([](double t, const Args&) { return cplx(t, 1.0 - t * t); });
  QobjEvo a({{a0, Coefficient::constant(1.0)}, {a1, cosine()}});
  QobjEvo b(b1, f);
  for (double t : {0.0, 0.7, 1.9}) {
    CHECK(diff((a + b)(t), a(t) + b(t)) < 1e-13);
    CHECK(diff((a - b)(t), a(t) - b(t)) < 1e-13);
    CHECK(diff((a * b)(t), a(t) * b(t)) < 1e-13);
    CHECK(diff(a.dag().dag()(t), a(t)) < 1e-13);
    CHECK(diff(a.dag()(t), a(t).dag()) < 1e-13);
    CHECK(diff((cplx(2) * a)(t), 2.0 * a(t)) < 1e-13);
    CHECK(diff((a * b + cplx(0, 1) * a.dag())(t), a(t) * b(t) + cplx(0, 1) * a(t).dag()) < 1e-13);
  }
  CHECK_THROWS_AS(a + QobjEvo(qeye(3)), DimensionError);
}

TEST_CASE("qevo_liouvillian") {
  auto h0 = sigmaz(), h1 = sigmax();
  auto c = std::sqrt(0.2) * sigmam();
  auto l = qevo_liouvillian(QobjEvo(h0), {QobjEvo(c)});
  CHECK(diff(l(1.0), liouvillian(h0, {c})) < 1e-15);

  auto h = qevo_from_list({h0, EvoTerm{h1, cosine()}});
  auto lt = qevo_liouvillian(h, {QobjEvo(c)});
  for (double t : {0.0, 1.3, 4.0}) CHECK(diff(lt(t), liouvillian(h(t), {c})) < 1e-14);

  // D[f(t) a] = |f(t)|^2 D[a]
  auto f = Coefficient::function([](double t, const Args&) { return cplx(std::cos(t), 0.5 * t); });
  auto ld = qevo_liouvillian(std::nullopt, {QobjEvo(destroy(3), f)});
  for (double t : {0.2, 1.1}) {
    const double w = std::norm(f(t));
    CHECK(diff(ld(t), w * lindblad_dissipator(destroy(3))) < 1e-14);
  }
  // mixed constant + time-dependent collapse operator gives cross terms
  auto mixed = qevo_from_list({sigmam(), EvoTerm{sigmaz(), f}});
  auto lm = qevo_liouvillian(std::nullopt, {mixed});
  for (double t : {0.0, 0.9}) CHECK(diff(lm(t), lindblad_dissipator(mixed(t))) < 1e-14);
}
