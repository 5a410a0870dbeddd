#include <random>

#include "doctest.h"
#include "openq/data/kernels.hpp"
#include "openq/enr.hpp"
#include "openq/errors.hpp"
#include "openq/factories.hpp"
#include "openq/solvers/mesolve.hpp"

using namespace openq;

namespace {

// Exhaustive filter over the full product space.
std::vector<std::vector<std::size_t>> brute_force(const std::vector<std::size_t>& dims, std::size_t n_exc) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> occ(dims.size(), 0);
  for (;;) {
    std::size_t s = 0;
    for (auto x : occ) s += x;
    if (s <= n_exc) out.push_back(occ);
    std::size_t i = dims.size();
    while (i > 0) {
      --i;
      if (++occ[i] < dims[i]) break;
      occ[i] = 0;
      if (i == 0) return out;
    }
  }
}

}  // namespace

TEST_CASE("enr: enumeration matches brute force") {
  auto sp = enr_space({2, 2}, 1);
  CHECK(sp->states == std::vector<std::vector<std::size_t>>{{0, 0}, {0, 1}, {1, 0}});
  CHECK(enr_space({4}, 3)->size() == 4);
  CHECK(enr_space({3, 3, 3}, 2)->size() == brute_force({3, 3, 3}, 2).size());

  std::mt19937 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::size_t> dims(1 + rng() % 4);
    for (auto& d : dims) d = 1 + rng() % 5;
    const std::size_t n = rng() % 6;
    auto s = enr_space(dims, n);
    auto ref = brute_force(dims, n);
    CHECK(s->size() == ref.size());
    for (std::size_t i = 0; i < s->size(); ++i) CHECK(s->index.at(s->states[i]) == i);
    CHECK(s->states.front() == std::vector<std::size_t>(dims.size(), 0));
  }
}

TEST_CASE("enr: ladder operators on the restricted space") {
  auto a = enr_destroy({2, 2}, 1);
  // index 2 is (1,0)
  const auto first = enr_fock({2, 2}, 1, {0, 0}) * enr_fock({2, 2}, 1, {1, 0}).dag();
  CHECK(data::max_abs_diff(a[0].data(), first.data()) < 1e-15);
  for (const auto& op : a) CHECK((op * enr_fock({2, 2}, 1, {0, 0})).norm() == 0.0);
  // [a0, a1^dag] != 0 here, unlike the full space
  const auto c = a[0] * a[1].dag() - a[1].dag() * a[0];
  CHECK(c.norm() > 0.5);
  CHECK(enr_identity({3, 2, 4}, 2).tr().real() == doctest::Approx(double(enr_space({3, 2, 4}, 2)->size())));
  CHECK_THROWS_AS(enr_fock({2, 2}, 1, {1, 1}), RangeError);
}

TEST_CASE("enr: single-excitation Jaynes-Cummings equals the full space") {
  const std::size_t nc = 6;
  const double wc = 1.0, wa = 0.9, g = 0.07;
  auto e = enr_destroy({2, nc}, 1);
  const auto& sm = e[0];
  const auto& a = e[1];
  const Qobj h_enr = wa * sm.dag() * sm + wc * a.dag() * a + g * (a.dag() * sm + sm.dag() * a);
  const Qobj psi_enr = enr_fock({2, nc}, 1, {1, 0});

  const Qobj smf = tensor({destroy(2), qeye(nc)}), af = tensor({qeye(2), destroy(nc)});
  const Qobj h_full = wa * smf.dag() * smf + wc * af.dag() * af + g * (af.dag() * smf + smf.dag() * af);
  const Qobj psi_full = tensor({basis(2, 1), basis(nc, 0)});

  std::vector<double> t(51);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 2.0 * double(i);
  SolverOptions o;
  o.integrator.atol = 1e-14;
  o.integrator.rtol = 1e-13;
  o.integrator.nsteps = 1000000;
  auto r1 = sesolve(h_enr, psi_enr, t, {sm.dag() * sm, a.dag() * a}, o);
  auto r2 = sesolve(h_full, psi_full, t, {smf.dag() * smf, af.dag() * af}, o);
  CHECK(enr_space({2, nc}, 1)->size() == 3);
  double worst = 0;
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, std::abs(r1.expect[k][i] - r2.expect[k][i]));
  CHECK(worst < 1e-10);
  // vacuum Rabi oscillation actually moved the excitation
  double peak = 0;
  for (auto v : r1.expect[1]) peak = std::max(peak, v.real());
  CHECK(peak > 0.5);
}
