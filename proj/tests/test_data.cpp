#include <cmath>
#include <random>

#include "doctest.h"
#include "openq/data/data_matrix.hpp"
#include "openq/data/kernels.hpp"
#include "openq/data/linalg.hpp"
#include "openq/errors.hpp"
#include "oracle.hpp"

using namespace openq;
using namespace openq::data;
using oracle::Mat;

namespace {
const Format kFormats[] = {Format::Dense, Format::CSR, Format::Dia};
const cplx I{0, 1};

Mat sx() { return {{0, 1}, {1, 0}}; }
Mat sy() { return {{0, -I}, {I, 0}}; }
Mat sz() { return {{1, 0}, {0, -1}}; }
}  // namespace

TEST_CASE("convert: sigma-z to CSR keeps two stored values") {
  auto m = oracle::to_dm(sz(), Format::Dense);
  auto c = convert(m, Format::CSR);
  CHECK(c.format() == Format::CSR);
  CHECK(c.stored() == 2);
  CHECK(c.at(0, 0) == cplx(1));
  CHECK(c.at(1, 1) == cplx(-1));
}

TEST_CASE("convert: round trips are exact between every pair of formats") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t r = 1 + rng() % 7, c = 1 + rng() % 7;
    const Mat a = oracle::random(rng, r, c);
    for (Format f : kFormats)
      for (Format g : kFormats) {
        auto m = convert(oracle::to_dm(a, f), g);
        CHECK(m.format() == g);
        CHECK(oracle::maxdiff(m, a) == 0.0);
        CHECK(oracle::maxdiff(convert(m, f), a) == 0.0);
      }
  }
}

TEST_CASE("convert: tridiagonal matrix has three diagonals") {
  Mat a = oracle::zeros(4, 4);
  for (int i = 0; i < 4; ++i) {
    a[i][i] = 2;
    if (i > 0) a[i][i - 1] = -1;
    if (i < 3) a[i][i + 1] = -1;
  }
  auto d = convert(oracle::to_dm(a, Format::Dense), Format::Dia);
  CHECK(d.dia().offsets == std::vector<std::ptrdiff_t>{-1, 0, 1});
}

TEST_CASE("construction validates CSR and Dia invariants") {
  CHECK_THROWS_AS(DataMatrix::from_csr(2, 2, CsrData{{0, 1}, {0}, {1.0}}), DimensionError);
  CHECK_THROWS_AS(DataMatrix::from_csr(1, 3, CsrData{{0, 2}, {2, 1}, {1.0, 1.0}}), DimensionError);
  CHECK_THROWS_AS(DataMatrix::from_dia(2, 2, DiaData{{1, 0}, std::vector<cplx>(4)}), DimensionError);
  CHECK_THROWS_AS(DataMatrix::from_dense(2, 2, std::vector<cplx>(3)), DimensionError);
}

TEST_CASE("tidyup drops small entries") {
  Mat a = {{1, 1e-16}, {0, 2}};
  for (Format f : kFormats) {
    auto t = tidyup(oracle::to_dm(a, f));
    CHECK(t.at(0, 1) == cplx(0));
    CHECK(t.at(1, 1) == cplx(2));
  }
  CHECK(tidyup(oracle::to_dm(a, Format::CSR)).stored() == 2);
}

TEST_CASE("add: identities and mixed-format sums") {
  std::mt19937_64 rng(1);
  Mat a = oracle::random(rng, 3, 3), b = oracle::random(rng, 3, 3);
  CHECK(oracle::maxdiff(add(oracle::to_dm(a, Format::CSR), oracle::to_dm(b, Format::Dia), 0.0), a) == 0.0);
  auto two = add(oracle::to_dm(sz(), Format::CSR), oracle::to_dm(sz(), Format::Dense));
  CHECK(two.format() == Format::Dense);
  CHECK(oracle::maxdiff(two, oracle::add(sz(), sz())) == 0.0);
  auto s = add(oracle::to_dm(sx(), Format::Dia), oracle::to_dm(sy(), Format::CSR));
  CHECK(s.format() == Format::CSR);
  CHECK(oracle::maxdiff(s, oracle::add(sx(), sy())) < 1e-15);
  CHECK_THROWS_AS(add(DataMatrix::zeros(2, 2), DataMatrix::zeros(2, 3)), DimensionError);
}

TEST_CASE("promotion order is Dense > CSR > Dia") {
  CHECK(promote(Format::Dia, Format::CSR) == Format::CSR);
  CHECK(promote(Format::Dense, Format::Dia) == Format::Dense);
  CHECK(promote(Format::Dia, Format::Dia) == Format::Dia);
}

TEST_CASE("matmul: Pauli products") {
  auto x = oracle::to_dm(sx(), Format::CSR);
  auto y = oracle::to_dm(sy(), Format::Dense);
  CHECK(oracle::maxdiff(matmul(x, x), oracle::eye(2)) == 0.0);
  Mat isz = sz();
  for (auto& r : isz)
    for (auto& v : r) v *= I;
  CHECK(oracle::maxdiff(matmul(x, y), isz) < 1e-15);
  CHECK_THROWS_AS(matmul(DataMatrix::zeros(2, 3), DataMatrix::zeros(2, 3)), DimensionError);
}

TEST_CASE("matmul: CSR times dense vector matches oracle") {
  std::mt19937_64 rng(3);
  Mat a = oracle::random(rng, 8, 8), v = oracle::random(rng, 8, 1, 1.0);
  auto r = matmul(oracle::to_dm(a, Format::CSR), oracle::to_dm(v, Format::Dense));
  CHECK(oracle::maxdiff(r, oracle::mul(a, v)) < 1e-14);
}

TEST_CASE("kron: identities and shape law") {
  auto i2 = DataMatrix::identity(2);
  CHECK(oracle::maxdiff(kron(i2, i2), oracle::eye(4)) == 0.0);
  auto zz = kron(oracle::to_dm(sz(), Format::CSR), oracle::to_dm(sz(), Format::CSR));
  for (int i = 0; i < 4; ++i) CHECK(zz.at(i, i) == cplx(i == 0 || i == 3 ? 1 : -1));
  std::mt19937_64 rng(5);
  auto k = kron(oracle::to_dm(oracle::random(rng, 2, 3), Format::Dia), oracle::to_dm(oracle::random(rng, 4, 1), Format::Dense));
  CHECK(k.rows() == 8);
  CHECK(k.cols() == 3);
}

TEST_CASE("unary: involutions") {
  std::mt19937_64 rng(11);
  for (Format f : kFormats) {
    Mat a = oracle::random(rng, 3, 5);
    auto m = oracle::to_dm(a, f);
    CHECK(oracle::maxdiff(adjoint(adjoint(m)), a) == 0.0);
    CHECK(oracle::maxdiff(adjoint(m), oracle::dag(a)) == 0.0);
    CHECK(oracle::maxdiff(transpose(m), oracle::from(conj(adjoint(m)))) == 0.0);
  }
  // adjoint of the ladder operator
  Mat a3 = {{0, 1, 0}, {0, 0, std::sqrt(2.0)}, {0, 0, 0}};
  CHECK(oracle::maxdiff(adjoint(oracle::to_dm(a3, Format::Dia)), oracle::dag(a3)) == 0.0);
}

TEST_CASE("trace") {
  CHECK(trace(oracle::to_dm(sz(), Format::Dia)) == cplx(0));
  CHECK(trace(DataMatrix::identity(5, Format::Dense)) == cplx(5));
  std::mt19937_64 rng(2);
  auto a = oracle::to_dm(oracle::random(rng, 4, 4), Format::CSR);
  auto b = oracle::to_dm(oracle::random(rng, 4, 4), Format::Dense);
  CHECK(std::abs(trace(matmul(a, b)) - trace(matmul(b, a))) < 1e-13);
  CHECK_THROWS_AS(trace(DataMatrix::zeros(2, 3)), DimensionError);
}

TEST_CASE("randomized (format, op) combinations match the dense oracle") {
  std::mt19937_64 rng(2024);
  double worst = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const Format f = kFormats[rng() % 3], g = kFormats[rng() % 3];
    const int op = rep % 3;
    const std::size_t r = 1 + rng() % 16, k = 1 + rng() % 16, c = 1 + rng() % 16;
    if (op == 0) {
      Mat a = oracle::random(rng, r, c), b = oracle::random(rng, r, c);
      worst = std::max(worst, oracle::maxdiff(add(oracle::to_dm(a, f), oracle::to_dm(b, g), cplx(0.5, -1)),
                                              oracle::add(a, b, cplx(0.5, -1))));
    } else if (op == 1) {
      Mat a = oracle::random(rng, r, k), b = oracle::random(rng, k, c);
      worst = std::max(worst, oracle::maxdiff(matmul(oracle::to_dm(a, f), oracle::to_dm(b, g)), oracle::mul(a, b)));
    } else {
      const std::size_t r2 = 1 + rng() % 4, c2 = 1 + rng() % 4;
      Mat a = oracle::random(rng, r2, c2), b = oracle::random(rng, 1 + rng() % 4, 1 + rng() % 4);
      worst = std::max(worst, oracle::maxdiff(kron(oracle::to_dm(a, f), oracle::to_dm(b, g)), oracle::kron(a, b)));
    }
  }
  CHECK(worst <= 1e-13);
}

TEST_CASE("serial and OpenMP kernels are bit-identical") {
  std::mt19937_64 rng(9);
  const std::size_t n = 300;
  Mat a = oracle::random(rng, n, n, 0.05);
  Mat xv = oracle::random(rng, n, 1, 1.0);
  std::vector<cplx> x(n), y1(n, 1.0), y2(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) x[i] = xv[i][0];
  auto csr = oracle::to_dm(a, Format::CSR);
  const auto& s = csr.csr();
  kernels::serial::csr_matvec(n, s.row_ptr, s.col_idx, s.values, x, y1, cplx(2, 1), cplx(0.5));
  kernels::omp::csr_matvec(n, s.row_ptr, s.col_idx, s.values, x, y2, cplx(2, 1), cplx(0.5));
  CHECK(y1 == y2);
  auto dia = convert(csr, Format::Dia);
  kernels::serial::dia_matvec(n, n, dia.dia().offsets, dia.dia().values, x, y1, 1.0, 0.0);
  kernels::omp::dia_matvec(n, n, dia.dia().offsets, dia.dia().values, x, y2, 1.0, 0.0);
  CHECK(y1 == y2);
  auto dense = convert(csr, Format::Dense);
  kernels::serial::dense_matvec(n, n, dense.dense().values, x, y1, 1.0, 0.0);
  kernels::omp::dense_matvec(n, n, dense.dense().values, x, y2, 1.0, 0.0);
  CHECK(y1 == y2);
  std::vector<cplx> c1(n * n), c2(n * n);
  kernels::serial::dense_matmul(n, n, n, dense.dense().values, dense.dense().values, c1);
  kernels::omp::dense_matmul(n, n, n, dense.dense().values, dense.dense().values, c2);
  CHECK(c1 == c2);
}

TEST_CASE("rectangular dia matvec matches oracle") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t r = 1 + rng() % 9, c = 1 + rng() % 9;
    Mat a = oracle::random(rng, r, c), v = oracle::random(rng, c, 1, 1.0);
    std::vector<cplx> x(c);
    for (std::size_t i = 0; i < c; ++i) x[i] = v[i][0];
    auto y = matvec(oracle::to_dm(a, Format::Dia), x);
    auto ref = oracle::mul(a, v);
    for (std::size_t i = 0; i < r; ++i) CHECK(std::abs(y[i] - ref[i][0]) < 1e-14);
  }
}

TEST_CASE("expm") {
  CHECK(oracle::maxdiff(expm(DataMatrix::zeros(3, 3)), oracle::eye(3)) < 1e-15);
  // exp(-i pi/2 sx) = -i sx
  auto m = scale(oracle::to_dm(sx(), Format::CSR), cplx(0, -M_PI / 2));
  Mat ref = sx();
  for (auto& r : ref)
    for (auto& v : r) v *= -I;
  CHECK(oracle::maxdiff(expm(m), ref) < 1e-14);
  auto d = expm(oracle::to_dm(Mat{{cplx(0.3, 1), 0}, {0, cplx(-2, 0.5)}}, Format::Dia));
  CHECK(std::abs(d.at(0, 0) - std::exp(cplx(0.3, 1))) < 1e-13);
  CHECK(std::abs(d.at(1, 1) - std::exp(cplx(-2, 0.5))) < 1e-14);
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 5; ++rep) {
    Mat a = oracle::random(rng, 6, 6, 1.0);
    auto am = oracle::to_dm(a, Format::Dense);
    const double nrm = norm_one(am);
    am = scale(am, 5.0 / nrm);
    auto p = matmul(expm(am), expm(scale(am, -1.0)));
    CHECK(oracle::maxdiff(p, oracle::eye(6)) < 1e-10);
  }
}

TEST_CASE("expm agrees with a Taylor-series oracle") {
  std::mt19937_64 rng(13);
  Mat a = oracle::random(rng, 5, 5, 1.0);
  for (auto& r : a)
    for (auto& v : r) v *= 0.8;
  // exp(A) = (exp(A/16))^16 with a long Taylor series for the small factor
  Mat small = a;
  for (auto& r : small)
    for (auto& v : r) v /= 16.0;
  Mat term = oracle::eye(5), sum = oracle::eye(5);
  for (int k = 1; k < 30; ++k) {
    term = oracle::mul(term, small);
    for (auto& r : term)
      for (auto& v : r) v /= double(k);
    sum = oracle::add(sum, term);
  }
  Mat ref = sum;
  for (int k = 0; k < 4; ++k) ref = oracle::mul(ref, ref);
  auto e = expm(oracle::to_dm(a, Format::Dense));
  double rel = oracle::maxdiff(e, ref) / oracle::maxdiff(ref, oracle::zeros(5, 5));
  CHECK(rel < 1e-12);
}

TEST_CASE("eig_herm") {
  auto z = eig_herm(oracle::to_dm(sz(), Format::CSR));
  CHECK(z.values[0] == doctest::Approx(-1));
  CHECK(z.values[1] == doctest::Approx(1));
  auto x = eig_herm(oracle::to_dm(sx(), Format::CSR));
  CHECK(x.values[0] == doctest::Approx(-1));
  const double s = 1 / std::sqrt(2.0);
  // eigenvector for -1 is (|0> - |1>)/sqrt2 up to phase
  const cplx v0 = x.vectors.at(0, 0), v1 = x.vectors.at(1, 0);
  CHECK(std::abs(std::abs(v0) - s) < 1e-12);
  CHECK(std::abs(v0 + v1) < 1e-12);
  CHECK_THROWS_AS(eig_herm(oracle::to_dm(Mat{{0, 1}, {0, 0}}, Format::Dense)), PreconditionError);

  std::mt19937_64 rng(21);
  for (std::size_t n : {1u, 2u, 3u, 6u, 17u, 40u}) {
    Mat a = oracle::random_herm(rng, n);
    auto e = eig_herm(oracle::to_dm(a, Format::Dense));
    Mat v = oracle::from(e.vectors);
    Mat lam = oracle::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) lam[i][i] = e.values[i];
    CHECK(oracle::maxdiff(oracle::mul(oracle::mul(v, lam), oracle::dag(v)), a) < 1e-10);
    CHECK(oracle::maxdiff(oracle::mul(oracle::dag(v), v), oracle::eye(n)) < 1e-10);
    for (std::size_t i = 1; i < n; ++i) CHECK(e.values[i - 1] <= e.values[i]);
  }
}

TEST_CASE("eig_herm handles degenerate and already-diagonal input") {
  Mat a = oracle::eye(5);
  a[2][2] = 3;
  auto e = eig_herm(oracle::to_dm(a, Format::CSR));
  CHECK(e.values == std::vector<double>{1, 1, 1, 1, 3});
  Mat b = oracle::kron(oracle::eye(3), sx());
  auto eb = eig_herm(oracle::to_dm(b, Format::CSR));
  CHECK(eb.values[0] == doctest::Approx(-1));
  CHECK(eb.values[5] == doctest::Approx(1));
}

TEST_CASE("solve_linear") {
  std::mt19937_64 rng(31);
  Mat b = oracle::random(rng, 8, 2, 1.0);
  auto bid = oracle::to_dm(b, Format::Dense);
  CHECK(oracle::maxdiff(solve_linear(DataMatrix::identity(8), bid), b) == 0.0);
  Mat a = oracle::random(rng, 8, 8, 1.0);
  for (int i = 0; i < 8; ++i) a[i][i] += 4.0;
  auto am = oracle::to_dm(a, Format::CSR);
  for (auto method : {LinearMethod::direct_lu, LinearMethod::iterative_gmres}) {
    auto x = solve_linear(am, bid, method);
    Mat r = oracle::add(oracle::mul(a, oracle::from(x)), b, -1.0);
    double rn = 0, bn = 0;
    for (int i = 0; i < 8; ++i) {
      rn += std::norm(r[i][0]);
      bn += std::norm(b[i][0]);
    }
    CHECK(std::sqrt(rn / bn) <= 1e-10);
  }
  CHECK_THROWS_AS(solve_linear(DataMatrix::zeros(3, 3), DataMatrix::zeros(3, 1)), SingularityError);
  CHECK_THROWS_AS(LuFactorization(oracle::to_dm(Mat{{1, 2}, {2, 4}}, Format::Dense)), SingularityError);
  GmresOptions tight;
  tight.max_iter = 1;
  tight.restart = 1;
  Mat hard = oracle::random(rng, 30, 30, 1.0);
  CHECK_THROWS_AS(solve_linear(oracle::to_dm(hard, Format::Dense), DataMatrix::from_dense(30, 1, std::vector<cplx>(30, 1.0)),
                               LinearMethod::iterative_gmres, tight),
                  ConvergenceError);
}
