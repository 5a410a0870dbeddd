#include <cmath>
#include <sstream>

#include "doctest.h"
#include "openq/cli/model.hpp"
#include "openq/factories.hpp"
#include "openq/solvers/mesolve.hpp"

using namespace openq;
using namespace openq::cli;

namespace {

const char* decay = R"J({
  "dims": [2],
  "params": {"gamma": 0.2},
  "hamiltonian": "0.5*sigmaz",
  "c_ops": ["sqrt(gamma)*sigmam"],
  "initial_state": "basis(2, 0)",
  "tlist": {"start": 0, "stop": 10, "num": 21},
  "e_ops": [{"label": "sz", "op": "sigmaz"}],
  "solver": "mesolve",
  "solver_options": {"integrator": {"atol": 1e-12, "rtol": 1e-10}}
})J";

std::vector<std::vector<double>> read_csv(const std::string& s, std::vector<std::string>& header) {
  std::istringstream in(s);
  std::string line;
  std::getline(in, line);
  header.clear();
  std::istringstream h(line);
  for (std::string f; std::getline(h, f, ',');) header.push_back(f);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::istringstream l(line);
    for (std::string f; std::getline(l, f, ',');) r.push_back(std::strtod(f.c_str(), nullptr));
    rows.push_back(r);
  }
  return rows;
}

std::string csv_of(const ResultTable& t) {
  std::ostringstream o;
  write_csv(t, o);
  return o.str();
}

}  // namespace

TEST_CASE("cli: decay model follows the closed form") {
  const auto m = parse_model(decay);
  const auto t = run_model(m);
  REQUIRE(t.labels == std::vector<std::string>{"time", "sz"});
  REQUIRE(t.rows.size() == 21);
  for (const auto& r : t.rows) CHECK(std::abs(r[1] - (2 * std::exp(-0.2 * r[0]) - 1)) < 1e-6);
}

TEST_CASE("cli: output is the library result") {
  const auto m = parse_model(decay);
  const auto t = run_model(m);
  SolverOptions o;
  o.integrator.atol = 1e-12;
  o.integrator.rtol = 1e-10;
  std::vector<double> tl(21);
  for (std::size_t i = 0; i < tl.size(); ++i) tl[i] = 0.5 * double(i);
  auto r = mesolve(0.5 * sigmaz(), basis(2, 0), tl, {std::sqrt(0.2) * sigmam()}, {sigmaz()}, o);
  for (std::size_t i = 0; i < tl.size(); ++i) {
    CHECK(t.rows[i][0] == tl[i]);
    CHECK(t.rows[i][1] == r.expect[0][i].real());
  }
}

TEST_CASE("cli: csv round trip is exact") {
  const auto t = run_model(parse_model(decay));
  std::vector<std::string> h;
  const auto rows = read_csv(csv_of(t), h);
  CHECK(h == t.labels);
  REQUIRE(rows.size() == t.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i] == t.rows[i]);
}

TEST_CASE("cli: column layout") {
  std::string s = decay;
  const std::string eops = R"([{"label": "sz", "op": "sigmaz"}])";
  SUBCASE("no e_ops: time only") {
    s.replace(s.find(eops), eops.size(), "[]");
    const auto t = run_model(parse_model(s));
    CHECK(t.labels == std::vector<std::string>{"time"});
    CHECK(csv_of(t).substr(0, 5) == "time\n");
  }
  SUBCASE("non-Hermitian observable splits into re/im") {
    s.replace(s.find(eops), eops.size(), "[\"sigmam\", {\"label\": \"x\", \"op\": \"sigmax\"}]");
    const auto t = run_model(parse_model(s));
    CHECK(t.labels == std::vector<std::string>{"time", "sigmam_re", "sigmam_im", "x"});
  }
}

TEST_CASE("cli: expression language") {
  ExprContext ctx{{2, 2}, {{"g", 0.5}}};
  auto v = eval_expr("sigmaz@0 * identity", ctx, "x");
  const auto& q = std::get<Qobj>(v);
  CHECK(q.dims() == Dimensions::oper({2, 2}));
  CHECK(q.norm() > 0);
  CHECK(std::get<cplx>(eval_expr("2*g + 1j", ctx, "x")) == cplx(1, 1));
  CHECK(std::get<cplx>(eval_expr("-(3 - 1)/4", ctx, "x")) == cplx(-0.5));
  const auto a = std::get<Qobj>(eval_expr("tensor(destroy(3), qeye(2))", {{3, 2}, {}}, "x"));
  const auto b = std::get<Qobj>(eval_expr("destroy@0", {{3, 2}, {}}, "x"));
  CHECK(data::max_abs_diff(a.data(), b.data()) == 0.0);
  CHECK_THROWS_AS(eval_expr("sigmaz@2", ctx, "x"), ModelError);
  CHECK_THROWS_AS(eval_expr("destroy(3)@0", ctx, "x"), ModelError);
  CHECK_THROWS_AS(eval_expr("sigmaz + 1", ctx, "x"), ModelError);
  CHECK_THROWS_AS(eval_expr("frobnicate(2)", ctx, "x"), ModelError);
  CHECK_THROWS_AS(eval_expr("1/0", ctx, "x"), ModelError);
}

TEST_CASE("cli: validation errors name the offending field") {
  auto err = [](std::string s, const std::string& from, const std::string& to) -> std::string {
    s.replace(s.find(from), from.size(), to);
    try {
      parse_model(s);
    } catch (const ModelError& e) {
      return e.path();
    }
    return "";
  };
  CHECK(err(decay, "\"mesolve\"", "\"floquetx\"") == "solver");
  CHECK(err(decay, "\"dims\": [2]", "\"dims\": [3]").find("hamiltonian") == 0);
  CHECK(err(decay, "\"basis(2, 0)\"", "\"basis(3, 0)\"") == "initial_state");
  CHECK(err(decay, "\"num\": 21", "\"num\": 0").find("tlist") == 0);
  CHECK(err(decay, "\"dims\"", "\"dimz\"") != "");
  CHECK(err(decay, "\"atol\"", "\"atoll\"").find("solver_options") == 0);
  CHECK(err(decay, "\"mesolve\"", "\"heomsolve\"").find("solver_options") == 0);
  CHECK(err(decay, "0.5*sigmaz", "0.5j*sigmaz").find("hamiltonian") == 0);
  CHECK_THROWS_AS(parse_model("{ not json"), ModelError);
}

TEST_CASE("cli: steady state row") {
  std::string s = decay;
  s.replace(s.find("\"mesolve\""), 9, "\"steadystate\"");
  const auto t = run_model(parse_model(s));
  REQUIRE(t.rows.size() == 1);
  CHECK(std::isinf(t.rows[0][0]));
  CHECK(t.rows[0][1] == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("cli: fixed seed gives identical bytes, serial or parallel") {
  const std::string base = R"J({
    "dims": [2], "hamiltonian": "0.5*sigmax", "c_ops": ["sqrt(0.3)*sigmam"],
    "initial_state": "basis(2, 0)", "tlist": {"start": 0, "stop": 5, "num": 11},
    "e_ops": ["sigmaz"], "solver": "mcsolve",
    "solver_options": {"ntraj": 40, "seed": 5, "map": "MAP"}})J";
  auto with = [&](const char* map, Overrides ov = {}) {
    std::string s = base;
    s.replace(s.find("MAP"), 3, map);
    return csv_of(run_model(parse_model(s, ov)));
  };
  const auto a = with("serial"), b = with("parallel");
  CHECK(a == b);
  CHECK(a == with("serial"));
  Overrides ov;
  ov.seed = 6;
  CHECK(with("serial", ov) != a);
  ov = {};
  ov.ntraj = 3;
  CHECK(parse_model(std::string(decay), ov).ntraj == 3);
}
