#include "openq/cli/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "json.hpp"
#include "openq/heom/heom.hpp"
#include "openq/solvers/bloch_redfield.hpp"
#include "openq/solvers/floquet.hpp"
#include "openq/solvers/mesolve.hpp"
#include "openq/stochastic/smesolve.hpp"

namespace openq::cli {

using json = nlohmann::ordered_json;

const std::vector<std::string>& known_solvers() {
  static const std::vector<std::string> s{"sesolve",    "mesolve",  "brmesolve", "steadystate", "mcsolve",
                                          "nm_mcsolve", "smesolve", "heomsolve", "fsesolve"};
  return s;
}

namespace {

bool trajectory_solver(const std::string& s) { return s == "mcsolve" || s == "nm_mcsolve" || s == "smesolve"; }

class Reader {
 public:
  explicit Reader(ExprContext& ctx) : ctx_(ctx) {}

  [[noreturn]] static void fail(const std::string& path, const std::string& msg) { throw ModelError(path, msg); }

  static const json& need(const json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) fail(path.empty() ? key : path + "." + key, "missing required field");
    return j.at(key);
  }

  cplx scalar(const json& j, const std::string& path) const {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
      const auto v = eval_expr(j.get<std::string>(), ctx_, path);
      if (const auto* c = std::get_if<cplx>(&v)) return *c;
      fail(path, "expected a scalar, got a quantum object");
    }
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
      return {j[0].get<double>(), j[1].get<double>()};
    fail(path, "expected a number, [re, im] or scalar expression");
  }

  double real(const json& j, const std::string& path) const {
    const cplx c = scalar(j, path);
    if (c.imag() != 0.0) fail(path, "expected a real value");
    return c.real();
  }

  std::size_t count(const json& j, const std::string& path, std::size_t lo = 0) const {
    const double v = real(j, path);
    if (v < double(lo) || v != std::floor(v)) fail(path, "expected an integer >= " + std::to_string(lo));
    return static_cast<std::size_t>(v);
  }

  Qobj qobj(const json& j, const std::string& path) const {
    if (!j.is_string()) fail(path, "expected an expression string");
    const auto v = eval_expr(j.get<std::string>(), ctx_, path);
    if (const auto* q = std::get_if<Qobj>(&v)) return *q;
    fail(path, "expected a quantum object, got a scalar");
  }

  Qobj oper(const json& j, const std::string& path) const {
    Qobj q = qobj(j, path);
    if (!q.isoper()) fail(path, "expected an operator");
    if (q.dims() != full_dims()) fail(path, "operator dims " + q.dims().str() + " differ from the model dims " + full_dims().str());
    return q;
  }

  Dimensions full_dims() const {
    std::vector<std::size_t> d = ctx_.dims;
    return Dimensions::oper(d);
  }

  Coefficient coeff(const json& j, const std::string& path, const std::vector<double>& tlist) const {
    if (j.is_number() || j.is_string()) return Coefficient::constant(scalar(j, path));
    if (!j.is_object()) fail(path, "expected a coefficient object");
    if (j.contains("samples")) {
      const auto& s = j.at("samples");
      if (!s.is_array()) fail(path + ".samples", "expected an array");
      std::vector<cplx> v;
      for (std::size_t i = 0; i < s.size(); ++i) v.push_back(scalar(s[i], path + ".samples[" + std::to_string(i) + "]"));
      std::vector<double> t = tlist;
      if (j.contains("times")) {
        t.clear();
        for (std::size_t i = 0; i < j["times"].size(); ++i) t.push_back(real(j["times"][i], path + ".times[" + std::to_string(i) + "]"));
      }
      if (t.size() != v.size()) fail(path + ".samples", "sample count differs from the number of times");
      try {
        return Coefficient::spline(std::move(t), std::move(v));
      } catch (const std::exception& e) {
        fail(path, e.what());
      }
    }
    const std::string fn = need(j, "fn", path).is_string() ? j["fn"].get<std::string>() : "";
    auto opt = [&](const char* k, cplx d) { return j.contains(k) ? scalar(j[k], path + "." + k) : d; };
    const cplx amp = opt("amp", 1.0);
    if (fn == "const") return Coefficient::constant(amp);
    if (fn == "sin" || fn == "cos") {
      const double w = opt("omega", 1.0).real(), ph = opt("phase", 0.0).real();
      const bool s = fn == "sin";
      return Coefficient::function([amp, w, ph, s](double t, const Args&) {
        return amp * (s ? std::sin(w * t + ph) : std::cos(w * t + ph));
      });
    }
    if (fn == "exp") {
      const cplx r = opt("rate", 0.0);
      return Coefficient::function([amp, r](double t, const Args&) { return amp * std::exp(r * t); });
    }
    if (fn == "gauss") {
      const double t0 = opt("t0", 0.0).real(), sg = opt("sigma", 1.0).real(), w = opt("omega", 0.0).real(),
                   ph = opt("phase", 0.0).real();
      if (!(sg > 0)) fail(path + ".sigma", "must be positive");
      return Coefficient::function([=](double t, const Args&) {
        const double x = (t - t0) / sg;
        return amp * std::exp(-0.5 * x * x) * std::cos(w * t + ph);
      });
    }
    fail(path + ".fn", "unknown function '" + fn + "' (const, sin, cos, exp, gauss)");
  }

  Term term(const json& j, const std::string& path, const std::vector<double>& tlist) const {
    if (j.is_string()) return {oper(j, path), std::nullopt};
    if (!j.is_object()) fail(path, "expected an expression or {op, coeff}");
    Term t{oper(need(j, "op", path), path + ".op"), std::nullopt};
    if (j.contains("coeff")) t.coeff = coeff(j["coeff"], path + ".coeff", tlist);
    return t;
  }

  BosonicEnvironment environment(const json& j, const std::string& path) const {
    const auto& k = need(j, "kind", path);
    if (!k.is_string()) fail(path + ".kind", "expected a string");
    const std::string kind = k.get<std::string>();
    auto r = [&](const char* f) { return real(need(j, f, path), path + "." + f); };
    try {
      if (kind == "drude_lorentz") return BosonicEnvironment::drude_lorentz(r("T"), r("lam"), r("gamma"));
      if (kind == "underdamped") return BosonicEnvironment::underdamped(r("T"), r("lam"), r("gamma"), r("w0"));
      if (kind == "ohmic") return BosonicEnvironment::ohmic(r("T"), r("alpha"), r("wc"), j.contains("s") ? r("s") : 1.0);
    } catch (const ModelError&) {
      throw;
    } catch (const std::exception& e) {
      fail(path, e.what());
    }
    fail(path + ".kind", "unknown environment kind '" + kind + "' (drude_lorentz, underdamped, ohmic)");
  }

 private:
  ExprContext& ctx_;
};

QobjEvo to_evo(const std::vector<Term>& terms) {
  std::vector<EvoItem> items;
  for (const auto& t : terms) {
    if (t.coeff)
      items.emplace_back(EvoTerm{t.op, *t.coeff});
    else
      items.emplace_back(t.op);
  }
  return qevo_from_list(items);
}

}  // namespace

ModelSpec parse_model(std::string_view text, const Overrides& ov) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ModelError("<document>", std::string("syntax error: ") + e.what());
  }
  if (!doc.is_object()) throw ModelError("<document>", "top level must be an object");
  if (ov.solver) doc["solver"] = *ov.solver;
  if (ov.seed) doc["solver_options"]["seed"] = *ov.seed;
  if (ov.ntraj) doc["solver_options"]["ntraj"] = *ov.ntraj;

  static const std::set<std::string> top{"dims", "params", "hamiltonian", "c_ops", "sc_ops", "initial_state",
                                         "tlist", "e_ops", "solver", "solver_options", "description"};
  for (const auto& [k, v] : doc.items())
    if (!top.count(k)) throw ModelError(k, "unknown field");

  ModelSpec m;
  ExprContext ctx;
  Reader rd(ctx);

  const auto& dims = Reader::need(doc, "dims", "");
  if (!dims.is_array() || dims.empty()) throw ModelError("dims", "expected a non-empty array of subsystem sizes");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (!dims[i].is_number_unsigned() || dims[i].get<std::size_t>() == 0)
      throw ModelError("dims[" + std::to_string(i) + "]", "expected a positive integer");
    m.dims.push_back(dims[i].get<std::size_t>());
  }
  ctx.dims = m.dims;

  if (doc.contains("params")) {
    if (!doc["params"].is_object()) throw ModelError("params", "expected an object");
    for (const auto& [k, v] : doc["params"].items()) ctx.params[k] = rd.scalar(v, "params." + k);
  }

  const auto& sv = Reader::need(doc, "solver", "");
  if (!sv.is_string()) throw ModelError("solver", "expected a string");
  m.solver = sv.get<std::string>();
  if (std::find(known_solvers().begin(), known_solvers().end(), m.solver) == known_solvers().end())
    throw ModelError("solver", "unknown solver '" + m.solver + "'");

  if (m.solver != "steadystate" || doc.contains("tlist")) {
    const auto& tl = Reader::need(doc, "tlist", "");
    const double a = rd.real(Reader::need(tl, "start", "tlist"), "tlist.start");
    const double b = rd.real(Reader::need(tl, "stop", "tlist"), "tlist.stop");
    const std::size_t n = rd.count(Reader::need(tl, "num", "tlist"), "tlist.num", 2);
    if (!(b > a)) throw ModelError("tlist.stop", "must exceed tlist.start");
    m.tlist.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.tlist[i] = a + (b - a) * double(i) / double(n - 1);
  }

  const json& opts = doc.contains("solver_options") ? doc["solver_options"] : json::object();
  if (!opts.is_object()) throw ModelError("solver_options", "expected an object");

  const auto& h = Reader::need(doc, "hamiltonian", "");
  if (h.is_array()) {
    for (std::size_t i = 0; i < h.size(); ++i) m.hamiltonian.push_back(rd.term(h[i], "hamiltonian[" + std::to_string(i) + "]", m.tlist));
  } else {
    m.hamiltonian.push_back(rd.term(h, "hamiltonian", m.tlist));
  }
  for (std::size_t i = 0; i < m.hamiltonian.size(); ++i)
    if (!m.hamiltonian[i].op.isherm() && !m.hamiltonian[i].coeff)
      throw ModelError("hamiltonian[" + std::to_string(i) + "]", "constant Hamiltonian term is not Hermitian");

  if (doc.contains("c_ops")) {
    const auto& c = doc["c_ops"];
    if (!c.is_array()) throw ModelError("c_ops", "expected an array");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::string p = "c_ops[" + std::to_string(i) + "]";
      if (m.solver == "nm_mcsolve") {
        if (!c[i].is_object() || !c[i].contains("rate")) throw ModelError(p, "nm_mcsolve needs {op, rate}");
        m.nm_ops.push_back({rd.oper(c[i]["op"], p + ".op"), rd.coeff(c[i]["rate"], p + ".rate", m.tlist)});
      } else {
        m.c_ops.push_back(rd.term(c[i], p, m.tlist));
      }
    }
  }
  if (doc.contains("sc_ops")) {
    const auto& c = doc["sc_ops"];
    if (!c.is_array()) throw ModelError("sc_ops", "expected an array");
    if (m.solver != "smesolve" && !c.empty()) throw ModelError("sc_ops", "only used by smesolve");
    for (std::size_t i = 0; i < c.size(); ++i) m.sc_ops.push_back(rd.oper(c[i], "sc_ops[" + std::to_string(i) + "]"));
  }

  if (m.solver != "steadystate") {
    m.initial_state = rd.qobj(Reader::need(doc, "initial_state", ""), "initial_state");
    const auto& st = m.initial_state;
    const auto want = rd.full_dims().rows;
    if (st.dims().rows != want) throw ModelError("initial_state", "dims " + st.dims().str() + " differ from the model dims");
    if (st.isoper()) {
      if (std::abs(st.tr() - 1.0) > 1e-8) throw ModelError("initial_state", "density matrix must have unit trace");
    } else if (!st.isket()) {
      throw ModelError("initial_state", "expected a ket or a density matrix");
    }
    if (st.isoper() && (m.solver == "sesolve" || m.solver == "fsesolve" || m.solver == "nm_mcsolve"))
      throw ModelError("initial_state", m.solver + " needs a ket");
  }

  if (doc.contains("e_ops")) {
    const auto& e = doc["e_ops"];
    if (!e.is_array()) throw ModelError("e_ops", "expected an array");
    for (std::size_t i = 0; i < e.size(); ++i) {
      const std::string p = "e_ops[" + std::to_string(i) + "]";
      if (e[i].is_string()) {
        m.e_ops.push_back({e[i].get<std::string>(), rd.oper(e[i], p)});
      } else {
        const auto& l = Reader::need(e[i], "label", p);
        if (!l.is_string()) throw ModelError(p + ".label", "expected a string");
        m.e_ops.push_back({l.get<std::string>(), rd.oper(Reader::need(e[i], "op", p), p + ".op")});
      }
    }
  }

  // solver options
  static const std::set<std::string> known_opts{"ntraj", "seed", "map", "improved_sampling", "sec_cutoff", "a_ops",
                                                "n_c", "baths", "method", "period", "nt", "dt_sub", "integrator"};
  for (const auto& [k, v] : opts.items())
    if (!known_opts.count(k)) throw ModelError("solver_options." + k, "unknown option");
  auto o = [&](const char* k) { return std::string("solver_options.") + k; };
  if (m.solver == "smesolve") m.ntraj = 50;
  if (opts.contains("ntraj")) m.ntraj = rd.count(opts["ntraj"], o("ntraj"), 1);
  if (opts.contains("seed")) {
    if (!opts["seed"].is_number_unsigned()) throw ModelError(o("seed"), "expected a non-negative integer");
    m.seed = opts["seed"].get<std::uint64_t>();
  }
  if (opts.contains("map")) {
    const auto s = opts["map"].is_string() ? opts["map"].get<std::string>() : "";
    if (s == "serial")
      m.map = MapKind::serial;
    else if (s == "parallel")
      m.map = MapKind::parallel;
    else
      throw ModelError(o("map"), "expected \"serial\" or \"parallel\"");
  }
  if (opts.contains("improved_sampling")) {
    if (!opts["improved_sampling"].is_boolean()) throw ModelError(o("improved_sampling"), "expected true/false");
    m.improved_sampling = opts["improved_sampling"].get<bool>();
  }
  if (opts.contains("sec_cutoff")) m.sec_cutoff = rd.real(opts["sec_cutoff"], o("sec_cutoff"));
  if (opts.contains("n_c")) m.n_c = rd.count(opts["n_c"], o("n_c"));
  if (opts.contains("nt")) m.nt = rd.count(opts["nt"], o("nt"), 2);
  if (opts.contains("period")) m.period = rd.real(opts["period"], o("period"));
  if (opts.contains("dt_sub")) m.dt_sub = rd.real(opts["dt_sub"], o("dt_sub"));
  if (opts.contains("method")) {
    if (!opts["method"].is_string()) throw ModelError(o("method"), "expected a string");
    try {
      m.steady_method = parse_steady_method(opts["method"].get<std::string>());
    } catch (const std::exception& e) {
      throw ModelError(o("method"), e.what());
    }
  }
  if (opts.contains("integrator")) {
    const auto& ij = opts["integrator"];
    if (!ij.is_object()) throw ModelError(o("integrator"), "expected an object");
    IntegratorOptions io;
    const std::string p = o("integrator");
    for (const auto& [k, v] : ij.items()) {
      if (k == "atol")
        io.atol = rd.real(v, p + ".atol");
      else if (k == "rtol")
        io.rtol = rd.real(v, p + ".rtol");
      else if (k == "nsteps")
        io.nsteps = rd.count(v, p + ".nsteps", 1);
      else if (k == "max_step")
        io.max_step = rd.real(v, p + ".max_step");
      else if (k == "method") {
        const auto s = v.is_string() ? v.get<std::string>() : "";
        if (s == "rk45")
          io.method = OdeMethod::rk45_adaptive;
        else if (s == "diag_expm")
          io.method = OdeMethod::diag_expm;
        else
          throw ModelError(p + ".method", "expected \"rk45\" or \"diag_expm\"");
      } else
        throw ModelError(p + "." + k, "unknown option");
    }
    m.integrator = io;
  }
  if (opts.contains("a_ops")) {
    const auto& a = opts["a_ops"];
    if (!a.is_array()) throw ModelError(o("a_ops"), "expected an array");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string p = o("a_ops") + "[" + std::to_string(i) + "]";
      BrSpec b{rd.oper(Reader::need(a[i], "op", p), p + ".op"), {}};
      const auto& sp = Reader::need(a[i], "spectrum", p);
      if (sp.contains("flat")) {
        b.spectrum = flat_spectrum(rd.real(sp["flat"], p + ".spectrum.flat"));
      } else {
        auto env = rd.environment(sp, p + ".spectrum");
        b.spectrum = [env](double w) { return env.power_spectrum(w); };
      }
      m.a_ops.push_back(std::move(b));
    }
  }
  if (opts.contains("baths")) {
    const auto& a = opts["baths"];
    if (!a.is_array()) throw ModelError(o("baths"), "expected an array");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string p = o("baths") + "[" + std::to_string(i) + "]";
      BathSpec b{rd.oper(Reader::need(a[i], "q", p), p + ".q"),
                 rd.environment(Reader::need(a[i], "environment", p), p + ".environment"),
                 a[i].contains("n_k") ? rd.count(a[i]["n_k"], p + ".n_k") : 0};
      if (!b.q.isherm()) throw ModelError(p + ".q", "coupling operator must be Hermitian");
      try {
        (void)matsubara_decompose(b.env, b.n_k);
      } catch (const std::exception& e) {
        throw ModelError(p + ".environment", e.what());
      }
      m.baths.push_back(std::move(b));
    }
  }

  // solver-specific requirements
  const bool td_h = std::any_of(m.hamiltonian.begin(), m.hamiltonian.end(), [](const Term& t) { return t.coeff.has_value(); });
  const bool td_c = std::any_of(m.c_ops.begin(), m.c_ops.end(), [](const Term& t) { return t.coeff.has_value(); });
  if (m.solver == "sesolve" && !m.c_ops.empty()) throw ModelError("c_ops", "sesolve takes no collapse operators");
  if (m.solver == "brmesolve" && m.a_ops.empty()) throw ModelError(o("a_ops"), "brmesolve needs at least one coupling");
  if ((m.solver == "brmesolve" || m.solver == "heomsolve" || m.solver == "steadystate") && (td_h || td_c))
    throw ModelError("hamiltonian", m.solver + " needs a time-independent model");
  if (m.solver == "heomsolve" && m.baths.empty()) throw ModelError(o("baths"), "heomsolve needs at least one bath");
  if (m.solver == "fsesolve" && !(m.period > 0)) throw ModelError(o("period"), "fsesolve needs a positive drive period");
  if (m.solver == "fsesolve" && !m.c_ops.empty()) throw ModelError("c_ops", "fsesolve is closed-system only");
  if (m.solver == "smesolve" && m.sc_ops.empty()) throw ModelError("sc_ops", "smesolve needs at least one monitored operator");
  if (m.solver == "nm_mcsolve" && m.nm_ops.empty()) throw ModelError("c_ops", "nm_mcsolve needs at least one {op, rate}");
  if (m.solver == "steadystate" && m.c_ops.empty()) throw ModelError("c_ops", "steadystate needs collapse operators");
  if (!trajectory_solver(m.solver)) {
    for (const char* k : {"ntraj", "seed", "map", "improved_sampling"})
      if (opts.contains(k) && !(ov.seed && std::string(k) == "seed") && !(ov.ntraj && std::string(k) == "ntraj"))
        throw ModelError(o(k), "only meaningful for trajectory solvers");
  }
  return m;
}

namespace {

struct Columns {
  ResultTable t;
  std::vector<bool> herm;

  explicit Columns(const ModelSpec& m) {
    t.labels.push_back("time");
    for (const auto& e : m.e_ops) {
      herm.push_back(e.op.isherm());
      if (herm.back()) {
        t.labels.push_back(e.label);
      } else {
        t.labels.push_back(e.label + "_re");
        t.labels.push_back(e.label + "_im");
      }
    }
  }

  void fill(const std::vector<double>& times, const std::vector<std::vector<cplx>>& ex,
            const std::vector<std::vector<double>>* sd = nullptr, const ModelSpec* m = nullptr) {
    if (sd && m)
      for (const auto& e : m->e_ops) t.labels.push_back(e.label + "_std");
    for (std::size_t i = 0; i < times.size(); ++i) {
      std::vector<double> row{times[i]};
      for (std::size_t k = 0; k < ex.size(); ++k) {
        row.push_back(ex[k][i].real());
        if (!herm[k]) row.push_back(ex[k][i].imag());
      }
      if (sd)
        for (const auto& s : *sd) row.push_back(s[i]);
      t.rows.push_back(std::move(row));
    }
  }
};

std::vector<Qobj> ops_of(const ModelSpec& m) {
  std::vector<Qobj> e;
  for (const auto& x : m.e_ops) e.push_back(x.op);
  return e;
}

SolverOptions solver_opts(const ModelSpec& m) {
  SolverOptions o;
  if (m.integrator) o.integrator = *m.integrator;
  o.store_states = false;
  return o;
}

Qobj const_h(const ModelSpec& m) {
  Qobj h = m.hamiltonian.front().op;
  for (std::size_t i = 1; i < m.hamiltonian.size(); ++i) h = h + m.hamiltonian[i].op;
  return h;
}

}  // namespace

ResultTable run_model(const ModelSpec& m) {
  Columns cols(m);
  const auto e_ops = ops_of(m);
  const QobjEvo h = to_evo(m.hamiltonian);
  std::vector<QobjEvo> c_ops;
  for (const auto& c : m.c_ops) c_ops.push_back(to_evo({c}));
  try {
    const std::string& s = m.solver;
    if (s == "sesolve" || s == "mesolve") {
      auto r = s == "sesolve" ? sesolve(h, m.initial_state, m.tlist, e_ops, solver_opts(m))
                              : mesolve(h, m.initial_state, m.tlist, c_ops, e_ops, solver_opts(m));
      cols.fill(r.times, r.expect);
      cols.t.warnings = r.stats.warnings;
    } else if (s == "brmesolve") {
      std::vector<BRCoupling> cp;
      for (const auto& a : m.a_ops) cp.push_back({a.a, a.spectrum});
      const Qobj rho0 = m.initial_state.isket() ? ket2dm(m.initial_state) : m.initial_state;
      SolveResult r;
      if (m.c_ops.empty()) {
        r = brmesolve(const_h(m), cp, rho0, m.tlist, e_ops, m.sec_cutoff, solver_opts(m));
      } else {
        // extra Lindblad channels on top of the Bloch-Redfield tensor
        const auto br = br_tensor(const_h(m), cp, m.sec_cutoff);
        std::vector<QobjEvo> ce;
        for (const auto& c : m.c_ops) ce.push_back(QobjEvo(to_eigenbasis(br, c.op)));
        const QobjEvo l = QobjEvo(br.r) + qevo_liouvillian(std::nullopt, ce);
        std::vector<Qobj> ee;
        for (const auto& e : e_ops) ee.push_back(to_eigenbasis(br, e));
        r = mesolve(l, to_eigenbasis(br, rho0), m.tlist, {}, ee, solver_opts(m));
      }
      cols.fill(r.times, r.expect);
    } else if (s == "steadystate") {
      SteadyStateOptions so;
      so.method = m.steady_method;
      std::vector<Qobj> cs;
      for (const auto& c : m.c_ops) cs.push_back(c.op);
      const auto r = steadystate_full(const_h(m), cs, so);
      std::vector<std::vector<cplx>> ex;
      for (const auto& e : e_ops) ex.push_back({expect(e, r.rho)});
      cols.fill({std::numeric_limits<double>::infinity()}, ex);
      if (r.degenerate) cols.t.warnings.push_back("steady state looks degenerate");
    } else if (s == "mcsolve" || s == "nm_mcsolve") {
      McOptions mo;
      mo.ntraj = m.ntraj;
      mo.seed = m.seed;
      mo.map = m.map;
      mo.improved_sampling = m.improved_sampling;
      if (m.integrator) mo.integrator = *m.integrator;
      MultiTrajResult r;
      if (s == "mcsolve") {
        r = m.initial_state.isket() ? mcsolve(h, m.initial_state, m.tlist, c_ops, e_ops, mo)
                                    : mcsolve(h, MixedState::from_dm(m.initial_state), m.tlist, c_ops, e_ops, mo);
      } else {
        std::vector<NmOperator> ops;
        for (const auto& x : m.nm_ops) ops.push_back({x.a, x.rate});
        NmOptions no;
        no.mc = mo;
        r = nm_mcsolve(h, m.initial_state, m.tlist, ops, e_ops, no);
      }
      cols.fill(r.times, r.average_expect, &r.std_expect, &m);
      if (s == "nm_mcsolve") {
        cols.t.labels.push_back("trace");
        for (std::size_t i = 0; i < cols.t.rows.size(); ++i) cols.t.rows[i].push_back(r.trace[i]);
      }
      cols.t.warnings = r.warnings;
    } else if (s == "smesolve") {
      SmeOptions so;
      so.ntraj = m.ntraj;
      so.seed = m.seed;
      so.map = m.map;
      so.dt_sub = m.dt_sub;
      so.store_measurement = false;
      const Qobj rho0 = m.initial_state.isket() ? ket2dm(m.initial_state) : m.initial_state;
      auto r = smesolve(h, rho0, m.tlist, c_ops, m.sc_ops, e_ops, so);
      cols.fill(r.times, r.average_expect, &r.std_expect, &m);
      cols.t.warnings = r.warnings;
    } else if (s == "heomsolve") {
      std::vector<HeomBath> baths;
      for (const auto& b : m.baths) baths.push_back(HeomBath::from_env(b.env, b.q, b.n_k));
      HeomOptions ho;
      if (m.integrator) ho.integrator = *m.integrator;
      auto r = heomsolve(const_h(m), baths, m.initial_state, m.tlist, m.n_c, e_ops, ho);
      cols.fill(r.times, r.expect);
    } else if (s == "fsesolve") {
      const auto fb = m.integrator ? floquet_basis(h, m.period, m.nt, {}, *m.integrator) : floquet_basis(h, m.period, m.nt);
      auto r = fsesolve(fb, m.initial_state, m.tlist, e_ops);
      cols.fill(r.times, r.expect);
    }
  } catch (const ModelError&) {
    throw;
  } catch (const std::exception& e) {
    throw SolverFailure(m.solver + ": " + e.what());
  }
  return std::move(cols.t);
}

void write_csv(const ResultTable& table, std::ostream& out) {
  for (std::size_t i = 0; i < table.labels.size(); ++i) out << (i ? "," : "") << table.labels[i];
  out << '\n';
  char buf[32];
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", row[i]);
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
}

void write_csv(const ResultTable& table, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(table, f);
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace openq::cli
