#include "openq/factories.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "openq/errors.hpp"

namespace openq {

namespace {

std::atomic<Format> g_oper_format{Format::CSR};

void require_dim(std::size_t n, const char* what) {
  if (n < 1) throw RangeError(std::string(what) + ": dimension must be >= 1");
}

Qobj ket_from(std::vector<cplx> v, Space s) {
  const std::size_t n = v.size();
  return Qobj(DataMatrix::from_dense(n, 1, std::move(v)), Dimensions::ket(std::move(s)));
}

Qobj oper_from_triplets(std::size_t n, std::vector<data::Triplet> t) {
  return Qobj(DataMatrix::from_triplets(n, n, std::move(t), default_oper_format()), Dimensions::oper(Space{n}));
}

Qobj dense_dm(const Qobj& psi) { return ket2dm(psi).to(Format::Dense); }

// 2j + 1 as an integer, validating that j is a half-integer.
std::size_t spin_dim(double j) {
  const double twoj = 2.0 * j;
  if (j < 0 || std::abs(twoj - std::round(twoj)) > 1e-12) throw RangeError("spin: j must be a non-negative half-integer");
  return static_cast<std::size_t>(std::llround(twoj)) + 1;
}

}  // namespace

Format default_oper_format() { return g_oper_format.load(); }
void set_default_oper_format(Format f) { g_oper_format.store(f); }

// ---- states ---------------------------------------------------------------------------

Qobj basis(std::size_t n, std::size_t k) {
  require_dim(n, "basis");
  if (k >= n) throw RangeError("basis: index " + std::to_string(k) + " >= dimension " + std::to_string(n));
  std::vector<cplx> v(n);
  v[k] = 1.0;
  return ket_from(std::move(v), Space{n});
}

Qobj basis(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& ks) {
  if (dims.size() != ks.size() || dims.empty()) throw DimensionError("basis: dims and indices differ in length");
  std::vector<Qobj> parts;
  for (std::size_t i = 0; i < dims.size(); ++i) parts.push_back(basis(dims[i], ks[i]));
  return tensor(parts);
}

Qobj coherent(std::size_t n, cplx alpha) {
  require_dim(n, "coherent");
  // truncated analytic amplitudes, renormalized on the truncated space
  std::vector<cplx> v(n);
  cplx amp = std::exp(-0.5 * std::norm(alpha));
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = amp;
    amp *= alpha / std::sqrt(static_cast<double>(k + 1));
  }
  double nrm = 0.0;
  for (const auto& x : v) nrm += std::norm(x);
  nrm = std::sqrt(nrm);
  for (auto& x : v) x /= nrm;
  return ket_from(std::move(v), Space{n});
}

Qobj fock_dm(std::size_t n, std::size_t k) { return dense_dm(basis(n, k)); }
Qobj coherent_dm(std::size_t n, cplx alpha) { return dense_dm(coherent(n, alpha)); }

Qobj thermal_dm(std::size_t n, double nbar) {
  require_dim(n, "thermal_dm");
  if (nbar < 0) throw RangeError("thermal_dm: mean occupation must be >= 0");
  std::vector<cplx> v(n * n);
  if (nbar == 0) {
    v[0] = 1.0;
  } else {
    const double q = nbar / (nbar + 1.0);
    double z = 0.0, w = 1.0;
    for (std::size_t k = 0; k < n; ++k, w *= q) z += w;
    w = 1.0;
    for (std::size_t k = 0; k < n; ++k, w *= q) v[k * n + k] = w / z;
  }
  return Qobj(DataMatrix::from_dense(n, n, std::move(v)), Dimensions::oper(Space{n}));
}

Qobj maximally_mixed_dm(std::size_t n) {
  require_dim(n, "maximally_mixed_dm");
  return Qobj(DataMatrix::identity(n, Format::Dense, 1.0 / static_cast<double>(n)), Dimensions::oper(Space{n}));
}

Qobj projection(std::size_t n, std::size_t i, std::size_t j) {
  if (i >= n || j >= n) throw RangeError("projection: index out of range");
  return oper_from_triplets(n, {{i, j, 1.0}});
}

Qobj bell_state(std::string_view which) {
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<cplx> v(4);
  if (which == "00") v = {s, 0, 0, s};
  else if (which == "01") v = {s, 0, 0, -s};
  else if (which == "10") v = {0, s, s, 0};
  else if (which == "11") v = {0, s, -s, 0};
  else throw RangeError("bell_state: unknown state '" + std::string(which) + "'");
  return ket_from(std::move(v), Space{2, 2});
}

Qobj singlet_state() { return bell_state("11"); }

std::vector<Qobj> triplet_states() {
  const double s = 1.0 / std::sqrt(2.0);
  return {ket_from({0, 0, 0, 1}, Space{2, 2}), ket_from({0, s, s, 0}, Space{2, 2}), ket_from({1, 0, 0, 0}, Space{2, 2})};
}

Qobj ghz_state(std::size_t n) {
  require_dim(n, "ghz_state");
  const std::size_t dim = std::size_t{1} << n;
  std::vector<cplx> v(dim);
  v.front() = v.back() = 1.0 / std::sqrt(2.0);
  return ket_from(std::move(v), Space{std::vector<std::size_t>(n, 2)});
}

Qobj w_state(std::size_t n) {
  require_dim(n, "w_state");
  const std::size_t dim = std::size_t{1} << n;
  std::vector<cplx> v(dim);
  for (std::size_t k = 0; k < n; ++k) v[std::size_t{1} << k] = 1.0 / std::sqrt(double(n));
  return ket_from(std::move(v), Space{std::vector<std::size_t>(n, 2)});
}

Qobj spin_state(double j, double m) {
  const std::size_t d = spin_dim(j);
  const double idx = j - m;
  if (idx < -1e-12 || idx > 2 * j + 1e-12 || std::abs(idx - std::round(idx)) > 1e-12)
    throw RangeError("spin_state: invalid m for given j");
  return basis(d, static_cast<std::size_t>(std::llround(idx)));
}

Qobj spin_coherent(double j, double theta, double phi) {
  const Qobj sp = jmat(j, '+');
  const Qobj sm = sp.dag();
  const Qobj gen = (0.5 * theta * std::exp(cplx{0, phi})) * sm - (0.5 * theta * std::exp(cplx{0, -phi})) * sp;
  return gen.expm() * spin_state(j, j);
}

// ---- operators ------------------------------------------------------------------------

Qobj qeye(std::size_t n) {
  require_dim(n, "qeye");
  return Qobj(DataMatrix::identity(n, default_oper_format()), Dimensions::oper(Space{n}));
}

Qobj qeye(const std::vector<std::size_t>& dims) {
  Space s{dims};
  return Qobj(DataMatrix::identity(s.size(), default_oper_format()), Dimensions::oper(s));
}

Qobj qzero(std::size_t n) {
  require_dim(n, "qzero");
  return Qobj(DataMatrix::zeros(n, n, default_oper_format()), Dimensions::oper(Space{n}));
}

Qobj destroy(std::size_t n) {
  require_dim(n, "destroy");
  std::vector<data::Triplet> t;
  for (std::size_t k = 1; k < n; ++k) t.push_back({k - 1, k, std::sqrt(static_cast<double>(k))});
  return oper_from_triplets(n, std::move(t));
}

Qobj create(std::size_t n) { return destroy(n).dag(); }

Qobj num(std::size_t n) {
  require_dim(n, "num");
  std::vector<data::Triplet> t;
  for (std::size_t k = 1; k < n; ++k) t.push_back({k, k, static_cast<double>(k)});
  return oper_from_triplets(n, std::move(t));
}

Qobj position(std::size_t n) {
  const Qobj a = destroy(n);
  return (a + a.dag()) * (1.0 / std::sqrt(2.0));
}

Qobj momentum(std::size_t n) {
  const Qobj a = destroy(n);
  return (a - a.dag()) * cplx{0.0, -1.0 / std::sqrt(2.0)};
}

Qobj displace(std::size_t n, cplx alpha) {
  const Qobj a = destroy(n);
  return (alpha * a.dag() - std::conj(alpha) * a).expm().to(default_oper_format());
}

Qobj squeeze(std::size_t n, cplx z) {
  const Qobj a = destroy(n);
  return (0.5 * (std::conj(z) * (a * a) - z * (a.dag() * a.dag()))).expm().to(default_oper_format());
}

Qobj sigmax() { return oper_from_triplets(2, {{0, 1, 1.0}, {1, 0, 1.0}}); }
Qobj sigmay() { return oper_from_triplets(2, {{0, 1, cplx{0, -1}}, {1, 0, cplx{0, 1}}}); }
Qobj sigmaz() { return oper_from_triplets(2, {{0, 0, 1.0}, {1, 1, -1.0}}); }
Qobj sigmap() { return oper_from_triplets(2, {{0, 1, 1.0}}); }
Qobj sigmam() { return oper_from_triplets(2, {{1, 0, 1.0}}); }

Qobj jmat(double j, char which) {
  const std::size_t d = spin_dim(j);
  // basis index k <-> m = j - k
  auto m_of = [&](std::size_t k) { return j - static_cast<double>(k); };
  std::vector<data::Triplet> plus;
  for (std::size_t k = 1; k < d; ++k) {
    const double m = m_of(k);
    plus.push_back({k - 1, k, std::sqrt(j * (j + 1) - m * (m + 1))});
  }
  switch (which) {
    case '+': return oper_from_triplets(d, plus);
    case '-': return oper_from_triplets(d, plus).dag();
    case 'z': {
      std::vector<data::Triplet> t;
      for (std::size_t k = 0; k < d; ++k)
        if (m_of(k) != 0.0) t.push_back({k, k, m_of(k)});
      return oper_from_triplets(d, std::move(t));
    }
    case 'x': {
      const Qobj p = oper_from_triplets(d, plus);
      return 0.5 * (p + p.dag());
    }
    case 'y': {
      const Qobj p = oper_from_triplets(d, plus);
      return cplx{0, -0.5} * (p - p.dag());
    }
    default: throw RangeError(std::string("jmat: unknown component '") + which + "'");
  }
}

// ---- name dispatch ----------------------------------------------------------------------

namespace {

cplx num_arg(std::span<const FactoryArg> a, std::size_t i, const char* kind) {
  if (i >= a.size()) throw PreconditionError(std::string(kind) + ": missing argument " + std::to_string(i + 1));
  if (const auto* c = std::get_if<cplx>(&a[i])) return *c;
  throw PreconditionError(std::string(kind) + ": argument " + std::to_string(i + 1) + " must be numeric");
}

double real_arg(std::span<const FactoryArg> a, std::size_t i, const char* kind) {
  const cplx c = num_arg(a, i, kind);
  if (c.imag() != 0.0) throw PreconditionError(std::string(kind) + ": argument must be real");
  return c.real();
}

std::size_t int_arg(std::span<const FactoryArg> a, std::size_t i, const char* kind) {
  const double v = real_arg(a, i, kind);
  if (v < 0 || v != std::floor(v)) throw RangeError(std::string(kind) + ": argument must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

std::string str_arg(std::span<const FactoryArg> a, std::size_t i, const char* kind) {
  if (i >= a.size()) throw PreconditionError(std::string(kind) + ": missing argument " + std::to_string(i + 1));
  if (const auto* s = std::get_if<std::string>(&a[i])) return *s;
  // allow bell_state(00) style numeric labels
  const double v = real_arg(a, i, kind);
  return v == 0 ? "00" : std::to_string(static_cast<long>(v));
}

void arity(std::span<const FactoryArg> a, std::size_t lo, std::size_t hi, const char* kind) {
  if (a.size() < lo || a.size() > hi)
    throw PreconditionError(std::string(kind) + ": wrong number of arguments (" + std::to_string(a.size()) + ")");
}

using Builder = std::function<Qobj(std::span<const FactoryArg>)>;

const std::map<std::string, Builder, std::less<>>& state_table() {
  static const std::map<std::string, Builder, std::less<>> t{
      {"basis", [](auto a) { arity(a, 2, 2, "basis"); return basis(int_arg(a, 0, "basis"), int_arg(a, 1, "basis")); }},
      {"fock", [](auto a) { arity(a, 2, 2, "fock"); return basis(int_arg(a, 0, "fock"), int_arg(a, 1, "fock")); }},
      {"coherent", [](auto a) { arity(a, 2, 2, "coherent"); return coherent(int_arg(a, 0, "coherent"), num_arg(a, 1, "coherent")); }},
      {"fock_dm", [](auto a) { arity(a, 2, 2, "fock_dm"); return fock_dm(int_arg(a, 0, "fock_dm"), int_arg(a, 1, "fock_dm")); }},
      {"coherent_dm", [](auto a) { arity(a, 2, 2, "coherent_dm"); return coherent_dm(int_arg(a, 0, "coherent_dm"), num_arg(a, 1, "coherent_dm")); }},
      {"thermal_dm", [](auto a) { arity(a, 2, 2, "thermal_dm"); return thermal_dm(int_arg(a, 0, "thermal_dm"), real_arg(a, 1, "thermal_dm")); }},
      {"maximally_mixed_dm", [](auto a) { arity(a, 1, 1, "maximally_mixed_dm"); return maximally_mixed_dm(int_arg(a, 0, "maximally_mixed_dm")); }},
      {"projection", [](auto a) { arity(a, 3, 3, "projection"); return projection(int_arg(a, 0, "projection"), int_arg(a, 1, "projection"), int_arg(a, 2, "projection")); }},
      {"bell_state", [](auto a) { arity(a, 0, 1, "bell_state"); return a.empty() ? bell_state("00") : bell_state(str_arg(a, 0, "bell_state")); }},
      {"singlet_state", [](auto a) { arity(a, 0, 0, "singlet_state"); return singlet_state(); }},
      {"ghz_state", [](auto a) { arity(a, 0, 1, "ghz_state"); return ghz_state(a.empty() ? 3 : int_arg(a, 0, "ghz_state")); }},
      {"w_state", [](auto a) { arity(a, 0, 1, "w_state"); return w_state(a.empty() ? 3 : int_arg(a, 0, "w_state")); }},
      {"spin_state", [](auto a) { arity(a, 2, 2, "spin_state"); return spin_state(real_arg(a, 0, "spin_state"), real_arg(a, 1, "spin_state")); }},
      {"spin_coherent", [](auto a) { arity(a, 3, 3, "spin_coherent"); return spin_coherent(real_arg(a, 0, "spin_coherent"), real_arg(a, 1, "spin_coherent"), real_arg(a, 2, "spin_coherent")); }},
  };
  return t;
}

const std::map<std::string, Builder, std::less<>>& oper_table() {
  static const std::map<std::string, Builder, std::less<>> t{
      {"identity", [](auto a) { arity(a, 1, 1, "identity"); return qeye(int_arg(a, 0, "identity")); }},
      {"qeye", [](auto a) { arity(a, 1, 1, "qeye"); return qeye(int_arg(a, 0, "qeye")); }},
      {"qzero", [](auto a) { arity(a, 1, 1, "qzero"); return qzero(int_arg(a, 0, "qzero")); }},
      {"destroy", [](auto a) { arity(a, 1, 1, "destroy"); return destroy(int_arg(a, 0, "destroy")); }},
      {"create", [](auto a) { arity(a, 1, 1, "create"); return create(int_arg(a, 0, "create")); }},
      {"num", [](auto a) { arity(a, 1, 1, "num"); return num(int_arg(a, 0, "num")); }},
      {"position", [](auto a) { arity(a, 1, 1, "position"); return position(int_arg(a, 0, "position")); }},
      {"momentum", [](auto a) { arity(a, 1, 1, "momentum"); return momentum(int_arg(a, 0, "momentum")); }},
      {"displace", [](auto a) { arity(a, 2, 2, "displace"); return displace(int_arg(a, 0, "displace"), num_arg(a, 1, "displace")); }},
      {"squeeze", [](auto a) { arity(a, 2, 2, "squeeze"); return squeeze(int_arg(a, 0, "squeeze"), num_arg(a, 1, "squeeze")); }},
      {"sigmax", [](auto a) { arity(a, 0, 0, "sigmax"); return sigmax(); }},
      {"sigmay", [](auto a) { arity(a, 0, 0, "sigmay"); return sigmay(); }},
      {"sigmaz", [](auto a) { arity(a, 0, 0, "sigmaz"); return sigmaz(); }},
      {"sigmap", [](auto a) { arity(a, 0, 0, "sigmap"); return sigmap(); }},
      {"sigmam", [](auto a) { arity(a, 0, 0, "sigmam"); return sigmam(); }},
      {"jmat", [](auto a) {
         arity(a, 2, 2, "jmat");
         const auto w = str_arg(a, 1, "jmat");
         if (w.size() != 1) throw RangeError("jmat: component must be one of x, y, z, +, -");
         return jmat(real_arg(a, 0, "jmat"), w[0]);
       }},
      {"spin_Jx", [](auto a) { arity(a, 1, 1, "spin_Jx"); return spin_Jx(real_arg(a, 0, "spin_Jx")); }},
      {"spin_Jy", [](auto a) { arity(a, 1, 1, "spin_Jy"); return spin_Jy(real_arg(a, 0, "spin_Jy")); }},
      {"spin_Jz", [](auto a) { arity(a, 1, 1, "spin_Jz"); return spin_Jz(real_arg(a, 0, "spin_Jz")); }},
      {"spin_Jp", [](auto a) { arity(a, 1, 1, "spin_Jp"); return spin_Jp(real_arg(a, 0, "spin_Jp")); }},
      {"spin_Jm", [](auto a) { arity(a, 1, 1, "spin_Jm"); return spin_Jm(real_arg(a, 0, "spin_Jm")); }},
  };
  return t;
}

}  // namespace

bool is_state_kind(std::string_view kind) { return state_table().count(kind) != 0; }
bool is_operator_kind(std::string_view kind) { return oper_table().count(kind) != 0; }

Qobj make_state(std::string_view kind, std::span<const FactoryArg> args) {
  const auto& t = state_table();
  auto it = t.find(kind);
  if (it == t.end()) throw PreconditionError("unknown state kind '" + std::string(kind) + "'");
  return it->second(args);
}

Qobj make_operator(std::string_view kind, std::span<const FactoryArg> args) {
  const auto& t = oper_table();
  auto it = t.find(kind);
  if (it == t.end()) throw PreconditionError("unknown operator kind '" + std::string(kind) + "'");
  return it->second(args);
}

}  // namespace openq
