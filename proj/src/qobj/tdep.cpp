#include "openq/tdep.hpp"

#include <algorithm>
#include <cmath>

#include "openq/errors.hpp"

namespace openq {

// ---- spline ----------------------------------------------------------------------

CubicSpline::CubicSpline(std::vector<double> times, std::vector<cplx> values)
    : t_(std::move(times)), y_(std::move(values)) {
  const std::size_t n = t_.size();
  if (n < 2) throw PreconditionError("spline: need at least two knots");
  if (y_.size() != n) throw DimensionError("spline: times and values differ in length");
  for (std::size_t i = 1; i < n; ++i)
    if (!(t_[i] > t_[i - 1])) throw PreconditionError("spline: knot times must be strictly increasing");

  // natural boundary: M_0 = M_{n-1} = 0; Thomas algorithm on the interior
  m_.assign(n, cplx{0.0});
  if (n == 2) return;
  const std::size_t k = n - 2;
  std::vector<double> diag(k), upper(k), lower(k);
  std::vector<cplx> rhs(k);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = t_[i] - t_[i - 1], h1 = t_[i + 1] - t_[i];
    lower[i - 1] = h0;
    diag[i - 1] = 2.0 * (h0 + h1);
    upper[i - 1] = h1;
    rhs[i - 1] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m_[k] = rhs[k - 1] / diag[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) m_[i + 1] = (rhs[i] - upper[i] * m_[i + 2]) / diag[i];
}

cplx CubicSpline::operator()(double t) const {
  if (t < t_.front() || t > t_.back())
    throw RangeError("spline: t = " + std::to_string(t) + " outside [" + std::to_string(t_.front()) + ", " +
                     std::to_string(t_.back()) + "]");
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  std::size_t i = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
  if (i >= t_.size() - 1) i = t_.size() - 2;
  const double h = t_[i + 1] - t_[i];
  const double a = (t_[i + 1] - t) / h;
  const double b = (t - t_[i]) / h;
  return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h * h / 6.0);
}

// ---- coefficient -------------------------------------------------------------------

Coefficient Coefficient::constant(cplx v) {
  Coefficient c;
  c.is_const_ = true;
  c.value_ = v;
  c.fn_ = nullptr;
  return c;
}

Coefficient Coefficient::function(Fn f) {
  if (!f) throw PreconditionError("coefficient: empty function");
  Coefficient c = constant(0.0);
  c.is_const_ = false;
  c.fn_ = std::move(f);
  return c;
}

Coefficient Coefficient::spline(std::vector<double> times, std::vector<cplx> values) {
  auto sp = std::make_shared<const CubicSpline>(std::move(times), std::move(values));
  return function([sp](double t, const Args&) { return (*sp)(t); });
}

cplx Coefficient::operator()(double t, const Args& args) const { return is_const_ ? value_ : fn_(t, args); }

Coefficient Coefficient::conj() const {
  if (is_const_) return constant(std::conj(value_));
  auto f = fn_;
  return function([f](double t, const Args& a) { return std::conj(f(t, a)); });
}

Coefficient operator*(const Coefficient& a, const Coefficient& b) {
  if (a.is_const_ && b.is_const_) return Coefficient::constant(a.value_ * b.value_);
  if (a.is_const_) return a.value_ * b;
  if (b.is_const_) return b.value_ * a;
  auto fa = a.fn_, fb = b.fn_;
  return Coefficient::function([fa, fb](double t, const Args& x) { return fa(t, x) * fb(t, x); });
}

Coefficient operator*(cplx s, const Coefficient& a) {
  if (a.is_const_) return Coefficient::constant(s * a.value_);
  auto f = a.fn_;
  return Coefficient::function([f, s](double t, const Args& x) { return s * f(t, x); });
}

// ---- QobjEvo --------------------------------------------------------------------------

QobjEvo::QobjEvo(const Qobj& constant) { add_term(constant, Coefficient::constant(1.0)); }
QobjEvo::QobjEvo(const Qobj& op, Coefficient c) { add_term(op, c); }
QobjEvo::QobjEvo(std::vector<EvoTerm> terms) {
  if (terms.empty()) throw DimensionError("QobjEvo: needs at least one term");
  for (const auto& t : terms) add_term(t.op, t.coeff);
}

void QobjEvo::add_term(const Qobj& op, const Coefficient& c) {
  if (!op.isoper() && !op.issuper()) throw DimensionError("QobjEvo: terms must be operators or superoperators");
  if (!has_dims_) {
    dims_ = op.dims();
    super_ = op.issuper();
    has_dims_ = true;
  } else if (op.dims() != dims_) {
    throw DimensionError("QobjEvo: term dims " + op.dims().str() + " differ from " + dims_.str());
  }
  if (c.is_constant()) {
    const Qobj scaled = c.constant_value() * op;
    const_ = has_const_ ? const_ + scaled : scaled;
    has_const_ = true;
  } else {
    terms_.push_back({op, c});
  }
}

std::size_t QobjEvo::size() const { return dims_.nrows(); }

Qobj QobjEvo::operator()(double t, const Args& args) const {
  Qobj out = has_const_ ? const_ : 0.0 * terms_.front().op;
  for (const auto& term : terms_) out = out + term.coeff(t, args) * term.op;
  return out;
}

void QobjEvo::matvec(double t, std::span<const cplx> x, std::span<cplx> y, const Args& args) const {
  if (has_const_)
    data::matvec(const_.data(), x, y);
  else
    std::fill(y.begin(), y.end(), cplx{0.0});
  for (const auto& term : terms_) {
    const cplx c = term.coeff(t, args);
    if (c != cplx{0.0}) data::matvec(term.op.data(), x, y, c, 1.0);
  }
}

QobjEvo QobjEvo::dag() const {
  QobjEvo out;
  if (has_const_) out.add_term(const_.dag(), Coefficient::constant(1.0));
  for (const auto& t : terms_) out.add_term(t.op.dag(), t.coeff.conj());
  return out;
}

QobjEvo QobjEvo::to(Format f) const {
  QobjEvo out;
  if (has_const_) out.add_term(const_.to(f), Coefficient::constant(1.0));
  for (const auto& t : terms_) out.add_term(t.op.to(f), t.coeff);
  return out;
}

QobjEvo operator+(const QobjEvo& a, const QobjEvo& b) {
  QobjEvo out = a;
  if (b.has_const_) out.add_term(b.const_, Coefficient::constant(1.0));
  for (const auto& t : b.terms_) out.add_term(t.op, t.coeff);
  return out;
}

QobjEvo operator-(const QobjEvo& a, const QobjEvo& b) { return a + cplx{-1.0} * b; }

QobjEvo operator*(cplx s, const QobjEvo& a) {
  QobjEvo out;
  if (a.has_const_) out.add_term(s * a.const_, Coefficient::constant(1.0));
  for (const auto& t : a.terms_) out.add_term(t.op, s * t.coeff);
  return out;
}

QobjEvo operator*(const QobjEvo& a, const QobjEvo& b) {
  std::vector<EvoTerm> ta, tb;
  if (a.has_const_) ta.push_back({a.const_, Coefficient::constant(1.0)});
  ta.insert(ta.end(), a.terms_.begin(), a.terms_.end());
  if (b.has_const_) tb.push_back({b.const_, Coefficient::constant(1.0)});
  tb.insert(tb.end(), b.terms_.begin(), b.terms_.end());
  QobjEvo out;
  for (const auto& x : ta)
    for (const auto& y : tb) out.add_term(x.op * y.op, x.coeff * y.coeff);
  return out;
}

QobjEvo qevo_from_list(const std::vector<EvoItem>& items) {
  std::vector<EvoTerm> terms;
  for (const auto& it : items) {
    if (const auto* q = std::get_if<Qobj>(&it))
      terms.push_back({*q, Coefficient::constant(1.0)});
    else
      terms.push_back(std::get<EvoTerm>(it));
  }
  return QobjEvo(std::move(terms));
}

QobjEvo qevo_liouvillian(const std::optional<QobjEvo>& h, const std::vector<QobjEvo>& c_ops) {
  std::vector<EvoTerm> out;
  if (h) {
    if (h->issuper()) {
      if (h->has_constant()) out.push_back({h->constant_part(), Coefficient::constant(1.0)});
      for (const auto& t : h->terms()) out.push_back(t);
    } else {
      if (h->has_constant()) out.push_back({liouvillian(h->constant_part()), Coefficient::constant(1.0)});
      for (const auto& t : h->terms()) out.push_back({liouvillian(t.op), t.coeff});
    }
  }
  for (const auto& c : c_ops) {
    if (c.issuper()) {
      if (c.has_constant()) out.push_back({c.constant_part(), Coefficient::constant(1.0)});
      for (const auto& t : c.terms()) out.push_back(t);
      continue;
    }
    // D[sum_k f_k c_k] = sum_{k,l} f_k conj(f_l) (c_k . c_l^dag - 1/2 {c_l^dag c_k, .})
    std::vector<EvoTerm> parts;
    if (c.has_constant()) parts.push_back({c.constant_part(), Coefficient::constant(1.0)});
    parts.insert(parts.end(), c.terms().begin(), c.terms().end());
    for (const auto& k : parts)
      for (const auto& l : parts) {
        const Qobj ld = l.op.dag();
        const Qobj prod = ld * k.op;
        const Qobj sup = sprepost(k.op, ld) - 0.5 * spre(prod) - 0.5 * spost(prod);
        out.push_back({sup, k.coeff * l.coeff.conj()});
      }
  }
  if (out.empty()) throw DimensionError("qevo_liouvillian: needs a Hamiltonian or a collapse operator");
  return QobjEvo(std::move(out));
}

}  // namespace openq
