#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "openq/qobj.hpp"

namespace openq {

using Args = std::map<std::string, cplx, std::less<>>;

// Natural cubic spline through complex samples.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> times, std::vector<cplx> values);
  cplx operator()(double t) const;
  double t_min() const { return t_.front(); }
  double t_max() const { return t_.back(); }
  const std::vector<double>& times() const { return t_; }
  const std::vector<cplx>& values() const { return y_; }
  // Second derivative at knot i (zero at both ends).
  cplx second_derivative(std::size_t i) const { return m_[i]; }

 private:
  std::vector<double> t_;
  std::vector<cplx> y_;
  std::vector<cplx> m_;
};

// Scalar time dependence of a QobjEvo term.
class Coefficient {
 public:
  using Fn = std::function<cplx(double, const Args&)>;

  Coefficient() = default;  // constant 1
  static Coefficient constant(cplx v);
  static Coefficient function(Fn f);
  static Coefficient spline(std::vector<double> times, std::vector<cplx> values);

  cplx operator()(double t, const Args& args = {}) const;
  bool is_constant() const { return is_const_; }
  cplx constant_value() const { return value_; }

  Coefficient conj() const;
  friend Coefficient operator*(const Coefficient& a, const Coefficient& b);
  friend Coefficient operator*(cplx s, const Coefficient& a);

 private:
  bool is_const_ = true;
  cplx value_{1.0};
  Fn fn_;
};

struct EvoTerm {
  Qobj op;
  Coefficient coeff;
};

// Time-dependent operator sum_k c_k(t) Q_k. Constant terms are folded into a
// single cached Qobj.
class QobjEvo {
 public:
  QobjEvo() = default;
  QobjEvo(const Qobj& constant);
  QobjEvo(const Qobj& op, Coefficient c);
  explicit QobjEvo(std::vector<EvoTerm> terms);

  Qobj operator()(double t, const Args& args = {}) const;
  // y = L(t) x
  void matvec(double t, std::span<const cplx> x, std::span<cplx> y, const Args& args = {}) const;

  const Dimensions& dims() const { return dims_; }
  bool is_constant() const { return terms_.empty(); }
  bool has_constant() const { return has_const_; }
  const Qobj& constant_part() const { return const_; }
  const std::vector<EvoTerm>& terms() const { return terms_; }
  bool issuper() const { return super_; }
  std::size_t size() const;

  QobjEvo dag() const;
  QobjEvo to(Format f) const;

  friend QobjEvo operator+(const QobjEvo& a, const QobjEvo& b);
  friend QobjEvo operator-(const QobjEvo& a, const QobjEvo& b);
  friend QobjEvo operator*(const QobjEvo& a, const QobjEvo& b);
  friend QobjEvo operator*(cplx s, const QobjEvo& a);

 private:
  void add_term(const Qobj& op, const Coefficient& c);

  Dimensions dims_;
  bool super_ = false;
  bool has_const_ = false;
  bool has_dims_ = false;
  Qobj const_;
  std::vector<EvoTerm> terms_;
};

using EvoItem = std::variant<Qobj, EvoTerm>;
QobjEvo qevo_from_list(const std::vector<EvoItem>& items);

// Superoperator QobjEvo such that result(t) = liouvillian(H(t), [c(t) ...]).
QobjEvo qevo_liouvillian(const std::optional<QobjEvo>& h, const std::vector<QobjEvo>& c_ops);

}  // namespace openq
