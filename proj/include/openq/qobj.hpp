#pragma once

#include <atomic>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "openq/data/data_matrix.hpp"
#include "openq/enr.hpp"

namespace openq {

using data::DataMatrix;
using data::Format;

// One side (rows or columns) of a quantum object.
struct Space {
  std::vector<std::size_t> dims{1};
  std::shared_ptr<const EnrSpace> enr;  // set for excitation-restricted spaces

  Space() = default;
  Space(std::vector<std::size_t> d) : dims(std::move(d)) {}
  Space(std::initializer_list<std::size_t> d) : dims(d) {}
  explicit Space(std::shared_ptr<const EnrSpace> e) : dims(e->dims), enr(std::move(e)) {}

  std::size_t size() const;
  bool is_scalar() const;  // all subsystem dims equal 1
  bool operator==(const Space& o) const;
  bool operator!=(const Space& o) const { return !(*this == o); }
};

// rows/cols are the spaces of the underlying operator; a super_* flag means
// that side is the column-stacked vector space of operators on that space.
struct Dimensions {
  Space rows;
  Space cols;
  bool super_rows = false;
  bool super_cols = false;

  std::size_t nrows() const;
  std::size_t ncols() const;
  bool operator==(const Dimensions& o) const;
  bool operator!=(const Dimensions& o) const { return !(*this == o); }
  std::string str() const;

  static Dimensions oper(Space s) { return {s, s, false, false}; }
  static Dimensions ket(Space s) { return {std::move(s), Space{1}, false, false}; }
  static Dimensions super(Space s) { return {s, s, true, true}; }
};

enum class QobjKind { ket, bra, oper, super, operator_ket, operator_bra };
const char* kind_name(QobjKind k);

class Qobj {
 public:
  Qobj();
  explicit Qobj(DataMatrix data, std::optional<Dimensions> dims = std::nullopt);
  Qobj(const Qobj& o);
  Qobj(Qobj&& o) noexcept;
  Qobj& operator=(const Qobj& o);
  Qobj& operator=(Qobj&& o) noexcept;

  const DataMatrix& data() const { return data_; }
  const Dimensions& dims() const { return dims_; }
  QobjKind kind() const { return kind_; }
  std::size_t rows() const { return data_.rows(); }
  std::size_t cols() const { return data_.cols(); }
  Format format() const { return data_.format(); }

  bool isket() const { return kind_ == QobjKind::ket; }
  bool isbra() const { return kind_ == QobjKind::bra; }
  bool isoper() const { return kind_ == QobjKind::oper; }
  bool issuper() const { return kind_ == QobjKind::super; }
  bool isoperket() const { return kind_ == QobjKind::operator_ket; }
  bool isherm() const;  // cached, tolerance 1e-12

  Qobj to(Format f) const;
  Qobj dag() const;
  Qobj trans() const;
  Qobj conj() const;
  cplx tr() const;
  // 2-norm for kets/bras, trace norm for operators.
  double norm() const;
  Qobj unit() const;
  Qobj expm() const;
  Qobj tidyup(double atol = 1e-14) const;
  cplx operator()(std::size_t r, std::size_t c) const { return data_.at(r, c); }
  std::vector<cplx> full() const { return data_.to_vector(); }

  Qobj& operator+=(const Qobj& o);
  Qobj& operator-=(const Qobj& o);
  Qobj& operator*=(cplx s);

 private:
  DataMatrix data_;
  Dimensions dims_;
  QobjKind kind_ = QobjKind::oper;
  mutable std::atomic<int8_t> herm_{-1};
};

Qobj operator+(const Qobj& a, const Qobj& b);
Qobj operator-(const Qobj& a, const Qobj& b);
Qobj operator-(const Qobj& a);
Qobj operator*(const Qobj& a, const Qobj& b);
Qobj operator*(cplx s, const Qobj& a);
Qobj operator*(const Qobj& a, cplx s);
Qobj operator/(const Qobj& a, cplx s);

// Infers the kind for a given shape; throws DimensionError on inconsistency.
QobjKind infer_kind(const Dimensions& d, std::size_t nrows, std::size_t ncols);

// ---- structural operations ------------------------------------------------------

Qobj tensor(const std::vector<Qobj>& objs);
inline Qobj tensor(const Qobj& a, const Qobj& b) { return tensor(std::vector<Qobj>{a, b}); }
Qobj ptrace(const Qobj& q, std::vector<std::size_t> keep);
Qobj partial_transpose(const Qobj& rho, const std::vector<bool>& mask);
Qobj ket2dm(const Qobj& psi);
cplx expect(const Qobj& op, const Qobj& state);
cplx inner(const Qobj& a, const Qobj& b);  // <a|b> for kets
Qobj commutator(const Qobj& a, const Qobj& b, bool anti = false);

struct Eigenstates {
  std::vector<double> values;
  std::vector<Qobj> states;
};
Eigenstates eigenstates(const Qobj& h);

// ---- superoperators ---------------------------------------------------------------

// super_lr(A, B) vec(rho) = vec(A rho B); data = kron(B^T, A).
Qobj super_lr(const Qobj& a, const Qobj& b);
Qobj spre(const Qobj& a);
Qobj spost(const Qobj& b);
inline Qobj sprepost(const Qobj& a, const Qobj& b) { return super_lr(a, b); }
Qobj lindblad_dissipator(const Qobj& a);
Qobj liouvillian(const std::optional<Qobj>& h, const std::vector<Qobj>& c_ops = {});
Qobj operator_to_vector(const Qobj& op);
Qobj vector_to_operator(const Qobj& vec);

// ---- metrics ------------------------------------------------------------------------

double fidelity(const Qobj& a, const Qobj& b);
double tracedist(const Qobj& a, const Qobj& b);
double entropy_vn(const Qobj& rho, double base = 2.718281828459045);
double entropy_linear(const Qobj& rho);
double concurrence(const Qobj& rho);
double negativity(const Qobj& rho, std::size_t subsys, bool logarithmic = false);
double metric(const std::string& kind, const Qobj& a, const std::optional<Qobj>& b = std::nullopt);

}  // namespace openq
