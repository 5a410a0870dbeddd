#include "openq/enr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "openq/errors.hpp"
#include "openq/factories.hpp"
#include "openq/qobj.hpp"

namespace openq {

namespace {

void enumerate(const std::vector<std::size_t>& dims, std::size_t budget, std::size_t pos,
               std::vector<std::size_t>& cur, std::vector<std::vector<std::size_t>>& out) {
  if (pos == dims.size()) {
    out.push_back(cur);
    return;
  }
  for (std::size_t n = 0; n < dims[pos] && n <= budget; ++n) {
    cur[pos] = n;
    enumerate(dims, budget - n, pos + 1, cur, out);
  }
  cur[pos] = 0;
}

std::size_t total(const std::vector<std::size_t>& v) { return std::accumulate(v.begin(), v.end(), std::size_t{0}); }

}  // namespace

std::shared_ptr<const EnrSpace> enr_space(const std::vector<std::size_t>& dims, std::size_t n_exc) {
  if (dims.empty()) throw DimensionError("enr_space: need at least one subsystem");
  for (std::size_t d : dims)
    if (d == 0) throw DimensionError("enr_space: subsystem dimensions must be positive");
  auto sp = std::make_shared<EnrSpace>();
  sp->dims = dims;
  sp->n_exc = n_exc;
  std::vector<std::size_t> cur(dims.size(), 0);
  enumerate(dims, n_exc, 0, cur, sp->states);
  std::stable_sort(sp->states.begin(), sp->states.end(), [](const auto& a, const auto& b) {
    const auto ta = total(a), tb = total(b);
    return ta != tb ? ta < tb : a < b;
  });
  for (std::size_t i = 0; i < sp->states.size(); ++i) sp->index.emplace(sp->states[i], i);
  return sp;
}

std::vector<Qobj> enr_destroy(const std::vector<std::size_t>& dims, std::size_t n_exc) {
  const auto sp = enr_space(dims, n_exc);
  const std::size_t n = sp->size();
  std::vector<Qobj> ops;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    std::vector<data::Triplet> t;
    for (std::size_t col = 0; col < n; ++col) {
      const auto& s = sp->states[col];
      if (s[i] == 0) continue;
      auto target = s;
      --target[i];
      t.push_back({sp->index.at(target), col, std::sqrt(static_cast<double>(s[i]))});
    }
    ops.emplace_back(DataMatrix::from_triplets(n, n, std::move(t), default_oper_format()),
                     Dimensions::oper(Space{sp}));
  }
  return ops;
}

Qobj enr_fock(const std::vector<std::size_t>& dims, std::size_t n_exc, const std::vector<std::size_t>& occupations) {
  const auto sp = enr_space(dims, n_exc);
  if (occupations.size() != dims.size()) throw RangeError("enr_fock: occupation tuple has wrong length");
  auto it = sp->index.find(occupations);
  if (it == sp->index.end()) throw RangeError("enr_fock: occupation tuple outside the restricted space");
  const std::size_t n = sp->size();
  std::vector<cplx> v(n);
  v[it->second] = 1.0;
  return Qobj(DataMatrix::from_dense(n, 1, std::move(v)), Dimensions::ket(Space{sp}));
}

Qobj enr_identity(const std::vector<std::size_t>& dims, std::size_t n_exc) {
  const auto sp = enr_space(dims, n_exc);
  return Qobj(DataMatrix::identity(sp->size(), default_oper_format()), Dimensions::oper(Space{sp}));
}

}  // namespace openq
