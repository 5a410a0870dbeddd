#include "openq/heom/heom.hpp"

#include <chrono>
#include <cmath>
#include <map>

#include "openq/errors.hpp"

namespace openq {

AdoIndexSet::AdoIndexSet(std::size_t n_exponents, std::size_t cutoff) : nexp_(n_exponents), cutoff_(cutoff) {
  if (cutoff > 65535) throw PreconditionError("AdoIndexSet: cutoff too large");
  // graded lexicographic: all labels of total L, ascending lexicographically, for L = 0..cutoff
  std::vector<std::uint16_t> cur(nexp_, 0);
  labels_.push_back(cur);
  for (std::size_t total = 1; total <= cutoff && nexp_ > 0; ++total) {
    // enumerate compositions of `total` into nexp_ parts in lexicographic order
    std::vector<std::uint16_t> n(nexp_, 0);
    n[nexp_ - 1] = static_cast<std::uint16_t>(total);
    for (;;) {
      labels_.push_back(n);
      // next composition: find rightmost position i < last with a nonzero suffix to move from
      std::size_t i = nexp_ - 1;
      while (i > 0 && n[i] == 0) --i;
      if (i == 0) break;
      // move one unit from the suffix into position i-1, push the rest of the suffix to the end
      const std::uint16_t rest = static_cast<std::uint16_t>(n[i] - 1);
      n[i] = 0;
      ++n[i - 1];
      n[nexp_ - 1] = rest;
    }
  }
  std::map<std::vector<std::uint16_t>, std::size_t> lookup;
  for (std::size_t i = 0; i < labels_.size(); ++i) lookup.emplace(labels_[i], i);
  up_.assign(labels_.size() * nexp_, none);
  down_.assign(labels_.size() * nexp_, none);
  for (std::size_t i = 0; i < labels_.size(); ++i)
    for (std::size_t k = 0; k < nexp_; ++k) {
      auto lab = labels_[i];
      if (level(i) < cutoff_) {
        ++lab[k];
        up_[i * nexp_ + k] = lookup.at(lab);
        --lab[k];
      }
      if (lab[k] > 0) {
        --lab[k];
        down_[i * nexp_ + k] = lookup.at(lab);
      }
    }
}

std::size_t AdoIndexSet::level(std::size_t i) const {
  std::size_t s = 0;
  for (auto x : labels_[i]) s += x;
  return s;
}

std::size_t AdoIndexSet::find(const std::vector<std::uint16_t>& label) const {
  if (label.size() != nexp_) return none;
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  return none;
}

HeomBath HeomBath::from_env(const BosonicEnvironment& env, const Qobj& q, std::size_t nk, bool merge) {
  auto e = matsubara_decompose(env, nk);
  return {q, merge ? combine(e) : e};
}

namespace {

struct FlatExp {
  std::size_t bath;
  bool real;
  cplx c, gamma;
};

// Append the nonzeros of s (d^2 x d^2) at block (bi, bj), scaled.
void put_block(std::vector<data::Triplet>& t, const DataMatrix& s, std::size_t bi, std::size_t bj, std::size_t dd,
               cplx scale) {
  const auto& c = s.csr();
  for (std::size_t r = 0; r < dd; ++r)
    for (std::size_t p = c.row_ptr[r]; p < c.row_ptr[r + 1]; ++p)
      t.push_back({bi * dd + r, bj * dd + c.col_idx[p], scale * c.values[p]});
}

}  // namespace

Hierarchy hierarchy_build(const Qobj& h, const std::vector<HeomBath>& baths, std::size_t cutoff) {
  if (!h.isoper() || h.rows() != h.cols()) throw DimensionError("hierarchy_build: H must be a square operator");
  std::vector<FlatExp> exps;
  std::vector<DataMatrix> comm, anti;  // per bath: [Q, .] and {Q, .}
  for (std::size_t b = 0; b < baths.size(); ++b) {
    const auto& q = baths[b].q;
    if (q.dims() != h.dims()) throw DimensionError("hierarchy_build: coupling operator dims differ from H");
    if (!q.isherm()) throw PreconditionError("hierarchy_build: coupling operator must be Hermitian");
    comm.push_back(data::convert((spre(q) - spost(q)).data(), Format::CSR));
    anti.push_back(data::convert((spre(q) + spost(q)).data(), Format::CSR));
    for (const auto& e : baths[b].exps.real) exps.push_back({b, true, e.c, e.gamma});
    for (const auto& e : baths[b].exps.imag) exps.push_back({b, false, e.c, e.gamma});
  }
  for (const auto& e : exps)
    if (!(e.gamma.real() > 0)) throw PreconditionError("hierarchy_build: every exponent must decay (Re gamma > 0)");

  const std::size_t d = h.rows(), dd = d * d;
  AdoIndexSet idx(exps.size(), cutoff);
  const auto lh = data::convert((cplx(0, -1) * (spre(h) - spost(h))).data(), Format::CSR);
  std::vector<data::Triplet> t;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& lab = idx.label(i);
    put_block(t, lh, i, i, dd, 1.0);
    cplx damp = 0.0;
    for (std::size_t k = 0; k < exps.size(); ++k) damp += double(lab[k]) * exps[k].gamma;
    if (damp != 0.0)
      for (std::size_t r = 0; r < dd; ++r) t.push_back({i * dd + r, i * dd + r, -damp});
    for (std::size_t k = 0; k < exps.size(); ++k) {
      const auto& e = exps[k];
      if (const std::size_t j = idx.down(i, k); j != AdoIndexSet::none) {
        const double nk = lab[k];
        // real part: commutator; imaginary part: anticommutator
        if (e.real)
          put_block(t, comm[e.bath], i, j, dd, cplx(0, -1) * e.c * nk);
        else
          put_block(t, anti[e.bath], i, j, dd, e.c * nk);
      }
      if (const std::size_t j = idx.up(i, k); j != AdoIndexSet::none) put_block(t, comm[e.bath], i, j, dd, cplx(0, -1));
    }
  }
  Hierarchy hy{DataMatrix::from_triplets(idx.size() * dd, idx.size() * dd, std::move(t), Format::CSR), std::move(idx), d,
               h.dims()};
  return hy;
}

Hierarchy hierarchy_build(const Qobj& h, const Qobj& q, const ExponentSet& exps, std::size_t cutoff) {
  return hierarchy_build(h, std::vector<HeomBath>{{q, exps}}, cutoff);
}

Qobj HeomResult::ado(std::size_t i) const {
  if (!hierarchy) throw PreconditionError("HeomResult: no hierarchy");
  const std::size_t dd = hierarchy->d * hierarchy->d;
  if ((i + 1) * dd > final_ados.size()) throw RangeError("HeomResult: ADO index out of range");
  std::vector<cplx> v(final_ados.begin() + std::ptrdiff_t(i * dd), final_ados.begin() + std::ptrdiff_t((i + 1) * dd));
  return Qobj(DataMatrix::from_dense(hierarchy->d, hierarchy->d, std::move(v)), hierarchy->oper_dims);
}

HeomResult heomsolve(const Qobj& h, const std::vector<HeomBath>& baths, const Qobj& rho0,
                     std::span<const double> tlist, std::size_t cutoff, const std::vector<Qobj>& e_ops,
                     const HeomOptions& opts) {
  const auto clock0 = std::chrono::steady_clock::now();
  const Qobj rho = rho0.isket() ? ket2dm(rho0) : rho0;
  if (!rho.isoper() || rho.dims() != h.dims()) throw DimensionError("heomsolve: initial state dims differ from H");
  auto hy = std::make_shared<const Hierarchy>(hierarchy_build(h, baths, cutoff));
  const std::size_t d = hy->d, dd = d * d;
  std::vector<cplx> y0(hy->index.size() * dd);
  const auto r0 = rho.full();
  std::copy(r0.begin(), r0.end(), y0.begin());
  const DataMatrix& gen = hy->generator;
  OdeRhs rhs = [&gen](double, std::span<const cplx> y, std::span<cplx> dy) { data::matvec(gen, y, dy); };
  if (tlist.empty()) throw PreconditionError("heomsolve: empty tlist");
  std::vector<double> targets(tlist.begin(), tlist.end());
  const auto ys = integrate(rhs, y0, tlist.front(), targets, opts.integrator);

  HeomResult res;
  res.hierarchy = hy;
  res.times = targets;
  res.stats.solver = "heomsolve";
  const ExpectTable table(e_ops, d, true);
  res.expect.assign(e_ops.size(), std::vector<cplx>(targets.size()));
  const bool store = opts.store_states || e_ops.empty();
  for (std::size_t k = 0; k < ys.size(); ++k) {
    std::span<const cplx> lvl0(ys[k].data(), dd);
    for (std::size_t e = 0; e < e_ops.size(); ++e) res.expect[e][k] = table(e, lvl0);
    if (store) res.states.push_back(dm_from_vec(lvl0, rho.dims()));
  }
  res.final_ados = ys.back();
  res.final_state = dm_from_vec(std::span<const cplx>(res.final_ados.data(), dd), rho.dims());
  res.stats.run_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
  return res;
}

std::size_t heom_cutoff_hint(const ExponentSet& exps, double w_s) {
  if (exps.size() == 0) throw PreconditionError("heom_cutoff_hint: empty exponent set");
  if (!(w_s > 0)) throw PreconditionError("heom_cutoff_hint: system frequency must be positive");
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : exps.real) m = std::min(m, e.gamma.real());
  for (const auto& e : exps.imag) m = std::min(m, e.gamma.real());
  if (!(m > 0)) throw PreconditionError("heom_cutoff_hint: non-decaying exponent");
  return static_cast<std::size_t>(std::ceil(w_s / m));
}

}  // namespace openq
