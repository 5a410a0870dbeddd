#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "openq/qobj.hpp"

namespace openq {

// Default storage for newly created operators (states are always Dense).
Format default_oper_format();
void set_default_oper_format(Format f);

// ---- states -----------------------------------------------------------------------
// basis(2, 0) is the excited (sigmaz = +1) state.

Qobj basis(std::size_t n, std::size_t k);
Qobj basis(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& ks);
inline Qobj fock(std::size_t n, std::size_t k) { return basis(n, k); }
Qobj coherent(std::size_t n, cplx alpha);
Qobj fock_dm(std::size_t n, std::size_t k);
Qobj coherent_dm(std::size_t n, cplx alpha);
Qobj thermal_dm(std::size_t n, double nbar);
Qobj maximally_mixed_dm(std::size_t n);
Qobj projection(std::size_t n, std::size_t i, std::size_t j);
Qobj bell_state(std::string_view which = "00");
Qobj singlet_state();
std::vector<Qobj> triplet_states();
Qobj ghz_state(std::size_t n = 3);
Qobj w_state(std::size_t n = 3);
Qobj spin_state(double j, double m);
Qobj spin_coherent(double j, double theta, double phi);

// ---- operators -------------------------------------------------------------------

Qobj qeye(std::size_t n);
Qobj qeye(const std::vector<std::size_t>& dims);
Qobj qzero(std::size_t n);
Qobj destroy(std::size_t n);
Qobj create(std::size_t n);
Qobj num(std::size_t n);
Qobj position(std::size_t n);  // (a + a^dag) / sqrt 2
Qobj momentum(std::size_t n);  // -i (a - a^dag) / sqrt 2, so [x, p] = i away from the cutoff
Qobj displace(std::size_t n, cplx alpha);
Qobj squeeze(std::size_t n, cplx z);
Qobj sigmax();
Qobj sigmay();
Qobj sigmaz();
Qobj sigmap();  // |0><1|, raises ground -> excited
Qobj sigmam();  // |1><0|
// which in {x, y, z, +, -}
Qobj jmat(double j, char which);
inline Qobj spin_Jx(double j) { return jmat(j, 'x'); }
inline Qobj spin_Jy(double j) { return jmat(j, 'y'); }
inline Qobj spin_Jz(double j) { return jmat(j, 'z'); }
inline Qobj spin_Jp(double j) { return jmat(j, '+'); }
inline Qobj spin_Jm(double j) { return jmat(j, '-'); }

// ---- name-based dispatch (used by the model-file front end) ------------------------

using FactoryArg = std::variant<cplx, std::string>;

Qobj make_state(std::string_view kind, std::span<const FactoryArg> args);
Qobj make_operator(std::string_view kind, std::span<const FactoryArg> args);
bool is_state_kind(std::string_view kind);
bool is_operator_kind(std::string_view kind);

}  // namespace openq
