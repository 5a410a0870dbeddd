#pragma once

#include <functional>
#include <vector>

#include "openq/qobj.hpp"

namespace openq {

enum class EnvKind { drude_lorentz, underdamped, ohmic, custom };

// Bosonic bath characterized by its spectral density J(w) and temperature.
struct BosonicEnvironment {
  EnvKind kind = EnvKind::custom;
  double temperature = 0.0;
  // drude_lorentz: lam, gamma   underdamped: lam, gamma (Gamma), w0   ohmic: alpha, wc, s
  double lam = 0, gamma = 0, w0 = 0, alpha = 0, wc = 0, s = 1;
  std::function<double(double)> custom_j;

  static BosonicEnvironment drude_lorentz(double temperature, double lam, double gamma);
  static BosonicEnvironment underdamped(double temperature, double lam, double gamma, double w0);
  static BosonicEnvironment ohmic(double temperature, double alpha, double wc, double s = 1.0);
  static BosonicEnvironment custom(double temperature, std::function<double(double)> j);

  double beta() const { return 1.0 / temperature; }
  double spectral_density(double w) const;
  // S(w) = 2 J(w) (n(w) + 1) for w > 0, 2 J(-w) n(-w) for w < 0.
  double power_spectrum(double w) const;
  // C(t) = int_0^inf dw J/pi (coth(beta w / 2) cos wt - i sin wt), by quadrature.
  cplx correlation(double t, double rel_tol = 1e-8) const;
};

struct Exponent {
  cplx c;
  cplx gamma;  // decay rate, Re > 0
};

// C(t) = sum_R c e^{-gamma t} + i sum_I c e^{-gamma t}, t >= 0.
struct ExponentSet {
  std::vector<Exponent> real;
  std::vector<Exponent> imag;

  std::size_t size() const { return real.size() + imag.size(); }
  cplx correlation(double t) const;
};

// Principal pole terms plus nk Matsubara terms (drude_lorentz, underdamped; T > 0).
ExponentSet matsubara_decompose(const BosonicEnvironment& env, std::size_t nk);

// Merge exponents of the same part whose rates agree within tol.
ExponentSet combine(const ExponentSet& e, double tol = 1e-10);

}  // namespace openq
