#include "openq/heom/environment.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <cmath>

#include "openq/errors.hpp"

namespace openq {

BosonicEnvironment BosonicEnvironment::drude_lorentz(double temperature, double lam, double gamma) {
  if (temperature < 0 || lam < 0 || !(gamma > 0)) throw PreconditionError("drude_lorentz: need T >= 0, lam >= 0, gamma > 0");
  BosonicEnvironment e;
  e.kind = EnvKind::drude_lorentz;
  e.temperature = temperature;
  e.lam = lam;
  e.gamma = gamma;
  return e;
}

BosonicEnvironment BosonicEnvironment::underdamped(double temperature, double lam, double gamma, double w0) {
  if (temperature < 0 || !(gamma > 0) || !(w0 > 0)) throw PreconditionError("underdamped: need T >= 0, Gamma > 0, w0 > 0");
  BosonicEnvironment e;
  e.kind = EnvKind::underdamped;
  e.temperature = temperature;
  e.lam = lam;
  e.gamma = gamma;
  e.w0 = w0;
  return e;
}

BosonicEnvironment BosonicEnvironment::ohmic(double temperature, double alpha, double wc, double s) {
  if (temperature < 0 || alpha < 0 || !(wc > 0) || !(s > 0)) throw PreconditionError("ohmic: need T >= 0, alpha >= 0, wc > 0, s > 0");
  BosonicEnvironment e;
  e.kind = EnvKind::ohmic;
  e.temperature = temperature;
  e.alpha = alpha;
  e.wc = wc;
  e.s = s;
  return e;
}

BosonicEnvironment BosonicEnvironment::custom(double temperature, std::function<double(double)> j) {
  if (temperature < 0) throw PreconditionError("custom environment: need T >= 0");
  if (!j) throw PreconditionError("custom environment: missing spectral density");
  BosonicEnvironment e;
  e.kind = EnvKind::custom;
  e.temperature = temperature;
  e.custom_j = std::move(j);
  return e;
}

double BosonicEnvironment::spectral_density(double w) const {
  switch (kind) {
    case EnvKind::drude_lorentz: return 2 * lam * gamma * w / (gamma * gamma + w * w);
    case EnvKind::underdamped: {
      const double d = w0 * w0 - w * w;
      return lam * lam * gamma * w / (d * d + gamma * gamma * w * w);
    }
    case EnvKind::ohmic:
      return w == 0 ? 0.0 : std::copysign(alpha * std::pow(std::abs(w), s) / std::pow(wc, s - 1), w) * std::exp(-std::abs(w) / wc);
    case EnvKind::custom: return custom_j(w);
  }
  return 0.0;
}

namespace {

// J(w) coth(beta w / 2) for w > 0, finite at w -> 0.
double j_coth(const BosonicEnvironment& env, double w) {
  if (env.temperature == 0) return env.spectral_density(w);
  const double b = env.beta();
  if (w < 1e-12) {
    const double h = 1e-8;
    return 2.0 / b * env.spectral_density(h) / h;
  }
  return env.spectral_density(w) * (1.0 + 2.0 / std::expm1(b * w));
}

}  // namespace

double BosonicEnvironment::power_spectrum(double w) const {
  if (temperature == 0) return w > 0 ? 2 * spectral_density(w) : 0.0;
  const double b = beta();
  if (w == 0) {
    const double h = 1e-8;
    return 2.0 / b * spectral_density(h) / h;
  }
  if (w > 0) return 2 * spectral_density(w) * (1.0 + 1.0 / std::expm1(b * w));
  return 2 * spectral_density(-w) / std::expm1(-b * w);
}

cplx BosonicEnvironment::correlation(double t, double rel_tol) const {
  auto fr = [this](double w) { return j_coth(*this, w) / M_PI; };
  auto fi = [this](double w) { return spectral_density(w) / M_PI; };
  double re = 0, im = 0, err_re = 0, err_im = 0;
  try {
    if (t == 0) {
      boost::math::quadrature::exp_sinh<double> q;
      re = q.integrate(fr, 0.0, std::numeric_limits<double>::infinity(), rel_tol, &err_re);
      err_re /= std::max(std::abs(re), 1e-300);
    } else {
      boost::math::quadrature::ooura_fourier_cos<double> qc(rel_tol);
      boost::math::quadrature::ooura_fourier_sin<double> qs(rel_tol);
      std::tie(re, err_re) = qc.integrate(fr, t);
      std::tie(im, err_im) = qs.integrate(fi, t);
      im = -im;
    }
  } catch (const std::exception& e) {
    throw ConvergenceError(std::string("correlation: quadrature failed: ") + e.what());
  }
  if (!std::isfinite(re) || !std::isfinite(im) || err_re > 100 * rel_tol || err_im > 100 * rel_tol)
    throw ConvergenceError("correlation: quadrature did not converge");
  return {re, im};
}

cplx ExponentSet::correlation(double t) const {
  cplx s = 0.0;
  for (const auto& e : real) s += e.c * std::exp(-e.gamma * t);
  cplx si = 0.0;
  for (const auto& e : imag) si += e.c * std::exp(-e.gamma * t);
  return s + cplx(0, 1) * si;
}

namespace {

cplx coth(cplx z) { return std::cosh(z) / std::sinh(z); }

}  // namespace

ExponentSet matsubara_decompose(const BosonicEnvironment& env, std::size_t nk) {
  if (env.kind != EnvKind::drude_lorentz && env.kind != EnvKind::underdamped)
    throw UnsupportedError("matsubara_decompose: only drude_lorentz and underdamped have a closed-form series; "
                           "supply a custom ExponentSet instead");
  if (!(env.temperature > 0))
    throw UnsupportedError("matsubara_decompose: the series needs T > 0; supply a fitted ExponentSet at T = 0");
  const double b = env.beta();
  ExponentSet out;
  // C_R = -i sum_{poles p in LHP} Res[J coth(beta w/2) e^{-iwt}], imaginary part -sum Res[J e^{-iwt}]
  if (env.kind == EnvKind::drude_lorentz) {
    const double lam = env.lam, g = env.gamma;
    out.real.push_back({lam * g / std::tan(b * g / 2), g});
    out.imag.push_back({-lam * g, g});
    for (std::size_t k = 1; k <= nk; ++k) {
      const double nu = 2 * M_PI * double(k) / b;
      out.real.push_back({4 * lam * g * nu / (b * (nu * nu - g * g)), nu});
    }
  } else {
    const double lam = env.lam, g = env.gamma, w0 = env.w0;
    const double om2 = w0 * w0 - g * g / 4;
    if (!(om2 > 0)) throw UnsupportedError("matsubara_decompose: overdamped regime (w0 <= Gamma/2) not supported");
    const double om = std::sqrt(om2);
    // LHP poles +-Om - i g/2; UHP poles +-Om + i g/2
    const cplx poles[4] = {{om, -g / 2}, {-om, -g / 2}, {om, g / 2}, {-om, g / 2}};
    for (int p = 0; p < 2; ++p) {
      cplx denom = 1.0;
      for (int q = 0; q < 4; ++q)
        if (q != p) denom *= poles[p] - poles[q];
      const cplx res_j = lam * lam * g * poles[p] / denom;  // residue of J at the pole
      const cplx rate = cplx(0, 1) * poles[p];
      out.real.push_back({cplx(0, -1) * res_j * coth(b * poles[p] / 2.0), rate});
      out.imag.push_back({-res_j, rate});
    }
    for (std::size_t k = 1; k <= nk; ++k) {
      const double nu = 2 * M_PI * double(k) / b;
      const double a = w0 * w0 + nu * nu;
      out.real.push_back({-2 * lam * lam * g * nu / (b * (a * a - g * g * nu * nu)), nu});
    }
  }
  return out;
}

ExponentSet combine(const ExponentSet& e, double tol) {
  auto merge = [tol](const std::vector<Exponent>& in) {
    std::vector<Exponent> out;
    for (const auto& x : in) {
      bool done = false;
      for (auto& y : out)
        if (std::abs(y.gamma - x.gamma) <= tol) {
          y.c += x.c;
          done = true;
          break;
        }
      if (!done) out.push_back(x);
    }
    return out;
  };
  return {merge(e.real), merge(e.imag)};
}

}  // namespace openq
