#include "cslbounds/optomech.hpp"

#include <cmath>

#include <fmt/format.h>

namespace cslbounds {

void OptomechConfig::validate(bool allowFreeParticle) const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("optomech: ") + what);
  };
  require(std::isfinite(m) && m > 0.0, "m must be positive");
  if (allowFreeParticle)
    require(std::isfinite(omegaM) && omegaM >= 0.0, "omegaM must be >= 0");
  else
    require(std::isfinite(omegaM) && omegaM > 0.0, "omegaM must be positive");
  require(std::isfinite(gammaM) && gammaM >= 0.0, "gammaM must be >= 0");
  require(std::isfinite(T) && T >= 0.0, "T must be >= 0");
  require(std::isfinite(kappa) && kappa > 0.0, "kappa must be positive");
  require(std::isfinite(Delta), "Delta must be finite");
  require(std::isfinite(chi), "chi must be finite");
  require(std::isfinite(alphaSq) && alphaSq >= 0.0, "alphaSq must be >= 0");
}

std::string unit_name(SpectrumKind kind) {
  switch (kind) {
    case SpectrumKind::Displacement: return "m^2 s";
    case SpectrumKind::Force: return "N^2 s";
    case SpectrumKind::Torque: return "N^2 m^2 s";
  }
  return "";
}

void NoiseSpectrum::validate() const {
  if (omegas.size() != values.size())
    throw std::invalid_argument("spectrum: grid and values differ in length");
  for (std::size_t i = 1; i < omegas.size(); ++i)
    if (!(omegas[i] > omegas[i - 1]))
      throw std::invalid_argument("spectrum: grid must be strictly increasing");
  for (double v : values)
    if (!(v >= 0.0)) throw std::invalid_argument("spectrum: values must be non-negative");
}

EffectiveResponse linearized_response(const OptomechConfig& cfg, double omega,
                                      const PhysicalConstants& c) {
  const double k2 = cfg.kappa * cfg.kappa;
  const double dm = omega - cfg.Delta;
  const double dp = omega + cfg.Delta;
  const double D = (k2 + dm * dm) * (k2 + dp * dp);
  const double g = c.hbar * cfg.chi * cfg.chi * cfg.alphaSq * cfg.Delta / (cfg.m * D);
  EffectiveResponse r;
  r.omegaEffSq = cfg.omegaM * cfg.omegaM - 2.0 * g * (k2 + cfg.Delta * cfg.Delta - omega * omega);
  r.gammaEff = cfg.gammaM + 4.0 * g * cfg.kappa;
  return r;
}

QuadratureResult oscillator_force_spectrum(const MassGeometry& g, const CollapseParams& p,
                                           const QuadratureSpec& spec, const PhysicalConstants& c) {
  if (const auto* t = std::get_if<TwoBody>(&g))
    return csl_force_spectrum_two_body(*t, p, spec, Route::Auto, c);
  return csl_force_spectrum(g, p, spec, Route::Auto, c);
}

double thermal_force_spectrum(const OptomechConfig& cfg, double omega, const PhysicalConstants& c) {
  const double w = std::abs(omega);
  if (cfg.T == 0.0) return c.hbar * cfg.m * cfg.gammaM * w;
  const double x = c.hbar * w / (2.0 * c.kB * cfg.T);
  // x coth x, by series where the direct form would divide 0 by 0.
  const double xcoth = x < 1e-4 ? 1.0 + x * x / 3.0 - x * x * x * x / 45.0 : x / std::tanh(x);
  return 2.0 * cfg.m * cfg.gammaM * c.kB * cfg.T * xcoth;
}

DisplacementSpectrum displacement_dns_with_force(const OptomechConfig& cfg, const CollapseParams& p,
                                                 double S_FF, const std::vector<double>& omegas,
                                                 const EffectiveModel& model,
                                                 const PhysicalConstants& c) {
  cfg.validate();
  p.validate();
  DisplacementSpectrum out;
  out.total.omegas = omegas;
  out.total.kind = SpectrumKind::Displacement;
  const std::size_t n = omegas.size();
  out.total.values.resize(n);
  out.backaction.resize(n);
  out.thermal.resize(n);
  out.csl.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = omegas[i];
    if (!(std::isfinite(w) && w >= 0.0)) throw std::invalid_argument("dns: omegas must be finite and >= 0");
    if (i > 0 && !(w > omegas[i - 1])) throw std::invalid_argument("dns: grid must be strictly increasing");
    const EffectiveResponse r = model(cfg, w, c);
    if (!(r.gammaEff > 0.0))
      throw NonPositiveDamping(
          fmt::format("dns: effective damping {:.6g} 1/s is not positive at omega = {:.6g} rad/s "
                      "(optical anti-damping instability)",
                      r.gammaEff, w),
          w, r.gammaEff);
    const double detune = r.omegaEffSq - w * w;
    const double d2 = detune * detune + r.gammaEff * r.gammaEff * w * w;
    const double m2d2 = cfg.m * cfg.m * d2;
    const double cavity = cfg.kappa * cfg.kappa + (cfg.Delta - w) * (cfg.Delta - w);
    out.backaction[i] =
        2.0 * c.hbar * c.hbar * cfg.alphaSq * cfg.kappa * cfg.chi * cfg.chi / (cavity * m2d2);
    out.thermal[i] = thermal_force_spectrum(cfg, w, c) / m2d2;
    out.csl[i] = apply_colored_filter(S_FF, p.colored, w) / m2d2;
    out.total.values[i] = out.backaction[i] + out.thermal[i] + out.csl[i];
  }
  out.forceSpectrum = QuadratureResult{S_FF, 0.0, 0, true};
  out.total.validate();
  return out;
}

DisplacementSpectrum displacement_dns(const OptomechConfig& cfg, const CollapseParams& p,
                                      const MassGeometry& g, const std::vector<double>& omegas,
                                      const QuadratureSpec& spec, const EffectiveModel& model,
                                      const PhysicalConstants& c) {
  const QuadratureResult S = oscillator_force_spectrum(g, p, spec, c);
  DisplacementSpectrum out = displacement_dns_with_force(cfg, p, S.value, omegas, model, c);
  out.forceSpectrum = S;
  return out;
}

double HighTemperatureCheck::relative_difference() const {
  if (exact == limit) return 0.0;
  return std::abs(exact - limit) / std::max(std::abs(exact), std::abs(limit));
}

HighTemperatureCheck high_temperature_limit_check(const OptomechConfig& cfg, const CollapseParams& p,
                                                  const MassGeometry& g, double omega,
                                                  const QuadratureSpec& spec,
                                                  const PhysicalConstants& c) {
  cfg.validate();
  if (!(cfg.T > 0.0 && omega > 0.0))
    throw std::invalid_argument("high-temperature check: T and omega must be positive");
  const double x = c.hbar * omega / (2.0 * c.kB * cfg.T);
  if (!(x < 1e-3))
    throw std::invalid_argument(
        fmt::format("high-temperature check: hbar omega / 2 kB T = {:.3g} is not below 1e-3", x));
  const double S = apply_colored_filter(oscillator_force_spectrum(g, p, spec, c).value, p.colored, omega);
  HighTemperatureCheck out;
  out.exact = c.hbar * cfg.m * cfg.gammaM * omega / std::tanh(x) + S;
  out.deltaT = csl_temperature_shift(S, cfg.m, cfg.gammaM, c);
  out.limit = 2.0 * cfg.m * cfg.gammaM * c.kB * (cfg.T + out.deltaT);
  return out;
}

}  // namespace cslbounds
