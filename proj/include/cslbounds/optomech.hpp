#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cslbounds/constants.hpp"
#include "cslbounds/csl_noise.hpp"
#include "cslbounds/geometry.hpp"
#include "cslbounds/quadrature.hpp"

namespace cslbounds {

struct OptomechConfig {
  double m = 1e-12;          // kg
  double omegaM = 1e3;       // rad/s
  double gammaM = 1.0;       // 1/s
  double T = 300.0;          // K
  double kappa = 1e6;        // 1/s, cavity dissipation
  double Delta = 0.0;        // rad/s, laser-cavity detuning
  double chi = 0.0;          // rad/(s m), optomechanical coupling
  double alphaSq = 0.0;      // intracavity photon number

  // The Langevin simulator also accepts omegaM = 0 (free particle).
  void validate(bool allowFreeParticle = false) const;
};

enum class SpectrumKind { Displacement, Force, Torque };

// Unit string of a spectrum kind, e.g. "m^2 s".
std::string unit_name(SpectrumKind kind);

struct NoiseSpectrum {
  std::vector<double> omegas;  // rad/s, strictly increasing
  std::vector<double> values;
  SpectrumKind kind = SpectrumKind::Displacement;

  void validate() const;
};

class NonPositiveDamping : public std::runtime_error {
 public:
  NonPositiveDamping(const std::string& what, double omega, double gammaEff)
      : std::runtime_error(what), omega_(omega), gammaEff_(gammaEff) {}
  double omega() const noexcept { return omega_; }
  double gamma_eff() const noexcept { return gammaEff_; }

 private:
  double omega_;
  double gammaEff_;
};

// Optically modified mechanical response at frequency omega.
struct EffectiveResponse {
  double omegaEffSq = 0.0;  // rad^2/s^2
  double gammaEff = 0.0;    // 1/s
};

using EffectiveModel =
    std::function<EffectiveResponse(const OptomechConfig&, double omega, const PhysicalConstants&)>;

// Linearized optomechanics with D = [kappa^2 + (w - Delta)^2][kappa^2 + (w + Delta)^2]:
//   omega_eff^2 = omegaM^2 - 2 hbar chi^2 |alpha|^2 Delta (kappa^2 + Delta^2 - w^2) / (m D)
//   gamma_eff   = gammaM + 4 hbar chi^2 |alpha|^2 Delta kappa / (m D)
EffectiveResponse linearized_response(const OptomechConfig& cfg, double omega,
                                      const PhysicalConstants& c = kConstants);

// Displacement spectrum and its three additive parts on the same grid.
struct DisplacementSpectrum {
  NoiseSpectrum total;
  std::vector<double> backaction;
  std::vector<double> thermal;
  std::vector<double> csl;
  QuadratureResult forceSpectrum;  // S_FF used for the csl part (white)
};

// CSL force spectrum along x driving the oscillator: the differential
// two-body spectrum for TwoBody geometries, the single-body one otherwise.
QuadratureResult oscillator_force_spectrum(const MassGeometry& g, const CollapseParams& p,
                                           const QuadratureSpec& spec = {},
                                           const PhysicalConstants& c = kConstants);

// S_x(omega) = backaction + [hbar m gammaM w coth(hbar w / 2 kB T) + S_FF f~(w)] / (m^2 |d|^2),
// |d|^2 = (omega_eff^2 - w^2)^2 + gamma_eff^2 w^2. Throws NonPositiveDamping
// if gamma_eff <= 0 anywhere on the grid.
DisplacementSpectrum displacement_dns(const OptomechConfig& cfg, const CollapseParams& p,
                                      const MassGeometry& g, const std::vector<double>& omegas,
                                      const QuadratureSpec& spec = {},
                                      const EffectiveModel& model = linearized_response,
                                      const PhysicalConstants& c = kConstants);

// Same, with S_FF supplied by the caller.
DisplacementSpectrum displacement_dns_with_force(const OptomechConfig& cfg, const CollapseParams& p,
                                                 double S_FF, const std::vector<double>& omegas,
                                                 const EffectiveModel& model = linearized_response,
                                                 const PhysicalConstants& c = kConstants);

// hbar m gammaM w coth(hbar w / 2 kB T), with the w -> 0 and T -> 0 limits.
double thermal_force_spectrum(const OptomechConfig& cfg, double omega,
                              const PhysicalConstants& c = kConstants);

struct HighTemperatureCheck {
  double exact = 0.0;  // hbar m gammaM w coth(hbar w / 2 kB T) + S_FF f~(w)
  double limit = 0.0;  // 2 m gammaM kB (T + dT_CSL)
  double deltaT = 0.0;
  double relative_difference() const;
};

// Requires hbar w / 2 kB T < 1e-3.
HighTemperatureCheck high_temperature_limit_check(const OptomechConfig& cfg, const CollapseParams& p,
                                                  const MassGeometry& g, double omega,
                                                  const QuadratureSpec& spec = {},
                                                  const PhysicalConstants& c = kConstants);

}  // namespace cslbounds
