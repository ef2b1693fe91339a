#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "cslbounds/constants.hpp"
#include "cslbounds/geometry.hpp"
#include "cslbounds/quadrature.hpp"

// CSL force, torque and derived spectral quantities. All spectra are white
// (frequency independent), double-sided, and linear in lambda; colored noise
// enters only through apply_colored_filter.
namespace cslbounds {

enum class NoiseFamily { White, LorentzianCutoff };

struct ColoredNoiseModel {
  NoiseFamily family = NoiseFamily::White;
  double omegaC = 0.0;  // rad/s, LorentzianCutoff only

  void validate() const;
  // f~(omega), in (0, 1] with f~(0) = 1.
  double filter(double omega) const;
};

struct CollapseParams {
  double lambda = 1e-16;  // 1/s
  double rC = 1e-7;       // m
  std::optional<ColoredNoiseModel> colored;

  void validate() const;
};

// Auto picks the fastest exact evaluation for the geometry: closed forms
// (point, sphere, lattice pair kernels), separable products of 1D integrals
// (cuboid, multilayer, cylinder), and falls back to the spherical k-space
// quadrature otherwise. Spherical always runs integrate_k3 on the form
// factor; it exists for cross-checks.
enum class Route { Auto, Spherical };

// S_FF along x, N^2 s. Rejects TwoBody.
QuadratureResult csl_force_spectrum(const MassGeometry& g, const CollapseParams& p,
                                    const QuadratureSpec& spec = {}, Route route = Route::Auto,
                                    const PhysicalConstants& c = kConstants);

// Differential force spectrum of two identical units separated along x,
// including the 1/2 prefactor of the two-mass formula.
QuadratureResult csl_force_spectrum_two_body(const TwoBody& g, const CollapseParams& p,
                                             const QuadratureSpec& spec = {},
                                             Route route = Route::Auto,
                                             const PhysicalConstants& c = kConstants);

// Torque spectrum for rotations about x, N^2 m^2 s.
QuadratureResult csl_torque_spectrum(const MassGeometry& g, const CollapseParams& p,
                                     const QuadratureSpec& spec = {}, Route route = Route::Auto,
                                     const PhysicalConstants& c = kConstants);

// Point-mass pair kernels, evaluated by direct O(N^2) summation. Pairs with
// exp(-d^2 / 4 rC^2) below exp(-50) are skipped.
double pair_kernel_force(const std::vector<PointMass>& points, double lambda, double rC,
                         const PhysicalConstants& c = kConstants);
double pair_kernel_torque(const std::vector<PointMass>& points, double lambda, double rC,
                          const PhysicalConstants& c = kConstants);

// Closed-form spectrum of a point mass, hbar^2 lambda m^2 / (2 m0^2 rC^2).
double point_force_spectrum(double mass, const CollapseParams& p,
                            const PhysicalConstants& c = kConstants);

// S * f~(omega); White leaves S unchanged.
double apply_colored_filter(double S, const ColoredNoiseModel& model, double omega);
double apply_colored_filter(double S, const std::optional<ColoredNoiseModel>& model, double omega);

// S_FF / (2 m gamma kB). Throws std::invalid_argument for gamma <= 0, where
// the shift diverges.
double csl_temperature_shift(double S_FF, double m, double gamma,
                             const PhysicalConstants& c = kConstants);

// S_rot / (2 kB D_phi).
double csl_temperature_shift_rot(double S_rot, double D_phi,
                                 const PhysicalConstants& c = kConstants);

// qmTerm + lambda hbar^2 t^3 / (2 m0^2 rC^2): the three-dimensional spread
// <r^2>; each axis carries one third of the collapse term.
double free_expansion_spread(const CollapseParams& p, double t, double qmTerm,
                             const PhysicalConstants& c = kConstants);

// Heating rate in K/year with temperature defined by <E> = (3/2) kB T and an
// isotropic force noise S_FF on each axis: dT/dt = S_FF / (m kB).
double heating_rate(const MassGeometry& g, const CollapseParams& p,
                    const QuadratureSpec& spec = {}, const PhysicalConstants& c = kConstants);

}  // namespace cslbounds
