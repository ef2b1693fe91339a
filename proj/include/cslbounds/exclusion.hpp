#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cslbounds/constants.hpp"
#include "cslbounds/csl_noise.hpp"
#include "cslbounds/geometry.hpp"
#include "cslbounds/quadrature.hpp"

namespace cslbounds {

enum class Channel { ForceTranslational, ForceTwoBody, Torque, TemperatureShift };

std::string channel_name(Channel ch);

// Budgets are scalar thresholds at the band midpoint:
//   ForceTranslational, ForceTwoBody  residual force PSD, N^2 s
//   Torque                            residual torque PSD, N^2 m^2 s
//   TemperatureShift                  largest unexplained shift, K, read with
//                                     (mass, gamma) for the translational
//                                     mode or dPhi for the rotational one.
struct ExperimentRecord {
  std::string name = "experiment";
  MassGeometry geometry = Point{};
  Channel channel = Channel::ForceTranslational;
  double budget = 0.0;
  double bandLo = 0.0, bandHi = 0.0;  // rad/s
  std::optional<ColoredNoiseModel> colored;

  // TemperatureShift only. mass <= 0 means the geometry's total mass.
  double mass = 0.0;                 // kg
  double gamma = 0.0;                // 1/s
  std::optional<double> dPhi;        // rotational damping, J s

  void validate() const;
  double band_midpoint() const { return 0.5 * (bandLo + bandHi); }
};

// The channel's CSL quantity vanishes at this rC (e.g. torque on a sphere).
class DegenerateBound : public std::runtime_error {
 public:
  DegenerateBound(const std::string& what, double rC) : std::runtime_error(what), rC_(rC) {}
  double rC() const noexcept { return rC_; }

 private:
  double rC_;
};

struct LambdaBound {
  double lambdaUB = 0.0;  // 1/s
  double errorEst = 0.0;  // 1/s, propagated from the quadrature estimate
  std::int64_t evaluations = 0;
};

// The channel's spectral quantity at lambda = 1, filtered at the band midpoint.
QuadratureResult unit_lambda_quantity(const ExperimentRecord& rec, double rC,
                                      const QuadratureSpec& spec = {},
                                      const PhysicalConstants& c = kConstants);

// Throws DegenerateBound or NonConvergence (with the bound from the best
// estimate available through best()).
LambdaBound lambda_upper_bound(const ExperimentRecord& rec, double rC,
                               const QuadratureSpec& spec = {},
                               const PhysicalConstants& c = kConstants);

enum class PointStatus { Ok, Degenerate, NonConverged };
std::string status_name(PointStatus s);

// Degenerate points carry lambdaUB = errorEst = -1 (no bound at that rC).
struct ExclusionCurve {
  std::string experiment;
  std::vector<double> rCs;
  std::vector<double> lambdaUB;
  std::vector<double> errorEst;
  std::vector<PointStatus> status;

  void validate() const;
  std::size_t size() const { return rCs.size(); }
};

inline constexpr double kNoBound = -1.0;

// Log-spaced grid from lo to hi inclusive with pointsPerDecade points per
// decade (rounded to the nearest count); lo == hi gives a single point.
std::vector<double> log_grid(double lo, double hi, double pointsPerDecade);
std::vector<double> default_rc_grid();  // 1e-9 .. 1e-3 m, 50 per decade

// Parallel over rC; per-point failures are recorded in status and the scan
// continues. Output does not depend on the thread count.
ExclusionCurve exclusion_scan(const ExperimentRecord& rec, const std::vector<double>& rCs,
                              const QuadratureSpec& spec = {}, int threads = 1,
                              const PhysicalConstants& c = kConstants);

// Pointwise minimum over curves sharing one grid. Points where no curve has a
// bound stay degenerate.
ExclusionCurve combine_exclusions(const std::vector<ExclusionCurve>& curves);

}  // namespace cslbounds
