#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cslbounds/constants.hpp"
#include "cslbounds/csl_noise.hpp"
#include "cslbounds/optomech.hpp"

// Time-domain Monte Carlo of the mechanical Langevin equation
//   dx = p/m dt,  dp = (-m omegaM^2 x - gammaM p) dt + dW_thermal + dW_CSL,
// with the cavity adiabatically eliminated (optical terms off).
namespace cslbounds {

struct SimConfig {
  double dt = 1e-3;                 // s
  std::int64_t steps = 100000;      // integration steps per trajectory
  std::int64_t trajectories = 100;
  std::uint64_t seed = 1;
  std::int64_t segmentLength = 0;   // Welch segment, power of two; 0 = auto
  std::int64_t storedTrajectories = 1;
  std::int64_t momentStride = 0;    // ensemble moments every n steps; 0 = auto

  void validate(const OptomechConfig& cfg) const;
};

class UnstableStep : public std::runtime_error {
 public:
  UnstableStep(const std::string& what, std::int64_t trajectory, std::int64_t step)
      : std::runtime_error(what), trajectory_(trajectory), step_(step) {}
  std::int64_t trajectory() const noexcept { return trajectory_; }
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t trajectory_;
  std::int64_t step_;
};

struct Trajectory {
  std::vector<double> t, x, p;
};

struct LangevinResult {
  // Welch estimate (Hann window, 50% overlap), double-sided, on omega >= 0.
  // Empty when the motion has no stationary state (omegaM = 0 or gammaM = 0).
  NoiseSpectrum spectrum;
  std::int64_t segmentsAveraged = 0;

  // Ensemble means at t = sampleTimes[i].
  std::vector<double> sampleTimes, meanX2, meanP2;

  // Time and ensemble averages with standard errors across trajectories.
  double meanX2All = 0.0, meanX2Error = 0.0;
  double meanEnergy = 0.0, meanEnergyError = 0.0;

  double forceSpectrum = 0.0;         // S_FF, N^2 s
  double thermalForceSpectrum = 0.0;  // 2 m gammaM kB T, N^2 s
  std::vector<Trajectory> stored;
};

// Semi-implicit Euler-Maruyama (momentum first). Stationary configurations
// start from the stationary Gaussian at T + dT_CSL; free or undamped ones
// start at rest. Trajectory i draws from a counter-based stream keyed by
// (seed, i); the result does not depend on the thread count.
LangevinResult simulate_langevin(const OptomechConfig& cfg, const CollapseParams& p,
                                 const MassGeometry& g, const SimConfig& sim, int threads = 1,
                                 const QuadratureSpec& spec = {},
                                 const PhysicalConstants& c = kConstants);

// Same, with the CSL force spectrum supplied by the caller.
LangevinResult simulate_langevin_with_force(const OptomechConfig& cfg, double S_FF,
                                            const SimConfig& sim, int threads = 1,
                                            const PhysicalConstants& c = kConstants);

// Least-squares fit of log y = log a + n log t.
struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
};
PowerLawFit fit_power_law(const std::vector<double>& t, const std::vector<double>& y);

// Counter-based normal variates: SplitMix64 over (key, counter) with the
// Box-Muller transform.
class CounterNormal {
 public:
  CounterNormal(std::uint64_t seed, std::uint64_t stream);
  double operator()();
  std::uint64_t next_u64();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool hasSpare_ = false;
};

// Binary trajectory dump, little-endian:
//   char[8] "CSLTRAJ\0", u32 version (1), u32 reserved (0), u64 seed,
//   u64 configHash, f64 dt, u64 samples, u64 trajectories,
// then per trajectory the columns t[samples], x[samples], p[samples] as f64.
struct TrajectoryFileHeader {
  std::uint32_t version = 1;
  std::uint64_t seed = 0;
  std::uint64_t configHash = 0;
  double dt = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t trajectories = 0;
};

void write_trajectory_file(const std::string& path, const TrajectoryFileHeader& header,
                           const std::vector<Trajectory>& trajectories);

struct TrajectoryFile {
  TrajectoryFileHeader header;
  std::vector<Trajectory> trajectories;
};
TrajectoryFile read_trajectory_file(const std::string& path);

}  // namespace cslbounds
