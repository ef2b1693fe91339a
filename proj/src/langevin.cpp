#include "cslbounds/langevin.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <unsupported/Eigen/FFT>

#include "cslbounds/parallel.hpp"

namespace cslbounds {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

bool is_power_of_two(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

std::int64_t auto_segment_length(std::int64_t samples) {
  std::int64_t n = 16;
  while (n * 2 <= samples / 4) n *= 2;
  return n;
}

}  // namespace

CounterNormal::CounterNormal(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL))) {}

std::uint64_t CounterNormal::next_u64() {
  return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * (counter_++));
}

double CounterNormal::operator()() {
  if (hasSpare_) {
    hasSpare_ = false;
    return spare_;
  }
  // Uniforms on (0, 1] and [0, 1) from the top 53 bits.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * kPi * u2;
  spare_ = r * std::sin(a);
  hasSpare_ = true;
  return r * std::cos(a);
}

void SimConfig::validate(const OptomechConfig& cfg) const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("simulation: " + what);
  };
  require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
  require(steps >= 2, "steps must be >= 2");
  require(trajectories >= 1, "trajectories must be >= 1");
  require(storedTrajectories >= 0, "stored trajectories must be >= 0");
  require(momentStride >= 0, "moment stride must be >= 0");
  require(dt * cfg.omegaM < 0.1,
          fmt::format("dt * omegaM = {:.3g} must be below 0.1 to resolve the oscillation", dt * cfg.omegaM));
  if (segmentLength != 0) {
    require(is_power_of_two(segmentLength) && segmentLength >= 16,
            "segment length must be a power of two >= 16");
    require(segmentLength <= steps + 1, "segment length exceeds the trajectory length");
  }
}

PowerLawFit fit_power_law(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size() || t.size() < 2) throw std::invalid_argument("power-law fit: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0 && y[i] > 0.0)) throw std::invalid_argument("power-law fit: data must be positive");
    const double lx = std::log(t[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  PowerLawFit fit;
  fit.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.prefactor = std::exp((sy - fit.exponent * sx) / n);
  return fit;
}

namespace {

// Accumulators for a fixed block of trajectories, combined in block order.
struct Block {
  std::vector<double> psd;
  std::int64_t segments = 0;
  std::vector<double> x2, p2;
  std::vector<double> trajX2, trajEnergy;  // per-trajectory time averages
  std::vector<std::pair<std::int64_t, Trajectory>> stored;
};

}  // namespace

LangevinResult simulate_langevin_with_force(const OptomechConfig& cfg, double S_FF,
                                            const SimConfig& sim, int threads,
                                            const PhysicalConstants& c) {
  cfg.validate(true);
  sim.validate(cfg);
  if (!(S_FF >= 0.0 && std::isfinite(S_FF)))
    throw std::invalid_argument("simulation: force spectrum must be finite and >= 0");

  const double m = cfg.m;
  const double w2 = cfg.omegaM * cfg.omegaM;
  const double gamma = cfg.gammaM;
  const double dt = sim.dt;
  const double Sth = 2.0 * m * gamma * c.kB * cfg.T;
  const double Stotal = Sth + S_FF;
  const double kick = std::sqrt(Stotal * dt);
  const bool stationary = cfg.omegaM > 0.0 && gamma > 0.0;

  const std::int64_t samples = sim.steps + 1;
  const std::int64_t stride =
      sim.momentStride > 0 ? sim.momentStride : std::max<std::int64_t>(1, sim.steps / 1000);
  const std::int64_t momentCount = sim.steps / stride + 1;

  const double varX = stationary ? Stotal / (2.0 * m * m * gamma * w2) : 0.0;
  const double varP = stationary ? m * m * w2 * varX : 0.0;
  const double tEnd = dt * static_cast<double>(sim.steps);
  double spread = stationary ? std::sqrt(varX)
                             : std::sqrt(Stotal * tEnd * tEnd * tEnd / (3.0 * m * m));
  const double limit = spread > 0.0 ? 1e6 * spread : std::numeric_limits<double>::infinity();

  const std::int64_t seg = stationary ? (sim.segmentLength > 0 ? sim.segmentLength : auto_segment_length(samples)) : 0;
  const bool doSpectrum = stationary && seg <= samples;
  std::vector<double> window;
  double windowPower = 0.0;
  if (doSpectrum) {
    window.resize(static_cast<std::size_t>(seg));
    for (std::int64_t n = 0; n < seg; ++n) {
      window[n] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(n) / static_cast<double>(seg)));
      windowPower += window[n] * window[n];
    }
  }

  const std::int64_t blockSize = std::max<std::int64_t>(16, (sim.trajectories + 63) / 64);
  const std::int64_t blockCount = (sim.trajectories + blockSize - 1) / blockSize;
  std::vector<Block> blocks(static_cast<std::size_t>(blockCount));

  parallel_for(static_cast<std::size_t>(blockCount), threads, [&](std::size_t b) {
    Block& blk = blocks[b];
    blk.x2.assign(static_cast<std::size_t>(momentCount), 0.0);
    blk.p2.assign(static_cast<std::size_t>(momentCount), 0.0);
    if (doSpectrum) blk.psd.assign(static_cast<std::size_t>(seg / 2 + 1), 0.0);
    Eigen::FFT<double> fft;
    std::vector<double> xs(static_cast<std::size_t>(samples));
    std::vector<double> ps(static_cast<std::size_t>(samples));
    std::vector<double> segBuf(static_cast<std::size_t>(seg));
    std::vector<std::complex<double>> spec;

    const std::int64_t first = static_cast<std::int64_t>(b) * blockSize;
    const std::int64_t last = std::min(sim.trajectories, first + blockSize);
    for (std::int64_t traj = first; traj < last; ++traj) {
      CounterNormal rng(sim.seed, static_cast<std::uint64_t>(traj));
      double x = stationary ? std::sqrt(varX) * rng() : 0.0;
      double p = stationary ? std::sqrt(varP) * rng() : 0.0;
      xs[0] = x;
      ps[0] = p;
      for (std::int64_t n = 1; n < samples; ++n) {
        p += (-m * w2 * x - gamma * p) * dt + kick * rng();
        x += p / m * dt;
        if (!(std::abs(x) <= limit))
          throw UnstableStep(fmt::format("simulation: |x| = {:.3g} m exceeds 1e6 x the reference spread "
                                         "{:.3g} m at step {} of trajectory {}; reduce dt",
                                         std::abs(x), spread, n, traj),
                             traj, n);
        xs[n] = x;
        ps[n] = p;
      }

      double sx2 = 0.0, se = 0.0;
      for (std::int64_t n = 0; n < samples; ++n) {
        sx2 += xs[n] * xs[n];
        se += ps[n] * ps[n] / (2.0 * m) + 0.5 * m * w2 * xs[n] * xs[n];
      }
      blk.trajX2.push_back(sx2 / static_cast<double>(samples));
      blk.trajEnergy.push_back(se / static_cast<double>(samples));
      for (std::int64_t k = 0; k < momentCount; ++k) {
        blk.x2[k] += xs[k * stride] * xs[k * stride];
        blk.p2[k] += ps[k * stride] * ps[k * stride];
      }

      if (doSpectrum) {
        for (std::int64_t start = 0; start + seg <= samples; start += seg / 2) {
          for (std::int64_t n = 0; n < seg; ++n) segBuf[n] = window[n] * xs[start + n];
          fft.fwd(spec, segBuf);
          for (std::int64_t k = 0; k <= seg / 2; ++k) blk.psd[k] += std::norm(spec[k]);
          ++blk.segments;
        }
      }

      if (traj < sim.storedTrajectories) {
        Trajectory tr;
        tr.t.resize(static_cast<std::size_t>(samples));
        for (std::int64_t n = 0; n < samples; ++n) tr.t[n] = dt * static_cast<double>(n);
        tr.x = xs;
        tr.p = ps;
        blk.stored.emplace_back(traj, std::move(tr));
      }
    }
  });

  LangevinResult out;
  out.forceSpectrum = S_FF;
  out.thermalForceSpectrum = Sth;
  out.meanX2.assign(static_cast<std::size_t>(momentCount), 0.0);
  out.meanP2.assign(static_cast<std::size_t>(momentCount), 0.0);
  std::vector<double> trajX2, trajE;
  std::vector<double> psd(doSpectrum ? static_cast<std::size_t>(seg / 2 + 1) : 0, 0.0);
  for (auto& blk : blocks) {
    for (std::int64_t k = 0; k < momentCount; ++k) {
      out.meanX2[k] += blk.x2[k];
      out.meanP2[k] += blk.p2[k];
    }
    for (std::size_t k = 0; k < psd.size(); ++k) psd[k] += blk.psd[k];
    out.segmentsAveraged += blk.segments;
    trajX2.insert(trajX2.end(), blk.trajX2.begin(), blk.trajX2.end());
    trajE.insert(trajE.end(), blk.trajEnergy.begin(), blk.trajEnergy.end());
    for (auto& s : blk.stored) out.stored.push_back(std::move(s.second));
  }
  const double nTraj = static_cast<double>(sim.trajectories);
  out.sampleTimes.resize(static_cast<std::size_t>(momentCount));
  for (std::int64_t k = 0; k < momentCount; ++k) {
    out.sampleTimes[k] = dt * static_cast<double>(k * stride);
    out.meanX2[k] /= nTraj;
    out.meanP2[k] /= nTraj;
  }

  auto meanAndError = [nTraj](const std::vector<double>& v, double& mean, double& err) {
    mean = 0.0;
    for (double a : v) mean += a;
    mean /= nTraj;
    double var = 0.0;
    for (double a : v) var += (a - mean) * (a - mean);
    err = v.size() > 1 ? std::sqrt(var / (nTraj - 1.0) / nTraj) : 0.0;
  };
  meanAndError(trajX2, out.meanX2All, out.meanX2Error);
  meanAndError(trajE, out.meanEnergy, out.meanEnergyError);

  if (doSpectrum && out.segmentsAveraged > 0) {
    out.spectrum.kind = SpectrumKind::Displacement;
    const double norm = dt / (windowPower * static_cast<double>(out.segmentsAveraged));
    const double dOmega = 2.0 * kPi / (dt * static_cast<double>(seg));
    for (std::size_t k = 0; k < psd.size(); ++k) {
      out.spectrum.omegas.push_back(dOmega * static_cast<double>(k));
      out.spectrum.values.push_back(psd[k] * norm);
    }
  }
  return out;
}

LangevinResult simulate_langevin(const OptomechConfig& cfg, const CollapseParams& p,
                                 const MassGeometry& g, const SimConfig& sim, int threads,
                                 const QuadratureSpec& spec, const PhysicalConstants& c) {
  p.validate();
  if (p.colored && p.colored->family != NoiseFamily::White)
    throw std::invalid_argument("simulation: only white collapse noise is supported");
  const double S = oscillator_force_spectrum(g, p, spec, c).value;
  return simulate_langevin_with_force(cfg, S, sim, threads, c);
}

// ---------------------------------------------------------------------------
// Trajectory files

namespace {

constexpr char kMagic[8] = {'C', 'S', 'L', 'T', 'R', 'A', 'J', '\0'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("trajectory file: truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("trajectory file: truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  const std::uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

void write_trajectory_file(const std::string& path, const TrajectoryFileHeader& header,
                           const std::vector<Trajectory>& trajectories) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os.write(kMagic, 8);
  put_u32(os, header.version);
  put_u32(os, 0);
  put_u64(os, header.seed);
  put_u64(os, header.configHash);
  put_f64(os, header.dt);
  put_u64(os, header.samples);
  put_u64(os, trajectories.size());
  for (const auto& tr : trajectories) {
    if (tr.t.size() != header.samples || tr.x.size() != header.samples || tr.p.size() != header.samples)
      throw std::invalid_argument("trajectory file: column length differs from header");
    for (double v : tr.t) put_f64(os, v);
    for (double v : tr.x) put_f64(os, v);
    for (double v : tr.p) put_f64(os, v);
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

TrajectoryFile read_trajectory_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("trajectory file: bad magic in " + path);
  TrajectoryFile f;
  f.header.version = get_u32(is);
  if (f.header.version != 1) throw std::runtime_error("trajectory file: unsupported version");
  get_u32(is);
  f.header.seed = get_u64(is);
  f.header.configHash = get_u64(is);
  f.header.dt = get_f64(is);
  f.header.samples = get_u64(is);
  f.header.trajectories = get_u64(is);
  for (std::uint64_t i = 0; i < f.header.trajectories; ++i) {
    Trajectory tr;
    for (auto* col : {&tr.t, &tr.x, &tr.p}) {
      col->resize(f.header.samples);
      for (auto& v : *col) v = get_f64(is);
    }
    f.trajectories.push_back(std::move(tr));
  }
  return f;
}

}  // namespace cslbounds
