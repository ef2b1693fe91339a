#include <doctest.h>

#include <cmath>
#include <initializer_list>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cslbounds/langevin.hpp"

using namespace cslbounds;

namespace {

const PhysicalConstants C{};

OptomechConfig unit_oscillator(double T) {
  OptomechConfig o;
  o.m = 1e-12;
  o.omegaM = 1.0;
  o.gammaM = 0.5;
  o.T = T;
  return o;
}

}  // namespace

TEST_SUITE("langevin") {

TEST_CASE("counter-based normals") {
  CounterNormal a(42, 0), b(42, 0), c(42, 1);
  double s = 0, s2 = 0, s4 = 0;
  int tail = 0, same = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double x = a();
    const double y = b();
    if (x == y) ++same;
    if (x == c()) --same;
    s += x;
    s2 += x * x;
    s4 += x * x * x * x;
    if (std::abs(x) > 3.0) ++tail;
  }
  CHECK(same == n);
  CHECK(std::abs(s / n) < 5.0 / std::sqrt(n));
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(5.0 * std::sqrt(2.0 / n)));
  CHECK(s4 / n == doctest::Approx(3.0).epsilon(0.02));
  // P(|z| > 3) = 0.0026998
  CHECK(double(tail) / n == doctest::Approx(0.0026998).epsilon(0.05));
}

TEST_CASE("thermal equipartition") {
  auto cfg = unit_oscillator(300.0);
  SimConfig sim;
  sim.dt = 0.01;
  sim.steps = 1 << 16;
  sim.trajectories = 64;
  sim.seed = 11;
  const auto r = simulate_langevin_with_force(cfg, 0.0, sim);
  const double x2 = C.kB * cfg.T / (cfg.m * cfg.omegaM * cfg.omegaM);
  CHECK(std::abs(r.meanX2All - x2) < 4.0 * r.meanX2Error);
  CHECK(std::abs(r.meanEnergy - C.kB * cfg.T) < 4.0 * r.meanEnergyError);
  CHECK(r.meanX2Error < 0.05 * x2);
  CHECK(r.thermalForceSpectrum == doctest::Approx(2 * cfg.m * cfg.gammaM * C.kB * cfg.T));
}

TEST_CASE("CSL force alone heats to the temperature shift") {
  auto cfg = unit_oscillator(0.0);
  SimConfig sim;
  sim.dt = 0.01;
  sim.steps = 1 << 16;
  sim.trajectories = 64;
  sim.seed = 5;
  const double S = 3e-33;
  const auto r = simulate_langevin_with_force(cfg, S, sim);
  const double dT = S / (2 * cfg.m * cfg.gammaM * C.kB);
  CHECK(std::abs(r.meanEnergy - C.kB * dT) < 4.0 * r.meanEnergyError);
  CHECK(std::abs(r.meanX2All - S / (2 * cfg.m * cfg.m * cfg.gammaM)) < 4.0 * r.meanX2Error);
}

TEST_CASE("Welch spectrum follows the Lorentzian") {
  auto cfg = unit_oscillator(300.0);
  SimConfig sim;
  sim.dt = 0.01;
  sim.steps = (1 << 18) - 1;
  sim.trajectories = 48;
  sim.seed = 3;
  sim.segmentLength = 8192;
  const auto r = simulate_langevin_with_force(cfg, 0.0, sim);
  REQUIRE(r.spectrum.omegas.size() == 8192 / 2 + 1);
  double ratioSum = 0;
  int count = 0;
  for (std::size_t i = 1; i < r.spectrum.omegas.size(); ++i) {
    const double w = r.spectrum.omegas[i];
    if (w < 0.3 || w > 3.0) continue;
    const double den = cfg.m * cfg.m * (std::pow(cfg.omegaM * cfg.omegaM - w * w, 2) +
                                       cfg.gammaM * cfg.gammaM * w * w);
    const double dns = 2 * cfg.m * cfg.gammaM * C.kB * cfg.T / den;
    const double ratio = r.spectrum.values[i] / dns;
    CHECK(std::abs(ratio - 1.0) < 0.12);
    ratioSum += ratio;
    ++count;
  }
  CHECK(count > 30);
  CHECK(ratioSum / count == doctest::Approx(1.0).epsilon(0.02));

  // Parseval: the spectrum integrates to the variance
  double integral = 0;
  const double dw = r.spectrum.omegas[1];
  for (std::size_t i = 0; i < r.spectrum.omegas.size(); ++i)
    integral += r.spectrum.values[i] * dw * (i == 0 ? 1.0 : 2.0) / (2 * kPi);
  CHECK(integral == doctest::Approx(r.meanX2All).epsilon(0.02));
}

TEST_CASE("free particle spreads as t^3") {
  OptomechConfig cfg;
  cfg.m = 1e-12;
  cfg.omegaM = 0.0;
  cfg.gammaM = 0.0;
  cfg.T = 0.0;
  SimConfig sim;
  sim.dt = 1e-3;
  sim.steps = 2000;
  sim.trajectories = 4000;
  sim.seed = 9;
  const double S = 1e-40;
  const auto r = simulate_langevin_with_force(cfg, S, sim);
  CHECK(r.spectrum.omegas.empty());
  std::vector<double> t, y;
  const double T = r.sampleTimes.back();
  for (std::size_t i = 0; i < r.sampleTimes.size(); ++i)
    if (r.sampleTimes[i] >= 0.1 * T) {
      t.push_back(r.sampleTimes[i]);
      y.push_back(r.meanX2[i]);
    }
  const auto fit = fit_power_law(t, y);
  CHECK(fit.exponent == doctest::Approx(3.0).epsilon(0.02));
  // end point: <x^2> = S t^3 / 3 m^2 with relative spread sqrt(2 / N)
  const double expected = S * T * T * T / (3 * cfg.m * cfg.m);
  CHECK(std::abs(r.meanX2.back() / expected - 1.0) < 4.0 * std::sqrt(2.0 / sim.trajectories));
}

TEST_CASE("results do not depend on the thread count") {
  auto cfg = unit_oscillator(10.0);
  SimConfig sim;
  sim.dt = 0.01;
  sim.steps = 4095;
  sim.trajectories = 37;
  sim.seed = 77;
  sim.storedTrajectories = 2;
  const auto a = simulate_langevin_with_force(cfg, 1e-34, sim, 1);
  const auto b = simulate_langevin_with_force(cfg, 1e-34, sim, 3);
  CHECK(a.meanX2All == b.meanX2All);
  CHECK(a.meanEnergy == b.meanEnergy);
  CHECK(a.spectrum.values == b.spectrum.values);
  CHECK(a.meanX2 == b.meanX2);
  REQUIRE(a.stored.size() == 2);
  CHECK(a.stored[1].x == b.stored[1].x);

  sim.seed = 78;
  const auto c = simulate_langevin_with_force(cfg, 1e-34, sim, 1);
  CHECK(c.meanX2All != a.meanX2All);
}

TEST_CASE("runaway integration throws UnstableStep") {
  OptomechConfig cfg = unit_oscillator(300.0);
  cfg.gammaM = 1e4;
  SimConfig sim;
  sim.dt = 1e-3;
  sim.steps = 1000;
  sim.trajectories = 1;
  try {
    simulate_langevin_with_force(cfg, 0.0, sim);
    FAIL("expected UnstableStep");
  } catch (const UnstableStep& e) {
    CHECK(e.trajectory() == 0);
    CHECK(e.step() > 0);
  }
}

TEST_CASE("simulation config validation") {
  const auto cfg = unit_oscillator(1.0);
  SimConfig sim;
  sim.dt = 0.2;
  CHECK_THROWS_AS(sim.validate(cfg), std::invalid_argument);
  sim = {};
  sim.segmentLength = 1000;
  CHECK_THROWS_AS(sim.validate(cfg), std::invalid_argument);
  sim = {};
  sim.steps = 1;
  CHECK_THROWS_AS(sim.validate(cfg), std::invalid_argument);
  sim = {};
  CHECK_NOTHROW(sim.validate(cfg));
  CollapseParams colored{1e-8, 1e-7, ColoredNoiseModel{NoiseFamily::LorentzianCutoff, 1.0}};
  CHECK_THROWS_AS(simulate_langevin(cfg, colored, make_point(1e-12), sim), std::invalid_argument);
}

TEST_CASE("power-law fit recovers exact data") {
  std::vector<double> t, y;
  for (int i = 1; i <= 20; ++i) {
    t.push_back(0.1 * i);
    y.push_back(2.5 * std::pow(0.1 * i, 2.75));
  }
  const auto f = fit_power_law(t, y);
  CHECK(f.exponent == doctest::Approx(2.75).epsilon(1e-12));
  CHECK(f.prefactor == doctest::Approx(2.5).epsilon(1e-12));
  CHECK_THROWS_AS(fit_power_law({1.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("trajectory file round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "cslbounds_traj_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "t.bin").string();
  TrajectoryFileHeader h;
  h.seed = 0xfedcba9876543210ULL;
  h.configHash = 12345;
  h.dt = 1e-3;
  h.samples = 3;
  h.trajectories = 2;
  std::vector<Trajectory> trs = {{{0, 1e-3, 2e-3}, {1, -2, 3.5}, {0, 0, 1e-30}},
                                 {{0, 1e-3, 2e-3}, {-1, 2, 0.25}, {7, 8, 9}}};
  write_trajectory_file(path, h, trs);
  const auto f = read_trajectory_file(path);
  CHECK(f.header.seed == h.seed);
  CHECK(f.header.configHash == h.configHash);
  CHECK(f.header.dt == h.dt);
  REQUIRE(f.trajectories.size() == 2);
  CHECK(f.trajectories[1].x == trs[1].x);
  CHECK(f.trajectories[0].p == trs[0].p);
  CHECK(std::filesystem::file_size(path) == 8 + 4 + 4 + 8 + 8 + 8 + 8 + 8 + 2 * 3 * 3 * 8);

  {
    std::ofstream bad(path, std::ios::binary);
    bad << "NOTATRAJECTORYFILE";
  }
  CHECK_THROWS(read_trajectory_file(path));
  h.samples = 4;
  CHECK_THROWS(write_trajectory_file(path, h, trs));
  std::filesystem::remove_all(dir);
}

}
