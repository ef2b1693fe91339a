#include <doctest.h>

#include <cmath>
#include <initializer_list>

#include "cslbounds/optomech.hpp"

using namespace cslbounds;

namespace {

const PhysicalConstants C{};

OptomechConfig oscillator() {
  OptomechConfig o;
  o.m = 1e-12;
  o.omegaM = 2 * kPi * 1e3;
  o.gammaM = 3.0;
  o.T = 300.0;
  return o;
}

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
  return w;
}

}  // namespace

TEST_SUITE("optomech") {

TEST_CASE("no coupling: thermal plus CSL Lorentzian") {
  const auto cfg = oscillator();
  const CollapseParams p{1e-8, 1e-7, {}};
  const auto g = make_sphere(1e-12, 2e-6);
  const auto ws = grid(1.0, 1e6, 301);
  const auto d = displacement_dns(cfg, p, g, ws);
  const double S = d.forceSpectrum.value;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const double w = ws[i];
    const double x = C.hbar * w / (2 * C.kB * cfg.T);
    const double thermal = C.hbar * cfg.m * cfg.gammaM * w / std::tanh(x);
    const double den = cfg.m * cfg.m * (std::pow(cfg.omegaM * cfg.omegaM - w * w, 2) +
                                       cfg.gammaM * cfg.gammaM * w * w);
    CHECK(d.backaction[i] == 0.0);
    CHECK(d.total.values[i] == doctest::Approx((thermal + S) / den).epsilon(1e-12));
  }
}

TEST_CASE("zero temperature and zero frequency limits of the thermal force") {
  auto cfg = oscillator();
  const double w = 1e3;
  cfg.T = 0.0;
  CHECK(thermal_force_spectrum(cfg, w) == doctest::Approx(C.hbar * cfg.m * cfg.gammaM * w));
  cfg.T = 4.0;
  CHECK(thermal_force_spectrum(cfg, 0.0) == doctest::Approx(2 * cfg.m * cfg.gammaM * C.kB * 4.0));
}

TEST_CASE("high temperature limit") {
  auto cfg = oscillator();
  const CollapseParams p{1e-8, 1e-7, {}};
  const auto h = high_temperature_limit_check(cfg, p, make_sphere(1e-12, 2e-6), 2 * kPi * 1e3);
  CHECK(h.relative_difference() < 1e-5);
  CHECK(h.deltaT > 0.0);
  cfg.T = 1e-9;
  CHECK_THROWS_AS(high_temperature_limit_check(cfg, p, make_sphere(1e-12, 2e-6), 2 * kPi * 1e3),
                  std::invalid_argument);
}

TEST_CASE("the parts add up and the CSL part is linear in lambda") {
  auto cfg = oscillator();
  cfg.chi = 1e8;
  cfg.alphaSq = 1e4;
  cfg.Delta = 2e5;
  cfg.kappa = 1e6;
  const auto ws = grid(10.0, 1e5, 101);
  const auto g = make_cuboid(1e-12, 1e-6, 1e-6, 1e-6);
  const auto a = displacement_dns(cfg, {1e-8, 1e-7, {}}, g, ws);
  const auto b = displacement_dns(cfg, {2e-8, 1e-7, {}}, g, ws);
  const auto z = displacement_dns(cfg, {0.0, 1e-7, {}}, g, ws);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    CHECK(a.total.values[i] == a.backaction[i] + a.thermal[i] + a.csl[i]);
    CHECK(a.backaction[i] > 0.0);
    CHECK(b.csl[i] == doctest::Approx(2 * a.csl[i]).epsilon(1e-14));
    CHECK(b.thermal[i] == a.thermal[i]);
    CHECK(z.csl[i] == 0.0);
    CHECK(a.total.values[i] - z.total.values[i] == doctest::Approx(a.csl[i]).epsilon(1e-9));
  }
}

TEST_CASE("custom effective model") {
  const auto cfg = oscillator();
  const auto ws = grid(10.0, 1e5, 31);
  EffectiveModel stiff = [](const OptomechConfig& c, double, const PhysicalConstants&) {
    return EffectiveResponse{4.0 * c.omegaM * c.omegaM, c.gammaM};
  };
  const auto d = displacement_dns_with_force(cfg, {}, 0.0, ws, stiff);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const double w = ws[i];
    const double den = cfg.m * cfg.m * (std::pow(4 * cfg.omegaM * cfg.omegaM - w * w, 2) +
                                       cfg.gammaM * cfg.gammaM * w * w);
    CHECK(d.thermal[i] == doctest::Approx(thermal_force_spectrum(cfg, w) / den).epsilon(1e-13));
  }
}

TEST_CASE("optical anti-damping is reported") {
  auto cfg = oscillator();
  cfg.chi = 1e12;
  cfg.alphaSq = 1e7;
  cfg.Delta = -1e4;
  cfg.kappa = 1e4;
  CHECK(linearized_response(cfg, 1e3).gammaEff < 0.0);
  try {
    displacement_dns_with_force(cfg, {}, 0.0, grid(1.0, 1e4, 11));
    FAIL("expected NonPositiveDamping");
  } catch (const NonPositiveDamping& e) {
    CHECK(e.gamma_eff() < 0.0);
    CHECK(e.omega() == 1.0);
  }
}

TEST_CASE("colored noise enters the CSL part only") {
  const auto cfg = oscillator();
  CollapseParams p{1e-8, 1e-7, ColoredNoiseModel{NoiseFamily::LorentzianCutoff, 100.0}};
  const std::vector<double> ws = {0.0, 100.0, 1e4};
  const auto d = displacement_dns_with_force(cfg, p, 1e-40, ws);
  const auto white = displacement_dns_with_force(cfg, {1e-8, 1e-7, {}}, 1e-40, ws);
  CHECK(d.csl[0] == doctest::Approx(white.csl[0]));
  CHECK(d.csl[1] == doctest::Approx(0.5 * white.csl[1]));
  CHECK(d.thermal[2] == white.thermal[2]);
}

TEST_CASE("input validation") {
  auto cfg = oscillator();
  CHECK_THROWS_AS(displacement_dns_with_force(cfg, {}, 0.0, {2.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(displacement_dns_with_force(cfg, {}, 0.0, {-1.0}), std::invalid_argument);
  cfg.m = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = oscillator();
  cfg.omegaM = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_NOTHROW(cfg.validate(true));
  CHECK(unit_name(SpectrumKind::Torque) == "N^2 m^2 s");
}

}
