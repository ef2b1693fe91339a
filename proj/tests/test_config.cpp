#include <doctest.h>

#include <cmath>
#include <initializer_list>
#include <string>

#include "cslbounds/config.hpp"

using namespace cslbounds;

namespace {

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string error_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

const char* kFull = R"(
# every section once
[geometry:ball]
type = sphere
radius_um = 2
density_g_cm3 = 2.2

[geometry:stack]
type = multilayer
layers = 5
d1_nm = 200
d2_nm = 300
rho1_kg_m3 = 2000
rho2_kg_m3 = 19000
lx_um = 10
ly_um = 10
stacking_axis = 1 0 0

[geometry:cloud]
type = lattice
points_m_kg = 0 0 0 1e-15; 1e-6 0 0 2e-15; 0 2e-6 0 1e-15

[geometry:pair]
type = two_body
unit = cylinder
mass_g = 1
radius_mm = 1
length_mm = 3
axis = 1 1 0
separation_mm = 10

[collapse]
lambda_per_s = 1e-10
rc_nm = 100
noise = lorentzian
omega_c_rad_s = 1e6

[optomech]
geometry = ball
mass_kg = 3e-14
omega_m_khz = 1.5
gamma_m_per_s = 0.1
temperature_mk = 20
kappa_per_s = 1e5
delta_rad_s = 2e4
chi_rad_s_m = 1e9
alpha_sq = 100

[grid]
omega_min_hz = 10
omega_max_khz = 10
points = 50
spacing = log

[quadrature]
rel_tol = 1e-7
abs_tol = 0
max_evals = 1000000
cutoff_factor = 9

[scan]
rc_min_nm = 1
rc_max_um = 100
points_per_decade = 7
combine = no

[simulation]
dt_us = 5
steps = 1023
trajectories = 3
seed = 18446744073709551615
segment_length = 256
stored_trajectories = 2
moment_stride = 4

[experiment:thermal]
geometry = ball
channel = temperature
budget_mk = 1
gamma_per_s = 0.1
band_lo_hz = 1000
band_hi_hz = 2000
noise = white

[experiment:rot]
geometry = stack
channel = temperature
budget_k = 1e-3
d_phi_j_s = 1e-25
band_lo_rad_s = 10
band_hi_rad_s = 20

[experiment:diff]
geometry = pair
channel = two_body
budget_n2_s = 1e-30
band_lo_hz = 1e-3
band_hi_hz = 1e-2

[experiment:spin]
geometry = stack
channel = torque
budget_n2_m2_s = 1e-40
band_lo_hz = 1
band_hi_hz = 2
)";

}  // namespace

TEST_SUITE("config") {

TEST_CASE("ini reader") {
  const auto s = parse_ini("; c\n[A]\nKey = Value; with spaces  # trailing\n\n[b:x]\nk=1\n");
  REQUIRE(s.size() == 2);
  CHECK(s[0].name == "a");
  CHECK(s[0].entries[0].key == "key");
  CHECK(s[0].entries[0].value == "Value; with spaces");
  CHECK(s[0].entries[0].line == 3);
  CHECK(s[1].name == "b:x");
  CHECK_THROWS_AS(parse_ini("[a]\nk=1\nK=2\n"), ConfigError);
  CHECK_THROWS_AS(parse_ini("[a]\n[a]\n"), ConfigError);
  CHECK_THROWS_AS(parse_ini("k=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_ini("[a]\nno equals sign\n"), ConfigError);
}

TEST_CASE("full config with unit conversions") {
  const RunConfig c = parse_config(kFull);
  REQUIRE(c.geometries.size() == 4);
  const auto& ball = std::get<Sphere>(c.geometries[0].second);
  CHECK(ball.radius == doctest::Approx(2e-6));
  CHECK(ball.mass == doctest::Approx(2200.0 * 4.0 / 3.0 * kPi * 8e-18).epsilon(1e-14));
  const auto& ml = std::get<Multilayer>(c.geometries[1].second);
  CHECK(ml.layerCount == 5);
  CHECK(ml.d1 == doctest::Approx(2e-7));
  CHECK(ml.stackingAxis.x() == 1.0);
  const auto& lat = std::get<PointLattice>(c.geometries[2].second);
  CHECK(lat.points.size() == 3);
  const auto& pair = std::get<TwoBody>(c.geometries[3].second);
  CHECK(pair.separation == doctest::Approx(1e-2));
  CHECK(std::get<Cylinder>(pair.unit).mass == doctest::Approx(1e-3));

  CHECK(c.collapse.rC == doctest::Approx(1e-7));
  REQUIRE(c.collapse.colored);
  CHECK(c.collapse.colored->omegaC == 1e6);
  REQUIRE(c.optomech);
  CHECK(c.optomech->m == 3e-14);
  CHECK(c.optomech->omegaM == doctest::Approx(2 * kPi * 1500));
  CHECK(c.optomech->T == doctest::Approx(0.02));
  CHECK(c.target == "ball");
  CHECK(c.grid.omegaMin == doctest::Approx(2 * kPi * 10));
  CHECK(c.grid.values().size() == 50);
  CHECK(c.quadrature.maxEvals == 1000000);
  CHECK(c.scan.values().front() == doctest::Approx(1e-9));
  CHECK_FALSE(c.scan.combine);
  REQUIRE(c.simulation);
  CHECK(c.simulation->seed == 18446744073709551615ULL);
  CHECK(c.simulation->dt == doctest::Approx(5e-6));

  REQUIRE(c.experiments.size() == 4);
  CHECK(c.experiments[0].budget == doctest::Approx(1e-3));
  CHECK_FALSE(c.experiments[0].colored);  // explicit white
  REQUIRE(c.experiments[1].colored);      // inherited from [collapse]
  CHECK(c.experiments[1].dPhi.value() == 1e-25);
  CHECK(c.experiments[2].channel == Channel::ForceTwoBody);
  CHECK(c.experiments[3].channel == Channel::Torque);
  CHECK(c.experimentGeometries[3] == "stack");

  bool sawRadius = false;
  for (const auto& u : c.conversions)
    if (u.key == "radius_um") {
      sawRadius = true;
      CHECK(u.canonical == "radius_m");
      CHECK(u.raw == "2");
      CHECK(u.si == doctest::Approx(2e-6));
    }
  CHECK(sawRadius);
}

TEST_CASE("canonical form round trips") {
  const RunConfig a = parse_config(kFull);
  const std::string s = serialize_config(a);
  const RunConfig b = parse_config(s);
  CHECK(serialize_config(b) == s);
  CHECK(config_hash(a) == config_hash(b));
  RunConfig changed = a;
  changed.collapse.lambda *= 1.0000001;
  CHECK(config_hash(changed) != config_hash(a));
}

TEST_CASE("errors carry line and field") {
  CHECK(error_line("[collapse]\nlambda_per_s = 1e-16\nrc_m = abc\n") == 3);
  CHECK(error_field("[collapse]\nlambda_per_s = 1e-16\nrc_m = abc\n") == "rc_m");
  CHECK(error_line("[geometry]\ntype = sphere\nradius_m = 1e-6\nmass_kg = 1\ncolour = red\n") == 5);
  // shape errors found after parsing point at the section header
  CHECK(error_line("[geometry]\ntype = sphere\nradius_m = -1e-6\nmass_kg = 1\n") == 1);
  CHECK(error_line("[geometry]\ntype = blob\n") == 2);
  CHECK(error_line("[nonsense]\n") == 1);
  CHECK(error_field("[geometry]\ntype = sphere\nradius_m = 1e-6\nmass_kg = 1\ndensity_kg_m3 = 5\n") != "<none>");
  CHECK(error_field("[collapse]\nrc_furlongs = 3\n") == "rc_furlongs");
  CHECK(error_line("[collapse]\nnoise = lorentzian\n") >= 1);
  CHECK(error_line("[geometry]\ntype = sphere\nradius_m = 1e-6\nmass_kg = 1\n[experiment:x]\ngeometry = nope\n"
                   "channel = force\nbudget_n2_s = 1\nband_lo_hz = 1\nband_hi_hz = 2\n") == 6);
}

TEST_CASE("case-insensitive keys and convenience units") {
  const auto c = parse_config("[GEOMETRY]\nType = point\nMass_G = 2\n[Collapse]\nRC_UM = 3\n");
  CHECK(total_mass(c.target_geometry()) == doctest::Approx(2e-3));
  CHECK(c.collapse.rC == doctest::Approx(3e-6));
  CHECK(c.target == "main");
}

}
