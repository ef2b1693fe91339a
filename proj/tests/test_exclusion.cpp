#include <doctest.h>

#include <cmath>
#include <initializer_list>

#include "cslbounds/exclusion.hpp"

using namespace cslbounds;

namespace {

const PhysicalConstants C{};

ExperimentRecord force_record(const MassGeometry& g, double budget = 1e-40) {
  ExperimentRecord r;
  r.name = "f";
  r.geometry = g;
  r.channel = Channel::ForceTranslational;
  r.budget = budget;
  r.bandLo = 2 * kPi * 900;
  r.bandHi = 2 * kPi * 1100;
  return r;
}

}  // namespace

TEST_SUITE("exclusion") {

TEST_CASE("force bound is budget over the unit-lambda spectrum") {
  const auto rec = force_record(make_sphere(1e-14, 1e-6));
  for (double rC : {1e-8, 1e-6, 1e-4}) {
    const double S = csl_force_spectrum(rec.geometry, {1.0, rC, {}}).value;
    CHECK(lambda_upper_bound(rec, rC).lambdaUB == doctest::Approx(rec.budget / S).epsilon(1e-14));
  }
  // at the bound the predicted spectrum equals the budget
  const double lam = lambda_upper_bound(rec, 1e-7).lambdaUB;
  CHECK(csl_force_spectrum(rec.geometry, {lam, 1e-7, {}}).value == doctest::Approx(rec.budget).epsilon(1e-12));
}

TEST_CASE("temperature channel") {
  ExperimentRecord rec = force_record(make_sphere(1e-14, 1e-6), 1e-3);
  rec.channel = Channel::TemperatureShift;
  rec.gamma = 0.2;
  const double rC = 2e-7;
  const double S = csl_force_spectrum(rec.geometry, {1.0, rC, {}}).value;
  const double lam = lambda_upper_bound(rec, rC).lambdaUB;
  CHECK(lam == doctest::Approx(1e-3 * 2 * 1e-14 * 0.2 * C.kB / S).epsilon(1e-13));
  CHECK(csl_temperature_shift(lam * S, 1e-14, 0.2) == doctest::Approx(1e-3).epsilon(1e-12));

  rec.mass = 5e-14;  // effective mode mass overrides the geometry mass
  CHECK(lambda_upper_bound(rec, rC).lambdaUB == doctest::Approx(5 * lam).epsilon(1e-13));

  ExperimentRecord rot = force_record(make_cylinder(1e-14, 1e-6, 4e-6), 1e-3);
  rot.channel = Channel::TemperatureShift;
  rot.dPhi = 1e-20;
  const double St = csl_torque_spectrum(rot.geometry, {1.0, rC, {}}).value;
  CHECK(lambda_upper_bound(rot, rC).lambdaUB == doctest::Approx(1e-3 * 2 * C.kB * 1e-20 / St).epsilon(1e-13));
}

TEST_CASE("torque on a sphere is degenerate") {
  ExperimentRecord rec = force_record(make_sphere(1e-14, 1e-6), 1e-50);
  rec.channel = Channel::Torque;
  CHECK_THROWS_AS(lambda_upper_bound(rec, 1e-6), DegenerateBound);
  const auto curve = exclusion_scan(rec, log_grid(1e-8, 1e-4, 2));
  for (std::size_t i = 0; i < curve.size(); ++i) {
    CHECK(curve.status[i] == PointStatus::Degenerate);
    CHECK(curve.lambdaUB[i] == kNoBound);
    CHECK(curve.errorEst[i] == kNoBound);
  }
  CHECK_NOTHROW(curve.validate());
}

TEST_CASE("density scaling and colored weakening") {
  const auto rec = force_record(make_cuboid(1e-14, 1e-6, 2e-6, 1e-6));
  ExperimentRecord heavy = rec;
  heavy.geometry = scale_density(rec.geometry, 10.0);
  ExperimentRecord slow = rec;
  slow.colored = ColoredNoiseModel{NoiseFamily::LorentzianCutoff, 1.0};
  ExperimentRecord fast = rec;
  fast.colored = ColoredNoiseModel{NoiseFamily::LorentzianCutoff, 1e15};
  const double w = rec.band_midpoint();
  for (double rC : {1e-8, 1e-6, 1e-4}) {
    const double base = lambda_upper_bound(rec, rC).lambdaUB;
    CHECK(base / lambda_upper_bound(heavy, rC).lambdaUB == doctest::Approx(100.0).epsilon(1e-10));
    CHECK(lambda_upper_bound(slow, rC).lambdaUB / base == doctest::Approx(1.0 + w * w).epsilon(1e-12));
    CHECK(lambda_upper_bound(fast, rC).lambdaUB / base == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("log grid") {
  const auto g = log_grid(1e-9, 1e-3, 50);
  CHECK(g.size() == 301);
  CHECK(g.front() == 1e-9);
  CHECK(g.back() == 1e-3);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] / g[i - 1] == doctest::Approx(std::pow(10.0, 0.02)));
  CHECK(log_grid(1e-6, 1e-6, 10).size() == 1);
  CHECK(default_rc_grid() == g);
  CHECK_THROWS_AS(log_grid(1e-3, 1e-6, 10), std::invalid_argument);
  CHECK_THROWS_AS(log_grid(1e-6, 1e-3, 0), std::invalid_argument);
}

TEST_CASE("scan is independent of the thread count") {
  const auto rec = force_record(make_cylinder(1e-14, 1e-6, 3e-6, {1, 1, 0}));
  const auto grid = log_grid(1e-8, 1e-4, 5);
  const auto a = exclusion_scan(rec, grid, {}, 1);
  const auto b = exclusion_scan(rec, grid, {}, 4);
  CHECK(a.lambdaUB == b.lambdaUB);
  CHECK(a.errorEst == b.errorEst);
  for (auto s : a.status) CHECK(s == PointStatus::Ok);
}

TEST_CASE("scan rejects bad grids") {
  const auto rec = force_record(make_point(1e-14));
  CHECK_THROWS_AS(exclusion_scan(rec, {}), std::invalid_argument);
  CHECK_THROWS_AS(exclusion_scan(rec, {1e-6, 1e-7}), std::invalid_argument);
  CHECK_THROWS_AS(exclusion_scan(rec, {0.0, 1e-7}), std::invalid_argument);
  CHECK(exclusion_scan(rec, {1e-7}).size() == 1);
}

TEST_CASE("non-converged points keep their best estimate") {
  const auto rec = force_record(make_cylinder(1e-14, 1e-6, 2e-6));
  QuadratureSpec spec;
  spec.maxEvals = 30;
  spec.relTol = 1e-14;
  const auto c = exclusion_scan(rec, {1e-4}, spec);
  CHECK(c.status[0] == PointStatus::NonConverged);
  CHECK(c.lambdaUB[0] > 0.0);
  CHECK(c.lambdaUB[0] == doctest::Approx(lambda_upper_bound(rec, 1e-4).lambdaUB).epsilon(1e-2));
}

TEST_CASE("combining curves") {
  ExclusionCurve a{"a", {1, 2, 3}, {1.0, 5.0, kNoBound}, {0.1, 0.1, kNoBound},
                   {PointStatus::Ok, PointStatus::Ok, PointStatus::Degenerate}};
  ExclusionCurve b{"b", {1, 2, 3}, {2.0, 4.0, 7.0}, {0.2, 0.2, 0.2},
                   {PointStatus::Ok, PointStatus::NonConverged, PointStatus::Ok}};
  const auto c = combine_exclusions({a, b});
  CHECK(c.experiment == "a+b");
  CHECK(c.lambdaUB == std::vector<double>{1.0, 4.0, 7.0});
  CHECK(c.status[1] == PointStatus::NonConverged);
  CHECK(c.status[2] == PointStatus::Ok);
  ExclusionCurve d = b;
  d.rCs[1] = 2.1;
  CHECK_THROWS_AS(combine_exclusions({a, d}), std::invalid_argument);
  CHECK_THROWS_AS(combine_exclusions({}), std::invalid_argument);
}

TEST_CASE("record validation") {
  auto rec = force_record(make_point(1e-14));
  rec.budget = 0.0;
  CHECK_THROWS_AS(rec.validate(), std::invalid_argument);
  rec = force_record(make_point(1e-14));
  rec.bandHi = rec.bandLo;
  CHECK_THROWS_AS(rec.validate(), std::invalid_argument);
  rec = force_record(make_point(1e-14));
  rec.channel = Channel::ForceTwoBody;
  CHECK_THROWS_AS(rec.validate(), std::invalid_argument);
  rec = force_record(make_point(1e-14));
  rec.channel = Channel::TemperatureShift;
  CHECK_THROWS_AS(rec.validate(), std::invalid_argument);
  CHECK(channel_name(Channel::ForceTwoBody) == "two_body");
  CHECK(status_name(PointStatus::NonConverged) == "nonconverged");
}

}
