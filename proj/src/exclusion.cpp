#include "cslbounds/exclusion.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cslbounds/parallel.hpp"

namespace cslbounds {

std::string channel_name(Channel ch) {
  switch (ch) {
    case Channel::ForceTranslational: return "force";
    case Channel::ForceTwoBody: return "two_body";
    case Channel::Torque: return "torque";
    case Channel::TemperatureShift: return "temperature";
  }
  return "";
}

std::string status_name(PointStatus s) {
  switch (s) {
    case PointStatus::Ok: return "ok";
    case PointStatus::Degenerate: return "degenerate";
    case PointStatus::NonConverged: return "nonconverged";
  }
  return "";
}

void ExperimentRecord::validate() const {
  auto fail = [this](const std::string& what) {
    throw std::invalid_argument(fmt::format("experiment '{}': {}", name, what));
  };
  cslbounds::validate(geometry);
  if (!(std::isfinite(budget) && budget > 0.0)) fail("budget must be positive and finite");
  if (!(std::isfinite(bandLo) && std::isfinite(bandHi) && bandLo >= 0.0 && bandHi > bandLo))
    fail("band must satisfy 0 <= lo < hi");
  if (colored) colored->validate();
  const bool twoBody = std::holds_alternative<TwoBody>(geometry);
  if (twoBody != (channel == Channel::ForceTwoBody))
    fail("two_body channel requires a two-body geometry and vice versa");
  if (channel == Channel::TemperatureShift) {
    if (dPhi) {
      if (!(std::isfinite(*dPhi) && *dPhi > 0.0)) fail("d_phi must be positive");
    } else {
      if (!(std::isfinite(gamma) && gamma > 0.0)) fail("gamma must be positive");
      if (!(std::isfinite(mass) && mass >= 0.0)) fail("mass must be >= 0");
    }
  }
}

namespace {

QuadratureResult scaled(QuadratureResult r, double f) {
  r.value *= f;
  r.error *= f;
  return r;
}

}  // namespace

QuadratureResult unit_lambda_quantity(const ExperimentRecord& rec, double rC,
                                      const QuadratureSpec& spec, const PhysicalConstants& c) {
  CollapseParams p;
  p.lambda = 1.0;
  p.rC = rC;
  p.colored = rec.colored;
  p.validate();
  QuadratureResult r;
  switch (rec.channel) {
    case Channel::ForceTranslational:
      r = csl_force_spectrum(rec.geometry, p, spec, Route::Auto, c);
      break;
    case Channel::ForceTwoBody:
      r = csl_force_spectrum_two_body(std::get<TwoBody>(rec.geometry), p, spec, Route::Auto, c);
      break;
    case Channel::Torque:
      r = csl_torque_spectrum(rec.geometry, p, spec, Route::Auto, c);
      break;
    case Channel::TemperatureShift:
      r = rec.dPhi ? csl_torque_spectrum(rec.geometry, p, spec, Route::Auto, c)
                   : csl_force_spectrum(rec.geometry, p, spec, Route::Auto, c);
      break;
  }
  return scaled(r, apply_colored_filter(1.0, rec.colored, rec.band_midpoint()));
}

namespace {

bool rotational(const ExperimentRecord& rec) {
  return rec.channel == Channel::Torque || (rec.channel == Channel::TemperatureShift && rec.dPhi);
}

// Torque is compared against S_FF L^2 of the same body at the same rC; a
// vanishing ratio is a symmetry zero, not a weak bound.
void check_degenerate(const ExperimentRecord& rec, double rC, double S,
                      const QuadratureSpec& spec, const PhysicalConstants& c) {
  auto degenerate = [&](const std::string& why) {
    throw DegenerateBound(fmt::format("experiment '{}': no bound at rC = {:.6g} m ({})", rec.name, rC, why),
                          rC);
  };
  if (!(std::isfinite(S) && S > 0.0)) degenerate(fmt::format("{} quantity is {:.3g}", channel_name(rec.channel), S));
  if (rotational(rec)) {
    CollapseParams p;
    p.lambda = 1.0;
    p.rC = rC;
    const double L = extent(rec.geometry);
    const double ref = csl_force_spectrum(rec.geometry, p, spec, Route::Auto, c).value * L * L *
                       apply_colored_filter(1.0, rec.colored, rec.band_midpoint());
    if (!(S > 1e-12 * ref)) degenerate("torque vanishes by symmetry");
  }
}

double bound_factor(const ExperimentRecord& rec, const PhysicalConstants& c) {
  if (rec.channel != Channel::TemperatureShift) return rec.budget;
  if (rec.dPhi) return rec.budget * 2.0 * c.kB * *rec.dPhi;
  const double m = rec.mass > 0.0 ? rec.mass : total_mass(rec.geometry);
  return rec.budget * 2.0 * m * rec.gamma * c.kB;
}

}  // namespace

LambdaBound lambda_upper_bound(const ExperimentRecord& rec, double rC, const QuadratureSpec& spec,
                               const PhysicalConstants& c) {
  rec.validate();
  const double f = bound_factor(rec, c);
  QuadratureResult S;
  try {
    S = unit_lambda_quantity(rec, rC, spec, c);
  } catch (const NonConvergence& e) {
    QuadratureResult best = e.best();
    if (!(best.value > 0.0)) throw;
    const double lam = f / best.value;
    throw NonConvergence(e.what(), QuadratureResult{lam, lam * best.error / best.value, best.evaluations, false});
  }
  check_degenerate(rec, rC, S.value, spec, c);
  LambdaBound out;
  out.lambdaUB = f / S.value;
  out.errorEst = out.lambdaUB * S.error / S.value;
  out.evaluations = S.evaluations;
  return out;
}

void ExclusionCurve::validate() const {
  const std::size_t n = rCs.size();
  if (lambdaUB.size() != n || errorEst.size() != n || status.size() != n)
    throw std::invalid_argument("exclusion curve: column lengths differ");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(std::isfinite(rCs[i]) && rCs[i] > 0.0)) throw std::invalid_argument("exclusion curve: rC must be positive");
    if (i > 0 && !(rCs[i] > rCs[i - 1])) throw std::invalid_argument("exclusion curve: rC grid must increase");
    if (status[i] == PointStatus::Degenerate) {
      if (lambdaUB[i] != kNoBound) throw std::invalid_argument("exclusion curve: degenerate point without sentinel");
    } else if (!(std::isfinite(lambdaUB[i]) && lambdaUB[i] > 0.0 && std::isfinite(errorEst[i]))) {
      throw std::invalid_argument("exclusion curve: bound must be positive and finite");
    }
  }
}

std::vector<double> log_grid(double lo, double hi, double pointsPerDecade) {
  if (!(lo > 0.0 && hi >= lo && std::isfinite(hi)))
    throw std::invalid_argument("rC grid: need 0 < lo <= hi");
  if (!(pointsPerDecade > 0.0)) throw std::invalid_argument("rC grid: points per decade must be positive");
  if (hi == lo) return {lo};
  const double decades = std::log10(hi / lo);
  const auto n = static_cast<std::size_t>(std::max(2.0, std::round(decades * pointsPerDecade) + 1.0));
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = lo * std::pow(10.0, decades * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> default_rc_grid() { return log_grid(1e-9, 1e-3, 50.0); }

ExclusionCurve exclusion_scan(const ExperimentRecord& rec, const std::vector<double>& rCs,
                              const QuadratureSpec& spec, int threads, const PhysicalConstants& c) {
  rec.validate();
  spec.validate();
  if (rCs.empty()) throw std::invalid_argument("exclusion scan: empty rC grid");
  for (std::size_t i = 0; i < rCs.size(); ++i) {
    if (!(std::isfinite(rCs[i]) && rCs[i] > 0.0)) throw std::invalid_argument("exclusion scan: rC must be positive");
    if (i > 0 && !(rCs[i] > rCs[i - 1])) throw std::invalid_argument("exclusion scan: rC grid must increase");
  }
  ExclusionCurve out;
  out.experiment = rec.name;
  out.rCs = rCs;
  const std::size_t n = rCs.size();
  out.lambdaUB.assign(n, kNoBound);
  out.errorEst.assign(n, kNoBound);
  out.status.assign(n, PointStatus::Ok);
  parallel_for(n, threads, [&](std::size_t i) {
    try {
      const LambdaBound b = lambda_upper_bound(rec, rCs[i], spec, c);
      out.lambdaUB[i] = b.lambdaUB;
      out.errorEst[i] = b.errorEst;
    } catch (const DegenerateBound&) {
      out.status[i] = PointStatus::Degenerate;
    } catch (const NonConvergence& e) {
      if (e.best().value > 0.0 && std::isfinite(e.best().value)) {
        out.status[i] = PointStatus::NonConverged;
        out.lambdaUB[i] = e.best().value;
        out.errorEst[i] = std::isfinite(e.best().error) ? e.best().error : e.best().value;
      } else {
        out.status[i] = PointStatus::Degenerate;
      }
    }
  });
  return out;
}

ExclusionCurve combine_exclusions(const std::vector<ExclusionCurve>& curves) {
  if (curves.empty()) throw std::invalid_argument("combine: no curves");
  ExclusionCurve out = curves.front();
  for (const auto& cv : curves) cv.validate();
  for (std::size_t j = 1; j < curves.size(); ++j) {
    const ExclusionCurve& cv = curves[j];
    if (cv.rCs.size() != out.rCs.size())
      throw std::invalid_argument(fmt::format("combine: '{}' has {} grid points, '{}' has {}", cv.experiment,
                                              cv.rCs.size(), curves.front().experiment, out.rCs.size()));
    for (std::size_t i = 0; i < out.rCs.size(); ++i) {
      if (std::abs(cv.rCs[i] - out.rCs[i]) > 1e-12 * out.rCs[i])
        throw std::invalid_argument(fmt::format("combine: '{}' grid differs at index {} ({:.17g} vs {:.17g})",
                                                cv.experiment, i, cv.rCs[i], out.rCs[i]));
      if (cv.status[i] == PointStatus::Degenerate) continue;
      if (out.status[i] == PointStatus::Degenerate || cv.lambdaUB[i] < out.lambdaUB[i]) {
        out.lambdaUB[i] = cv.lambdaUB[i];
        out.errorEst[i] = cv.errorEst[i];
        out.status[i] = cv.status[i];
      }
    }
    out.experiment += "+" + cv.experiment;
  }
  return out;
}

}  // namespace cslbounds
