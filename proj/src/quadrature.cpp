#include "cslbounds/quadrature.hpp"

#include <string>

#include "cslbounds/constants.hpp"

namespace cslbounds {

void QuadratureSpec::validate() const {
  if (!(relTol > 0.0 || absTol > 0.0))
    throw std::invalid_argument("quadrature: relTol or absTol must be positive");
  if (relTol < 0.0 || absTol < 0.0)
    throw std::invalid_argument("quadrature: tolerances must be non-negative");
  if (maxEvals <= 0) throw std::invalid_argument("quadrature: maxEvals must be positive");
  if (!(cutoffFactor >= 5.0))
    throw std::invalid_argument("quadrature: cutoffFactor must be >= 5");
}

namespace {

constexpr int kMaxPanels = 1 << 20;

int panel_count(double range, double halfPeriod) {
  if (!(halfPeriod > 0.0)) return 1;
  const double n = std::ceil(range / halfPeriod);
  return static_cast<int>(std::clamp(n, 1.0, double(kMaxPanels)));
}

struct Frame {
  Eigen::Vector3d e1, e2, e3;
};

Frame frame_about(const Eigen::Vector3d& axis) {
  Frame fr;
  fr.e3 = axis.normalized();
  const Eigen::Vector3d trial =
      std::abs(fr.e3.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  fr.e1 = (trial - trial.dot(fr.e3) * fr.e3).normalized();
  fr.e2 = fr.e3.cross(fr.e1);
  return fr;
}

struct SphericalPass {
  const KIntegrand& in;
  Frame fr;
  double rC;
  double uMax;
  double thetaMax;
  EvalBudget& budget;

  // One nested evaluation with inner tolerances (relTol, absTheta, absPhi).
  QuadratureResult run(double relTol, double absOuter, double absTheta, double absPhi) {
    const double L = in.lengthScale;
    auto phiIntegral = [&](double k, double st, double ct) {
      const Eigen::Vector3d base = k * ct * fr.e3;
      if (in.azimuthallySymmetric) {
        ++budget.used;
        return 2.0 * kPi * in.f(base + k * st * fr.e1);
      }
      auto g = [&](double phi) {
        return in.f(base + k * st * (std::cos(phi) * fr.e1 + std::sin(phi) * fr.e2));
      };
      Integrate1dOptions o{panel_count(2.0 * kPi, 2.0 * kPi / (k * L * st + 1e-300)), relTol, absPhi};
      return integrate_1d(g, 0.0, 2.0 * kPi, o, budget).value;
    };
    auto thetaIntegral = [&](double u) {
      const double k = u / rC;
      auto g = [&](double theta) {
        const double st = std::sin(theta);
        return st * phiIntegral(k, st, std::cos(theta));
      };
      Integrate1dOptions o{panel_count(thetaMax, 2.0 * kPi / (k * L + 1e-300)), relTol, absTheta};
      return integrate_1d(g, 0.0, thetaMax, o, budget).value;
    };
    auto radial = [&](double u) { return u * u * thetaIntegral(u); };
    Integrate1dOptions o{std::max(4, panel_count(uMax, std::min(0.5, kPi * rC / (L + 1e-300)))),
                         relTol, absOuter};
    return integrate_1d(radial, 0.0, uMax, o, budget);
  }
};

}  // namespace

QuadratureResult integrate_k3(const KIntegrand& integrand, double rC, const QuadratureSpec& spec) {
  spec.validate();
  if (!(rC > 0.0)) throw std::invalid_argument("integrate_k3: rC must be positive");
  if (!integrand.f) throw std::invalid_argument("integrate_k3: empty integrand");

  EvalBudget budget{spec.maxEvals};
  const double symmetryFactor = integrand.inversionSymmetric ? 2.0 : 1.0;
  SphericalPass pass{integrand,
                     frame_about(integrand.polarAxis),
                     rC,
                     spec.cutoffFactor,
                     integrand.inversionSymmetric ? 0.5 * kPi : kPi,
                     budget};

  // Coarse pass fixes the absolute scale for the inner tolerances, so that
  // regions of negligible Gaussian weight are not resolved to relative
  // precision.
  const double coarseRel = std::max(spec.relTol, 1e-3);
  const QuadratureResult coarse = pass.run(coarseRel, 0.0, 0.0, 0.0);
  const double scaleU = std::abs(coarse.value);
  const double absU = spec.absTol * rC * rC * rC / symmetryFactor;
  const double target = std::max(absU, spec.relTol * scaleU);

  QuadratureResult fine;
  if (!budget.failed) {
    const double innerRel = 0.25 * spec.relTol;
    const double u3 = spec.cutoffFactor * spec.cutoffFactor * spec.cutoffFactor;
    const double absTheta = 0.25 * target * 3.0 / u3;
    const double absPhi = 0.25 * absTheta;
    fine = pass.run(innerRel, 0.5 * target, absTheta, absPhi);
    fine.error += 0.5 * target;
  } else {
    fine = coarse;
  }

  const double scale = symmetryFactor / (rC * rC * rC);
  QuadratureResult out;
  out.value = fine.value * scale;
  out.error = fine.error * scale;
  out.evaluations = budget.used;
  out.converged = !budget.failed &&
                  out.error <= std::max(spec.absTol, spec.relTol * std::abs(out.value)) * 1.0000001;
  if (budget.failed) {
    out.converged = false;
    throw NonConvergence("integrate_k3: evaluation budget of " + std::to_string(spec.maxEvals) +
                             " exhausted",
                         out);
  }
  return out;
}

QuadratureResult integrate_k1_half_line(const std::function<double(double)>& g, double rC,
                                        double lengthScale, double relTol,
                                        const QuadratureSpec& spec) {
  if (!(rC > 0.0)) throw std::invalid_argument("integrate_k1_half_line: rC must be positive");
  EvalBudget budget{spec.maxEvals};
  const double uMax = spec.cutoffFactor;
  const int panels =
      std::max(4, panel_count(uMax, std::min(0.5, kPi * rC / (lengthScale + 1e-300))));
  auto h = [&](double u) { return g(u / rC); };
  Integrate1dOptions o{panels, relTol, spec.absTol * rC};
  QuadratureResult r = integrate_1d(h, 0.0, uMax, o, budget);
  r.value /= rC;
  r.error /= rC;
  if (!r.converged)
    throw NonConvergence("integrate_k1_half_line: evaluation budget of " +
                             std::to_string(spec.maxEvals) + " exhausted",
                         r);
  return r;
}

}  // namespace cslbounds
