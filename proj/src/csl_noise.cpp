#include "cslbounds/csl_noise.hpp"

#include <cmath>
#include <limits>

#include "cslbounds/special_functions.hpp"

namespace cslbounds {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kClosedFormRelError = 1e-13;

// Value with an absolute error estimate, for products of independently
// integrated factors.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
  std::int64_t evaluations = 0;
};

Estimate exact(double v) { return {v, kClosedFormRelError * std::abs(v), 0}; }

Estimate from(const QuadratureResult& q) { return {q.value, q.error, q.evaluations}; }

Estimate operator*(const Estimate& a, const Estimate& b) {
  return {a.value * b.value, std::abs(a.value) * b.error + a.error * std::abs(b.value) + a.error * b.error,
          a.evaluations + b.evaluations};
}

Estimate operator*(double s, const Estimate& a) {
  return {s * a.value, std::abs(s) * a.error, a.evaluations};
}

Estimate operator+(const Estimate& a, const Estimate& b) {
  return {a.value + b.value, a.error + b.error, a.evaluations + b.evaluations};
}

QuadratureResult to_result(const Estimate& e) {
  return QuadratureResult{e.value, e.error, e.evaluations, true};
}

// hbar^2 lambda rC^3 / (pi^{3/2} m0^2): prefactor of the k-space integral.
double k_prefactor(const CollapseParams& p, const PhysicalConstants& c) {
  return c.hbar * c.hbar * p.lambda * p.rC * p.rC * p.rC / (std::pow(kPi, 1.5) * c.m0 * c.m0);
}

// hbar^2 lambda / (2 m0^2 rC^2): point-mass spectrum per unit mass^2.
double point_prefactor(const CollapseParams& p, const PhysicalConstants& c) {
  return c.hbar * c.hbar * p.lambda / (2.0 * c.m0 * c.m0 * p.rC * p.rC);
}

// int_0^S s^n exp(-s) ds for integer n >= 0.
double lower_gamma_int(int n, double S) {
  if (S <= 0.0) return 0.0;
  if (S < n + 1.0) {
    // e^{-S} S^{n+1} sum_k S^k / ((n+1)...(n+1+k)); all terms positive.
    double term = 1.0 / (n + 1.0);
    double sum = term;
    for (int k = 1; k < 200; ++k) {
      term *= S / (n + 1.0 + k);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return std::exp(-S + (n + 1.0) * std::log(S)) * sum;
  }
  double partial = 0.0;
  double term = 1.0;
  double factorial = 1.0;
  for (int j = 0; j <= n; ++j) {
    if (j > 0) {
      term *= S / j;
      factorial *= j;
    }
    partial += term;
  }
  return factorial * (1.0 - std::exp(-S) * partial);
}

// Real-space evaluation for a homogeneous ball: the pair kernel integrated
// against the overlap volume of two displaced balls.
double sphere_force_closed_form(const Sphere& s, const CollapseParams& p, const PhysicalConstants& c) {
  const double R = s.radius;
  const double r = p.rC;
  const double rho = s.mass / (4.0 * kPi * R * R * R / 3.0);
  const double S = R * R / (r * r);
  auto moment = [&](int n) {  // int_0^{2R} d^{2n+1} exp(-d^2 / 4r^2) dd
    return std::pow(2.0, 2 * n + 1) * std::pow(r, 2 * n + 2) * lower_gamma_int(n, S);
  };
  const double D = 2.0 * R;
  const double boundary = (4.0 * R * R * R / 3.0) * (D * D * D / 3.0) * std::exp(-S);
  const double bulk = -R * R * moment(1) + (1.0 / 12.0 + R * R / (6.0 * r * r)) * moment(2) -
                      moment(3) / (72.0 * r * r);
  return point_prefactor(p, c) * rho * rho * 4.0 * kPi * kPi * (boundary + bulk);
}

// 2/3 - int_{-1}^{1} t^2 cos(b t) dt.
double angular_split(double b) {
  const double ab = std::abs(b);
  if (ab < 2.0) {
    const double b2 = b * b;
    double sum = 0.0;
    double power = 1.0;
    double factorial = 1.0;
    for (int n = 1; n < 30; ++n) {
      power *= b2;
      factorial *= (2.0 * n - 1.0) * (2.0 * n);
      const double term = power / (factorial * (2.0 * n + 3.0));
      sum += (n % 2 == 1) ? term : -term;
      if (term < 1e-18 * std::abs(sum)) break;
    }
    return 2.0 * sum;
  }
  const double s = std::sin(b);
  const double co = std::cos(b);
  return 2.0 / 3.0 - 2.0 * (s / b + 2.0 * co / (b * b) - 2.0 * s / (b * b * b));
}

// 1 - J0(b) + J2(b) = (2/pi) int_0^{2pi} cos^2(phi) sin^2(b cos(phi) / 2) dphi.
double bessel_split(double b) {
  const double ab = std::abs(b);
  if (ab < 2.0) {
    const double x = 0.25 * b * b;
    double sum = 0.0;
    double xn = 1.0;
    double nf = 1.0;    // n!
    double nm1f = 1.0;  // (n-1)!
    double np1f = 1.0;  // (n+1)!
    for (int n = 1; n < 40; ++n) {
      xn *= x;
      nm1f = nf;
      nf *= n;
      np1f = nf * (n + 1);
      const double term = xn * (1.0 / (nf * nf) + 1.0 / (nm1f * np1f));
      sum += (n % 2 == 1) ? term : -term;
      if (term < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return 1.0 - bessel_j0(b) + bessel_j2(b);
}

Estimate k1(const std::function<double(double)>& g, const CollapseParams& p, double lengthScale,
            const QuadratureSpec& spec) {
  return from(integrate_k1_half_line(g, p.rC, lengthScale, 0.25 * spec.relTol, spec));
}

// ---------------------------------------------------------------------------
// I(nu, j, eps) = int_0^inf x^(j-2) J_nu(x)^2 exp(-eps^2 x^2) dx for small eps,
// where the integrand oscillates over ~1/eps periods. With the Hankel form
// J_nu^2 = [P^2 + Q^2 + Re((P + iQ)^2 e^(2i chi))] / (pi x) beyond X0:
//   [0, X0]    direct Gauss-Kronrod,
//   mean part  smooth, integrated in u = eps x,
//   oscillating part moved onto z = X0 + i t, where e^(2i chi) decays as e^(-2t).
// The neglected pieces of the contour are below e^(-2T) / eps.

constexpr double kBesselAsymptoticEps = 1e-3;
constexpr double kBesselX0 = 200.0;

void hankel_pq(int nu, Complex z, Complex& P, Complex& Q) {
  const double mu = 4.0 * nu * nu;
  P = 1.0;
  Q = 0.0;
  Complex term = 1.0;
  for (int k = 1; k <= 16; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (static_cast<double>(k) * 8.0 * z);
    switch (k % 4) {
      case 1: Q += term; break;
      case 2: P -= term; break;
      case 3: Q -= term; break;
      default: P += term; break;
    }
    if (std::abs(term) < 1e-18) break;
  }
}

Estimate bessel_square_moment(int nu, int j, double eps, const QuadratureSpec& spec) {
  const double X0 = kBesselX0;
  const double tol = 0.25 * spec.relTol;
  EvalBudget budget{spec.maxEvals};
  auto fail = [&](const QuadratureResult& r, const char* part) {
    if (!r.converged) throw NonConvergence(std::string("bessel square moment: ") + part + " did not converge", r);
  };

  // Smooth mean part first; it sets the absolute scale for the others.
  auto mean = [&](double u) {
    const double x = u / eps;
    Complex P, Q;
    hankel_pq(nu, x, P, Q);
    return std::pow(x, j - 2) * (std::norm(P) + std::norm(Q)) / (kPi * x) * std::exp(-u * u) / eps;
  };
  const double uLo = eps * X0, uHi = std::max(spec.cutoffFactor, 2.0 * uLo);
  const QuadratureResult mTail = integrate_1d(mean, uLo, uHi, Integrate1dOptions{16, tol, 0.0}, budget);
  fail(mTail, "mean tail");

  auto head = [&](double x) {
    const double J = bessel_jn(nu, x);
    return std::pow(x, j - 2) * J * J * std::exp(-eps * eps * x * x);
  };
  const int headPanels = static_cast<int>(std::ceil(2.0 * X0 / kPi));
  const QuadratureResult h =
      integrate_1d(head, 0.0, X0, Integrate1dOptions{headPanels, tol, tol * std::abs(mTail.value)}, budget);
  fail(h, "head");

  const Complex phase = std::exp(Complex(0.0, -(2.0 * nu + 1.0) * kPi / 2.0));
  auto oscReal = [&](double t) {
    const Complex z(X0, t);
    Complex P, Q;
    hankel_pq(nu, z, P, Q);
    const Complex pq = P + Complex(0.0, 1.0) * Q;
    const Complex v = std::pow(z, j - 2) * pq * pq / (kPi * z) * std::exp(Complex(0.0, 2.0) * z) * phase *
                      std::exp(-eps * eps * z * z);
    return (Complex(0.0, 1.0) * v).real();
  };
  const QuadratureResult osc =
      integrate_1d(oscReal, 0.0, 40.0, Integrate1dOptions{8, tol, tol * std::abs(mTail.value)}, budget);
  fail(osc, "oscillating tail");

  return Estimate{h.value + mTail.value + osc.value, h.error + mTail.error + osc.error,
                  h.evaluations + mTail.evaluations + osc.evaluations};
}

// ---------------------------------------------------------------------------
// Cylinder: separable in (k_perp, k_par) about the symmetry axis.

struct CylinderFactors {
  const Cylinder& cyl;
  const CollapseParams& p;
  const QuadratureSpec& spec;
  SlabProfile axial = SlabProfile::box(cyl.length);

  double F(double q) const { return disk_shape(q * cyl.radius); }
  double dF(double q) const { return cyl.radius * disk_shape_derivative(q * cyl.radius); }
  double w(double q) const { return std::exp(-q * q * p.rC * p.rC); }

  // int_0^inf q^j h(q) exp(-q^2 rC^2) dq
  template <typename H>
  Estimate radial(int j, const H& h, double extraLength = 0.0) const {
    auto g = [&](double q) { return std::pow(q, j) * h(q) * w(q); };
    return k1(g, p, 2.0 * cyl.radius + extraLength, spec);
  }
  // Radius much larger than rC: Bessel moments with F = 2 J1(x) / x,
  // F' = -2 R J2(x) / x, x = q R.
  double eps() const { return p.rC / cyl.radius; }
  bool asymptotic() const { return eps() < kBesselAsymptoticEps; }

  Estimate q1_ff() const {
    if (asymptotic()) return (4.0 / (cyl.radius * cyl.radius)) * bessel_square_moment(1, 1, eps(), spec);
    return radial(1, [&](double q) { return F(q) * F(q); });
  }
  Estimate q3_ff() const {
    if (asymptotic()) return (4.0 / std::pow(cyl.radius, 4)) * bessel_square_moment(1, 3, eps(), spec);
    return radial(3, [&](double q) { return F(q) * F(q); });
  }
  Estimate q1_dd() const {
    if (asymptotic()) return 4.0 * bessel_square_moment(2, 1, eps(), spec);
    return radial(1, [&](double q) { return dF(q) * dF(q); });
  }
};

double axis_x2(const Cylinder& cyl) { return cyl.axis.x() * cyl.axis.x(); }

bool aligned_with_x(const Eigen::Vector3d& n) { return std::abs(std::abs(n.x()) - 1.0) < 1e-12; }
bool perpendicular_to_x(const Eigen::Vector3d& n) { return std::abs(n.x()) < 1e-12; }

Estimate cylinder_force(const Cylinder& cyl, const CollapseParams& p, const QuadratureSpec& spec) {
  CylinderFactors f{cyl, p, spec};
  const double nx2 = axis_x2(cyl);
  Estimate total;
  if (nx2 < 1.0) total = total + (kPi * (1.0 - nx2)) * (f.q3_ff() * exact(f.axial.gaussian_moment0(p.rC)));
  if (nx2 > 0.0) total = total + (2.0 * kPi * nx2) * (f.q1_ff() * exact(f.axial.gaussian_moment2(p.rC)));
  return total;
}

Estimate cylinder_torque(const Cylinder& cyl, const CollapseParams& p, const QuadratureSpec& spec) {
  const double perp = 1.0 - axis_x2(cyl);
  if (perp <= 0.0) return {};
  CylinderFactors f{cyl, p, spec};
  const Estimate q3 = f.q3_ff();
  const Estimate q1d = f.q1_dd();
  const double r = p.rC;
  Estimate q2;
  if (f.asymptotic()) {
    // F F' = (F^2)' / 2; integrating by parts gives -Q1(F^2) + rC^2 Q3(F^2),
    // free of cancellation while rC << R.
    q2 = (-1.0) * f.q1_ff() + (r * r) * q3;
  } else {
    // The mixed moment changes sign; tolerance scaled by the Cauchy-Schwarz bound.
    QuadratureSpec mixedSpec = spec;
    mixedSpec.absTol = 0.25 * spec.relTol * std::sqrt(std::abs(q3.value * q1d.value));
    auto g = [&](double q) { return q * q * f.F(q) * f.dF(q) * f.w(q); };
    q2 = from(integrate_k1_half_line(g, p.rC, 2.0 * cyl.radius, 0.25 * spec.relTol, mixedSpec));
  }
  const Estimate bracket = q3 * exact(f.axial.gaussian_moment_d0(r)) +
                           (-2.0) * (q2 * exact(f.axial.gaussian_moment_c1(r))) +
                           q1d * exact(f.axial.gaussian_moment2(r));
  return (kPi * perp) * bracket;
}

// ---------------------------------------------------------------------------
// Product bodies: mu~ = M f_x f_y f_z.

struct ProductBody {
  double mass;
  std::array<SlabProfile, 3> f;
};

std::optional<ProductBody> product_body(const Body& b) {
  if (const auto* c = std::get_if<Cuboid>(&b)) return ProductBody{c->mass, lab_profiles(*c)};
  if (const auto* m = std::get_if<Multilayer>(&b)) return ProductBody{total_mass(b), lab_profiles(*m)};
  return std::nullopt;
}

double product_force(const ProductBody& pb, double r) {
  return pb.mass * pb.mass * pb.f[0].gaussian_moment2(r) * pb.f[1].gaussian_moment0(r) *
         pb.f[2].gaussian_moment0(r);
}

double product_torque(const ProductBody& pb, double r) {
  const auto& [fx, fy, fz] = pb.f;
  // Only the stacking axis of a multilayer can be asymmetric, so the
  // imaginary parts of the two c1 moments never multiply each other.
  const double bracket = fy.gaussian_moment2(r) * fz.gaussian_moment_d0(r) +
                         fy.gaussian_moment_d0(r) * fz.gaussian_moment2(r) -
                         2.0 * fy.gaussian_moment_c1(r) * fz.gaussian_moment_c1(r);
  return pb.mass * pb.mass * fx.gaussian_moment0(r) * bracket;
}

// ---------------------------------------------------------------------------
// Spherical k-space route.

QuadratureResult run_k3(const KIntegrand& in, const CollapseParams& p, const QuadratureSpec& spec,
                        double scale) {
  try {
    QuadratureResult q = integrate_k3(in, p.rC, spec);
    q.value *= scale;
    q.error *= scale;
    return q;
  } catch (const NonConvergence& e) {
    QuadratureResult best = e.best();
    best.value *= scale;
    best.error *= scale;
    throw NonConvergence(e.what(), best);
  }
}

// Polar axis and azimuthal symmetry about it for a body whose integrand
// involves k_x.
void choose_axis(const Body& b, KIntegrand& in) {
  in.polarAxis = Eigen::Vector3d::UnitX();
  in.inversionSymmetric = true;
  std::visit(Overloaded{
                 [&](const Point&) { in.azimuthallySymmetric = true; },
                 [&](const Sphere&) { in.azimuthallySymmetric = true; },
                 [&](const Cylinder& c) {
                   if (aligned_with_x(c.axis)) {
                     in.azimuthallySymmetric = true;
                   } else {
                     in.polarAxis = c.axis;
                   }
                 },
                 [&](const auto&) {},
             },
             b);
}

Body as_body(const MassGeometry& g) {
  return std::visit(Overloaded{
                        [](const TwoBody&) -> Body {
                          throw GeometryError("two-body geometry where a single body is required");
                        },
                        [](const auto& b) -> Body { return b; },
                    },
                    g);
}

QuadratureResult spherical_force(const Body& b, const CollapseParams& p, const QuadratureSpec& spec,
                                 const PhysicalConstants& c) {
  const double r2 = p.rC * p.rC;
  KIntegrand in;
  in.f = [&b, r2](const Eigen::Vector3d& k) {
    return std::norm(form_factor(b, k)) * k.x() * k.x() * std::exp(-k.squaredNorm() * r2);
  };
  in.lengthScale = extent(b);
  choose_axis(b, in);
  return run_k3(in, p, spec, k_prefactor(p, c));
}

QuadratureResult spherical_two_body(const TwoBody& t, const CollapseParams& p,
                                    const QuadratureSpec& spec, const PhysicalConstants& c) {
  const double r2 = p.rC * p.rC;
  const double a = t.separation;
  const Body& b = t.unit;
  KIntegrand in;
  in.f = [&b, r2, a](const Eigen::Vector3d& k) {
    const double s = std::sin(0.5 * a * k.x());
    return std::norm(form_factor(b, k)) * k.x() * k.x() * 2.0 * s * s * std::exp(-k.squaredNorm() * r2);
  };
  in.lengthScale = extent(b) + a;
  choose_axis(b, in);
  return run_k3(in, p, spec, 0.5 * k_prefactor(p, c));
}

QuadratureResult spherical_torque(const MassGeometry& g, const CollapseParams& p,
                                  const QuadratureSpec& spec, const PhysicalConstants& c) {
  const double r2 = p.rC * p.rC;
  const double rC = p.rC;
  KIntegrand in;
  in.f = [&g, r2, rC](const Eigen::Vector3d& k) {
    return std::norm(form_factor_angular_derivative(g, k, rC)) * std::exp(-k.squaredNorm() * r2);
  };
  in.lengthScale = extent(g);
  choose_axis(as_body(g), in);
  return run_k3(in, p, spec, k_prefactor(p, c));
}

std::vector<PointMass> signed_pair(const PointLattice& unit, double a) {
  std::vector<PointMass> pts;
  pts.reserve(2 * unit.points.size());
  for (const auto& q : unit.points) pts.push_back(q);
  for (const auto& q : unit.points)
    pts.push_back({q.position + Eigen::Vector3d(a, 0.0, 0.0), -q.mass});
  return pts;
}

}  // namespace

// ---------------------------------------------------------------------------

void ColoredNoiseModel::validate() const {
  if (family == NoiseFamily::LorentzianCutoff && !(std::isfinite(omegaC) && omegaC > 0.0))
    throw std::invalid_argument("colored noise: omegaC must be positive");
}

double ColoredNoiseModel::filter(double omega) const {
  if (family == NoiseFamily::White) return 1.0;
  const double w2 = omegaC * omegaC;
  return w2 / (w2 + omega * omega);
}

void CollapseParams::validate() const {
  if (!(std::isfinite(lambda) && lambda >= 0.0))
    throw std::invalid_argument("collapse parameters: lambda must be >= 0");
  if (!(std::isfinite(rC) && rC > 0.0))
    throw std::invalid_argument("collapse parameters: rC must be positive");
  if (colored) colored->validate();
}

void PhysicalConstants::validate() const {
  if (!(hbar > 0.0 && kB > 0.0 && m0 > 0.0 && secondsPerYear > 0.0))
    throw std::invalid_argument("physical constants must be positive");
}

double point_force_spectrum(double mass, const CollapseParams& p, const PhysicalConstants& c) {
  return point_prefactor(p, c) * mass * mass;
}

namespace {

struct PointColumns {
  std::vector<double> x, y, z, m;

  explicit PointColumns(const std::vector<PointMass>& points) {
    for (const auto& p : points) {
      x.push_back(p.position.x());
      y.push_back(p.position.y());
      z.push_back(p.position.z());
      m.push_back(p.mass);
    }
  }
};

constexpr double kPairSkip = 50.0;  // exp(-50) ~ 2e-22

}  // namespace

double pair_kernel_force(const std::vector<PointMass>& points, double lambda, double rC,
                         const PhysicalConstants& c) {
  const PointColumns pc(points);
  const double inv4r2 = 1.0 / (4.0 * rC * rC);
  const double inv2r2 = 1.0 / (2.0 * rC * rC);
  const std::size_t n = points.size();
  CompensatedSum sum;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = pc.x[i], yi = pc.y[i], zi = pc.z[i];
    double row = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = xi - pc.x[j];
      const double dy = yi - pc.y[j];
      const double dz = zi - pc.z[j];
      const double e = (dx * dx + dy * dy + dz * dz) * inv4r2;
      if (e > kPairSkip) continue;
      row += pc.m[j] * (1.0 - dx * dx * inv2r2) * std::exp(-e);
    }
    sum.add(pc.m[i] * (pc.m[i] + 2.0 * row));
  }
  const CollapseParams p{lambda, rC, std::nullopt};
  return point_prefactor(p, c) * sum.value();
}

double pair_kernel_torque(const std::vector<PointMass>& points, double lambda, double rC,
                          const PhysicalConstants& c) {
  const PointColumns pc(points);
  const double r2 = rC * rC;
  const double inv4r2 = 1.0 / (4.0 * r2);
  const double inv4r4 = 1.0 / (4.0 * r2 * r2);
  const double half = 1.0 / (2.0 * r2);
  const std::size_t n = points.size();
  CompensatedSum sum;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = pc.x[i], yi = pc.y[i], zi = pc.z[i];
    double row = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double yj = pc.y[j];
      const double zj = pc.z[j];
      const double dx = xi - pc.x[j];
      const double dy = yi - yj;
      const double dz = zi - zj;
      const double e = (dx * dx + dy * dy + dz * dz) * inv4r2;
      if (e > kPairSkip) continue;
      const double k = zi * zj * (half - dy * dy * inv4r4) + yi * yj * (half - dz * dz * inv4r4) +
                       (zi * yj + yi * zj) * dy * dz * inv4r4;
      row += pc.m[j] * k * std::exp(-e);
    }
    sum.add(pc.m[i] * (pc.m[i] * (zi * zi + yi * yi) * half + 2.0 * row));
  }
  return c.hbar * c.hbar * lambda / (c.m0 * c.m0) * sum.value();
}

QuadratureResult csl_force_spectrum(const MassGeometry& g, const CollapseParams& p,
                                    const QuadratureSpec& spec, Route route,
                                    const PhysicalConstants& c) {
  p.validate();
  spec.validate();
  validate(g);
  const Body b = as_body(g);
  if (p.lambda == 0.0) return {};
  if (route == Route::Spherical) return spherical_force(b, p, spec, c);

  return std::visit(
      Overloaded{
          [&](const Point& pt) { return to_result(exact(point_force_spectrum(pt.mass, p, c))); },
          [&](const Sphere& s) { return to_result(exact(sphere_force_closed_form(s, p, c))); },
          [&](const Cylinder& cyl) { return to_result(k_prefactor(p, c) * cyl.mass * cyl.mass * cylinder_force(cyl, p, spec)); },
          [&](const PointLattice& l) {
            return to_result(exact(pair_kernel_force(l.points, p.lambda, p.rC, c)));
          },
          [&](const auto&) {
            const ProductBody pb = *product_body(b);
            return to_result(exact(k_prefactor(p, c) * product_force(pb, p.rC)));
          },
      },
      b);
}

QuadratureResult csl_force_spectrum_two_body(const TwoBody& t, const CollapseParams& p,
                                             const QuadratureSpec& spec, Route route,
                                             const PhysicalConstants& c) {
  p.validate();
  spec.validate();
  validate(MassGeometry{t});
  const double a = t.separation;
  if (p.lambda == 0.0 || a == 0.0) return {};
  if (route == Route::Spherical) return spherical_two_body(t, p, spec, c);

  // Units farther apart than 30 rC: the cross term carries exp(-225) and the
  // differential spectrum is half the single-unit one.
  if (a - extent(t.unit) > 30.0 * p.rC) {
    QuadratureResult single = csl_force_spectrum(to_geometry(t.unit), p, spec, Route::Auto, c);
    single.value *= 0.5;
    single.error *= 0.5;
    return single;
  }

  const double half = 0.5 * k_prefactor(p, c);
  return std::visit(
      Overloaded{
          [&](const Point& pt) {
            const double x = a * a / (p.rC * p.rC);
            const double em = std::expm1(-0.25 * x);
            const double split = -em + 0.5 * x + 0.5 * x * em;
            return to_result(exact(0.5 * point_force_spectrum(pt.mass, p, c) * split));
          },
          [&](const Sphere& s) {
            const double R = s.radius;
            const double r2 = p.rC * p.rC;
            auto g = [&](double k) {
              const double B = ball_shape(k * R);
              return k * k * k * k * B * B * std::exp(-k * k * r2) * angular_split(a * k);
            };
            return to_result((half * s.mass * s.mass * 2.0 * kPi) * k1(g, p, 2.0 * R + a, spec));
          },
          [&](const Cylinder& cyl) {
            if (aligned_with_x(cyl.axis)) {
              CylinderFactors f{cyl, p, spec};
              return to_result((half * cyl.mass * cyl.mass * 2.0 * kPi) *
                               (f.q1_ff() * exact(f.axial.gaussian_moment2_split(p.rC, a))));
            }
            if (perpendicular_to_x(cyl.axis)) {
              CylinderFactors f{cyl, p, spec};
              const Estimate q = f.radial(
                  3, [&](double qq) { return f.F(qq) * f.F(qq) * bessel_split(a * qq); }, a);
              return to_result((half * cyl.mass * cyl.mass * kPi) *
                               (q * exact(f.axial.gaussian_moment0(p.rC))));
            }
            return spherical_two_body(t, p, spec, c);
          },
          [&](const PointLattice& l) {
            return to_result(exact(0.25 * pair_kernel_force(signed_pair(l, a), p.lambda, p.rC, c)));
          },
          [&](const auto&) {
            const ProductBody pb = *product_body(t.unit);
            const double r = p.rC;
            return to_result(exact(half * pb.mass * pb.mass * pb.f[0].gaussian_moment2_split(r, a) *
                                   pb.f[1].gaussian_moment0(r) * pb.f[2].gaussian_moment0(r)));
          },
      },
      t.unit);
}

QuadratureResult csl_torque_spectrum(const MassGeometry& g, const CollapseParams& p,
                                     const QuadratureSpec& spec, Route route,
                                     const PhysicalConstants& c) {
  p.validate();
  spec.validate();
  validate(g);
  const Body b = as_body(g);
  if (p.lambda == 0.0) return {};
  if (route == Route::Spherical) return spherical_torque(g, p, spec, c);

  return std::visit(
      Overloaded{
          [&](const Point&) { return QuadratureResult{}; },
          [&](const Sphere&) { return QuadratureResult{}; },
          [&](const Cylinder& cyl) {
            return to_result(k_prefactor(p, c) * cyl.mass * cyl.mass * cylinder_torque(cyl, p, spec));
          },
          [&](const PointLattice& l) {
            return to_result(exact(pair_kernel_torque(l.points, p.lambda, p.rC, c)));
          },
          [&](const auto&) {
            const ProductBody pb = *product_body(b);
            return to_result(exact(k_prefactor(p, c) * product_torque(pb, p.rC)));
          },
      },
      b);
}

double apply_colored_filter(double S, const ColoredNoiseModel& model, double omega) {
  if (!(omega >= 0.0)) throw std::invalid_argument("colored filter: omega must be >= 0");
  return S * model.filter(omega);
}

double apply_colored_filter(double S, const std::optional<ColoredNoiseModel>& model, double omega) {
  if (!model) {
    if (!(omega >= 0.0)) throw std::invalid_argument("colored filter: omega must be >= 0");
    return S;
  }
  return apply_colored_filter(S, *model, omega);
}

double csl_temperature_shift(double S_FF, double m, double gamma, const PhysicalConstants& c) {
  if (!(m > 0.0)) throw std::invalid_argument("temperature shift: mass must be positive");
  if (!(gamma > 0.0))
    throw std::invalid_argument("temperature shift: gamma must be positive (the shift diverges without damping)");
  return S_FF / (2.0 * m * gamma * c.kB);
}

double csl_temperature_shift_rot(double S_rot, double D_phi, const PhysicalConstants& c) {
  if (!(D_phi > 0.0))
    throw std::invalid_argument("rotational temperature shift: D_phi must be positive");
  return S_rot / (2.0 * c.kB * D_phi);
}

double free_expansion_spread(const CollapseParams& p, double t, double qmTerm,
                             const PhysicalConstants& c) {
  p.validate();
  if (!(t >= 0.0)) throw std::invalid_argument("free expansion: t must be >= 0");
  return qmTerm + p.lambda * c.hbar * c.hbar * t * t * t / (2.0 * c.m0 * c.m0 * p.rC * p.rC);
}

double heating_rate(const MassGeometry& g, const CollapseParams& p, const QuadratureSpec& spec,
                    const PhysicalConstants& c) {
  const double S = csl_force_spectrum(g, p, spec, Route::Auto, c).value;
  return S / (total_mass(g) * c.kB) * c.secondsPerYear;
}

}  // namespace cslbounds
