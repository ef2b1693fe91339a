#include "cslbounds/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "cslbounds/quadrature.hpp"
#include "cslbounds/special_functions.hpp"

namespace cslbounds {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw GeometryError(what);
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

Eigen::Vector3d unit_axis(const Eigen::Vector3d& v, const char* what) {
  const double n = v.norm();
  require(std::isfinite(n) && n > 0.0, std::string(what) + ": axis must be a non-zero vector");
  // leave near-unit input alone so that re-normalizing is idempotent
  if (std::abs(n - 1.0) < 1e-15) return v;
  return v / n;
}

// Index and sign of a coordinate-aligned unit vector, or -1.
int coordinate_axis(const Eigen::Vector3d& v, int* sign) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(std::abs(v[i]) - 1.0) < 1e-12 && std::abs(v[(i + 1) % 3]) < 1e-12 &&
        std::abs(v[(i + 2) % 3]) < 1e-12) {
      *sign = v[i] > 0 ? 1 : -1;
      return i;
    }
  }
  return -1;
}

// Second antiderivative of the Gaussian g(u) = exp(-u^2/4r^2) / (2 sqrt(pi) r).
double gaussian_h2(double u, double r) {
  return 0.5 * (u * std::erf(u / (2.0 * r)) + (2.0 * r / std::sqrt(kPi)) * std::exp(-u * u / (4.0 * r * r)));
}

double gaussian_g(double u, double r) {
  return std::exp(-u * u / (4.0 * r * r)) / (2.0 * std::sqrt(kPi) * r);
}

// int_[a,b] int_[c,d] h(z - z') dz' dz given H with H'' = h.
template <typename H>
double double_interval(const H& antiderivative2, double a, double b, double c, double d) {
  return antiderivative2(b - c) - antiderivative2(a - c) - antiderivative2(b - d) +
         antiderivative2(a - d);
}

}  // namespace

Point make_point(double mass) {
  Point p{mass};
  validate(Body{p});
  return p;
}

Sphere make_sphere(double mass, double radius) {
  Sphere s{mass, radius};
  validate(Body{s});
  return s;
}

Cuboid make_cuboid(double mass, double lx, double ly, double lz) {
  Cuboid c{mass, lx, ly, lz};
  validate(Body{c});
  return c;
}

Cylinder make_cylinder(double mass, double radius, double length, const Eigen::Vector3d& axis) {
  Cylinder c{mass, radius, length, unit_axis(axis, "cylinder")};
  validate(Body{c});
  return c;
}

Multilayer make_multilayer(int layerCount, double d1, double d2, double rho1, double rho2,
                           double lx, double ly, const Eigen::Vector3d& stackingAxis) {
  Multilayer m{layerCount, d1, d2, rho1, rho2, lx, ly, unit_axis(stackingAxis, "multilayer")};
  validate(Body{m});
  return m;
}

PointLattice make_point_lattice(std::vector<PointMass> points) {
  require(!points.empty(), "point lattice: at least one point required");
  double mass = 0.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  for (const auto& p : points) {
    require(positive_finite(p.mass), "point lattice: masses must be positive");
    require(p.position.allFinite(), "point lattice: positions must be finite");
    mass += p.mass;
    com += p.mass * p.position;
  }
  com /= mass;
  for (auto& p : points) p.position -= com;
  return PointLattice{std::move(points)};
}

TwoBody make_two_body(const Body& unit, double separation) {
  TwoBody t{unit, separation};
  validate(MassGeometry{t});
  return t;
}

MassGeometry to_geometry(const Body& body) {
  return std::visit([](const auto& b) -> MassGeometry { return b; }, body);
}

void validate(const Body& b) {
  std::visit(Overloaded{
                 [](const Point& p) { require(positive_finite(p.mass), "point: mass must be positive"); },
                 [](const Sphere& s) {
                   require(positive_finite(s.mass), "sphere: mass must be positive");
                   require(positive_finite(s.radius), "sphere: radius must be positive");
                 },
                 [](const Cuboid& c) {
                   require(positive_finite(c.mass), "cuboid: mass must be positive");
                   require(positive_finite(c.lx) && positive_finite(c.ly) && positive_finite(c.lz),
                           "cuboid: edge lengths must be positive");
                 },
                 [](const Cylinder& c) {
                   require(positive_finite(c.mass), "cylinder: mass must be positive");
                   require(positive_finite(c.radius), "cylinder: radius must be positive");
                   require(positive_finite(c.length), "cylinder: length must be positive");
                   require(std::abs(c.axis.norm() - 1.0) < 1e-12, "cylinder: axis must be a unit vector");
                 },
                 [](const Multilayer& m) {
                   require(m.layerCount >= 1, "multilayer: layer count must be >= 1");
                   require(positive_finite(m.d1) && positive_finite(m.d2),
                           "multilayer: layer thicknesses must be positive");
                   require(positive_finite(m.rho1) && positive_finite(m.rho2),
                           "multilayer: densities must be positive");
                   require(positive_finite(m.lx) && positive_finite(m.ly),
                           "multilayer: cross-section must be positive");
                   int sign = 0;
                   require(coordinate_axis(m.stackingAxis, &sign) >= 0,
                           "multilayer: stacking axis must be a coordinate axis");
                 },
                 [](const PointLattice& l) {
                   require(!l.points.empty(), "point lattice: at least one point required");
                   for (const auto& p : l.points) {
                     require(positive_finite(p.mass), "point lattice: masses must be positive");
                     require(p.position.allFinite(), "point lattice: positions must be finite");
                   }
                 },
             },
             b);
}

void validate(const MassGeometry& g) {
  std::visit(Overloaded{
                 [](const TwoBody& t) {
                   validate(t.unit);
                   require(std::isfinite(t.separation) && t.separation >= 0.0,
                           "two-body: separation must be non-negative");
                 },
                 [](const auto& b) { validate(Body{b}); },
             },
             g);
}

std::string kind_name(const MassGeometry& g) {
  return std::visit(Overloaded{
                        [](const Point&) { return std::string("point"); },
                        [](const Sphere&) { return std::string("sphere"); },
                        [](const Cuboid&) { return std::string("cuboid"); },
                        [](const Cylinder&) { return std::string("cylinder"); },
                        [](const Multilayer&) { return std::string("multilayer"); },
                        [](const PointLattice&) { return std::string("lattice"); },
                        [](const TwoBody&) { return std::string("two_body"); },
                    },
                    g);
}

std::vector<SlabProfile::Slab> multilayer_slabs(const Multilayer& m) {
  std::vector<SlabProfile::Slab> slabs;
  slabs.reserve(static_cast<std::size_t>(m.layerCount));
  double z = 0.0;
  for (int j = 0; j < m.layerCount; ++j) {
    const bool first = (j % 2 == 0);
    const double t = first ? m.d1 : m.d2;
    slabs.push_back({z, z + t, first ? m.rho1 : m.rho2});
    z += t;
  }
  return slabs;
}

double total_mass(const Body& b) {
  return std::visit(Overloaded{
                        [](const Point& p) { return p.mass; },
                        [](const Sphere& s) { return s.mass; },
                        [](const Cuboid& c) { return c.mass; },
                        [](const Cylinder& c) { return c.mass; },
                        [](const Multilayer& m) {
                          double linear = 0.0;
                          for (const auto& s : multilayer_slabs(m)) linear += s.density * (s.hi - s.lo);
                          return linear * m.lx * m.ly;
                        },
                        [](const PointLattice& l) {
                          double mass = 0.0;
                          for (const auto& p : l.points) mass += p.mass;
                          return mass;
                        },
                    },
                    b);
}

double total_mass(const MassGeometry& g) {
  return std::visit(Overloaded{
                        [](const TwoBody& t) { return 2.0 * total_mass(t.unit); },
                        [](const auto& b) { return total_mass(Body{b}); },
                    },
                    g);
}

double extent(const Body& b) {
  return std::visit(Overloaded{
                        [](const Point&) { return 0.0; },
                        [](const Sphere& s) { return 2.0 * s.radius; },
                        [](const Cuboid& c) { return std::sqrt(c.lx * c.lx + c.ly * c.ly + c.lz * c.lz); },
                        [](const Cylinder& c) {
                          return std::sqrt(4.0 * c.radius * c.radius + c.length * c.length);
                        },
                        [](const Multilayer& m) {
                          double t = 0.0;
                          for (const auto& s : multilayer_slabs(m)) t += s.hi - s.lo;
                          return std::sqrt(m.lx * m.lx + m.ly * m.ly + t * t);
                        },
                        [](const PointLattice& l) {
                          double r = 0.0;
                          for (const auto& p : l.points) r = std::max(r, p.position.norm());
                          return 2.0 * r;
                        },
                    },
                    b);
}

double extent(const MassGeometry& g) {
  return std::visit(Overloaded{
                        [](const TwoBody& t) { return t.separation + extent(t.unit); },
                        [](const auto& b) { return extent(Body{b}); },
                    },
                    g);
}

MassGeometry scale_density(const MassGeometry& g, double alpha) {
  auto scaleBody = [alpha](Body b) {
    std::visit(Overloaded{
                   [alpha](Point& p) { p.mass *= alpha; },
                   [alpha](Sphere& s) { s.mass *= alpha; },
                   [alpha](Cuboid& c) { c.mass *= alpha; },
                   [alpha](Cylinder& c) { c.mass *= alpha; },
                   [alpha](Multilayer& m) {
                     m.rho1 *= alpha;
                     m.rho2 *= alpha;
                   },
                   [alpha](PointLattice& l) {
                     for (auto& p : l.points) p.mass *= alpha;
                   },
               },
               b);
    return b;
  };
  return std::visit(Overloaded{
                        [&](const TwoBody& t) -> MassGeometry { return TwoBody{scaleBody(t.unit), t.separation}; },
                        [&](const auto& b) -> MassGeometry { return to_geometry(scaleBody(Body{b})); },
                    },
                    g);
}

// ---------------------------------------------------------------------------
// SlabProfile

SlabProfile SlabProfile::box(double length) {
  SlabProfile p;
  p.slabs_ = {{-0.5 * length, 0.5 * length, 1.0}};
  p.linearMass_ = length;
  return p;
}

SlabProfile SlabProfile::stack(const std::vector<Slab>& slabs) {
  if (slabs.empty()) throw GeometryError("slab profile: no slabs");
  double mass = 0.0;
  double moment = 0.0;
  for (const auto& s : slabs) {
    const double m = s.density * (s.hi - s.lo);
    mass += m;
    moment += m * 0.5 * (s.lo + s.hi);
  }
  const double com = moment / mass;
  SlabProfile p;
  p.slabs_.reserve(slabs.size());
  for (const auto& s : slabs) p.slabs_.push_back({s.lo - com, s.hi - com, s.density});
  p.linearMass_ = mass;
  return p;
}

double SlabProfile::min_thickness() const {
  double t = slabs_.front().hi - slabs_.front().lo;
  for (const auto& s : slabs_) t = std::min(t, s.hi - s.lo);
  return t;
}

Complex SlabProfile::transform(double k) const {
  Complex sum = 0.0;
  for (const auto& s : slabs_) {
    const double t = s.hi - s.lo;
    const double c = 0.5 * (s.lo + s.hi);
    sum += s.density * t * sinc(0.5 * k * t) * std::polar(1.0, k * c);
  }
  return sum / linearMass_;
}

Complex SlabProfile::transform_derivative(double k) const {
  Complex sum = 0.0;
  for (const auto& s : slabs_) {
    const double t = s.hi - s.lo;
    const double c = 0.5 * (s.lo + s.hi);
    const Complex phase = std::polar(1.0, k * c);
    sum += s.density * t * phase * Complex(0.5 * t * sinc_derivative(0.5 * k * t), c * sinc(0.5 * k * t));
  }
  return sum / linearMass_;
}

namespace {

// Below this extent / r the real-space differences lose more than about two
// digits; the k-space integrand is then smooth and cheap.
constexpr double kRealSpaceThreshold = 0.2;

// 2 int_0^{8/r} h(k) dk for an even integrand h.
template <typename H>
double k_line_integral(const H& h, double r, double oscillationLength) {
  const double kMax = 8.0 / r;
  const int panels = 4 + static_cast<int>(std::ceil(kMax * oscillationLength / kPi));
  EvalBudget budget;
  const QuadratureResult q = integrate_1d(h, 0.0, kMax, Integrate1dOptions{panels, 1e-12, 0.0}, budget);
  return 2.0 * q.value;
}

}  // namespace

double SlabProfile::gaussian_moment0(double r) const {
  if (extent() < kRealSpaceThreshold * r) {
    auto h = [&](double k) { return std::norm(transform(k)) * std::exp(-k * k * r * r); };
    return k_line_integral(h, r, extent());
  }
  auto h2 = [r](double u) { return gaussian_h2(u, r); };
  double sum = 0.0;
  for (const auto& si : slabs_)
    for (const auto& sj : slabs_)
      sum += si.density * sj.density * double_interval(h2, si.lo, si.hi, sj.lo, sj.hi);
  return 2.0 * kPi * sum / (linearMass_ * linearMass_);
}

double SlabProfile::gaussian_moment2(double r) const {
  if (extent() < kRealSpaceThreshold * r) {
    auto h = [&](double k) { return k * k * std::norm(transform(k)) * std::exp(-k * k * r * r); };
    return k_line_integral(h, r, extent());
  }
  return gaussian_moment2_cos(r, 0.0);
}

double SlabProfile::gaussian_moment2_cos(double r, double shift) const {
  auto minusG = [r](double u) { return -gaussian_g(u, r); };
  double sum = 0.0;
  for (const auto& si : slabs_)
    for (const auto& sj : slabs_)
      sum += si.density * sj.density *
             double_interval(minusG, si.lo + shift, si.hi + shift, sj.lo, sj.hi);
  return 2.0 * kPi * sum / (linearMass_ * linearMass_);
}

double SlabProfile::gaussian_moment2_split(double r, double shift) const {
  if (extent() < kRealSpaceThreshold * r) {
    auto h = [&](double k) {
      const double b = shift * k;
      // 1 - cos b = 2 sin^2(b/2) keeps precision for small b.
      const double s = std::sin(0.5 * b);
      return k * k * std::norm(transform(k)) * 2.0 * s * s * std::exp(-k * k * r * r);
    };
    return k_line_integral(h, r, extent() + shift);
  }
  return gaussian_moment2(r) - gaussian_moment2_cos(r, shift);
}

double SlabProfile::gaussian_moment_d0(double r) const {
  if (extent() < kRealSpaceThreshold * r) {
    auto h = [&](double k) { return std::norm(transform_derivative(k)) * std::exp(-k * k * r * r); };
    return k_line_integral(h, r, extent());
  }
  // (2 pi / M^2) sum_ij rho_i rho_j int_I int_J z z' g(z - z') dz' dz, with
  // the inner integral in closed form.
  auto phi = [r](double w) { return 0.5 * std::erf(w / (2.0 * r)); };
  auto psi = [r](double w) { return -(r / std::sqrt(kPi)) * std::exp(-w * w / (4.0 * r * r)); };
  double sum = 0.0;
  for (const auto& si : slabs_) {
    for (const auto& sj : slabs_) {
      auto outer = [&](double z) {
        const double inner = z * (phi(z - sj.lo) - phi(z - sj.hi)) - (psi(z - sj.lo) - psi(z - sj.hi));
        return z * inner;
      };
      const double zmax = std::max({std::abs(si.lo), std::abs(si.hi), std::abs(sj.lo), std::abs(sj.hi)});
      // The integrand is a polynomial away from the edges of J; break at
      // graded distances from each edge and let the adaptive rule refine.
      std::vector<double> cuts{si.lo, si.hi};
      for (double edge : {sj.lo, sj.hi})
        for (double d : {0.0, 1.0, 4.0, 16.0})
          for (double sgn : {-1.0, 1.0}) {
            const double z = edge + sgn * d * r;
            if (z > si.lo && z < si.hi) cuts.push_back(z);
          }
      std::sort(cuts.begin(), cuts.end());
      const double absTol = 1e-15 * zmax * zmax / r;
      EvalBudget budget;
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k], b = cuts[k + 1];
        if (!(b > a)) continue;
        const int panels = 1 + static_cast<int>(std::min(64.0, std::ceil((b - a) / r)));
        const QuadratureResult q =
            integrate_1d(outer, a, b, Integrate1dOptions{panels, 1e-12, absTol * (b - a)}, budget);
        sum += si.density * sj.density * q.value;
      }
    }
  }
  return 2.0 * kPi * sum / (linearMass_ * linearMass_);
}

double SlabProfile::gaussian_moment_c1(double r) const {
  if (extent() < kRealSpaceThreshold * r) {
    auto h = [&](double k) {
      return k * std::real(transform(k) * std::conj(transform_derivative(k))) * std::exp(-k * k * r * r);
    };
    return k_line_integral(h, r, extent());
  }
  // Re(f conj f') = (|f|^2)'/2; integrate by parts against k exp(-k^2 r^2).
  return -0.5 * (gaussian_moment0(r) - 2.0 * r * r * gaussian_moment2(r));
}

std::array<SlabProfile, 3> lab_profiles(const Cuboid& c) {
  return {SlabProfile::box(c.lx), SlabProfile::box(c.ly), SlabProfile::box(c.lz)};
}

std::array<SlabProfile, 3> lab_profiles(const Multilayer& m) {
  int sign = 1;
  const int s = coordinate_axis(m.stackingAxis, &sign);
  if (s < 0) throw GeometryError("multilayer: stacking axis must be a coordinate axis");
  auto slabs = multilayer_slabs(m);
  if (sign < 0) {
    std::vector<SlabProfile::Slab> mirrored;
    for (auto it = slabs.rbegin(); it != slabs.rend(); ++it)
      mirrored.push_back({-it->hi, -it->lo, it->density});
    slabs = std::move(mirrored);
  }
  std::array<SlabProfile, 3> out{SlabProfile::box(1.0), SlabProfile::box(1.0), SlabProfile::box(1.0)};
  out[s] = SlabProfile::stack(slabs);
  out[(s + 1) % 3] = SlabProfile::box(m.lx);
  out[(s + 2) % 3] = SlabProfile::box(m.ly);
  return out;
}

// ---------------------------------------------------------------------------
// Form factors

namespace {

Complex product_form(const std::array<SlabProfile, 3>& f, double mass, const Eigen::Vector3d& k) {
  return mass * f[0].transform(k.x()) * f[1].transform(k.y()) * f[2].transform(k.z());
}

Vector3cd product_gradient(const std::array<SlabProfile, 3>& f, double mass, const Eigen::Vector3d& k) {
  const Complex fx = f[0].transform(k.x());
  const Complex fy = f[1].transform(k.y());
  const Complex fz = f[2].transform(k.z());
  Vector3cd g;
  g << mass * f[0].transform_derivative(k.x()) * fy * fz,
      mass * fx * f[1].transform_derivative(k.y()) * fz,
      mass * fx * fy * f[2].transform_derivative(k.z());
  return g;
}

}  // namespace

Complex form_factor(const Body& b, const Eigen::Vector3d& k) {
  return std::visit(
      Overloaded{
          [](const Point& p) { return Complex(p.mass); },
          [&](const Sphere& s) { return Complex(s.mass * ball_shape(k.norm() * s.radius)); },
          [&](const Cuboid& c) {
            return Complex(c.mass * sinc(0.5 * k.x() * c.lx) * sinc(0.5 * k.y() * c.ly) *
                           sinc(0.5 * k.z() * c.lz));
          },
          [&](const Cylinder& c) {
            const double kpar = k.dot(c.axis);
            const double kperp = (k - kpar * c.axis).norm();
            return Complex(c.mass * disk_shape(kperp * c.radius) * sinc(0.5 * kpar * c.length));
          },
          [&](const Multilayer& m) { return product_form(lab_profiles(m), total_mass(Body{m}), k); },
          [&](const PointLattice& l) {
            Complex sum = 0.0;
            for (const auto& p : l.points) sum += p.mass * std::polar(1.0, k.dot(p.position));
            return sum;
          },
      },
      b);
}

Complex form_factor(const MassGeometry& g, const Eigen::Vector3d& k) {
  return std::visit(Overloaded{
                        [&](const TwoBody& t) { return form_factor(t.unit, k); },
                        [&](const auto& b) { return form_factor(Body{b}, k); },
                    },
                    g);
}

Vector3cd form_factor_gradient(const Body& b, const Eigen::Vector3d& k) {
  return std::visit(
      Overloaded{
          [](const Point&) -> Vector3cd { return Vector3cd::Zero(); },
          [&](const Sphere& s) -> Vector3cd {
            const double kn = k.norm();
            if (kn == 0.0) return Vector3cd::Zero();
            const double d = s.mass * s.radius * ball_shape_derivative(kn * s.radius) / kn;
            return (d * k).cast<Complex>();
          },
          [&](const Cuboid& c) -> Vector3cd {
            const double sx = sinc(0.5 * k.x() * c.lx);
            const double sy = sinc(0.5 * k.y() * c.ly);
            const double sz = sinc(0.5 * k.z() * c.lz);
            Eigen::Vector3d g;
            g << 0.5 * c.lx * sinc_derivative(0.5 * k.x() * c.lx) * sy * sz,
                sx * 0.5 * c.ly * sinc_derivative(0.5 * k.y() * c.ly) * sz,
                sx * sy * 0.5 * c.lz * sinc_derivative(0.5 * k.z() * c.lz);
            return (c.mass * g).cast<Complex>();
          },
          [&](const Cylinder& c) -> Vector3cd {
            const double kpar = k.dot(c.axis);
            const Eigen::Vector3d kperpVec = k - kpar * c.axis;
            const double q = kperpVec.norm();
            const double axial = sinc(0.5 * kpar * c.length);
            const double radial = disk_shape(q * c.radius);
            Eigen::Vector3d g = radial * 0.5 * c.length * sinc_derivative(0.5 * kpar * c.length) * c.axis;
            if (q > 0.0) g += c.radius * disk_shape_derivative(q * c.radius) * axial * kperpVec / q;
            return (c.mass * g).cast<Complex>();
          },
          [&](const Multilayer& m) -> Vector3cd {
            return product_gradient(lab_profiles(m), total_mass(Body{m}), k);
          },
          [&](const PointLattice& l) -> Vector3cd {
            Vector3cd g = Vector3cd::Zero();
            for (const auto& p : l.points) {
              const Complex w = Complex(0.0, p.mass) * std::polar(1.0, k.dot(p.position));
              g += w * p.position.cast<Complex>();
            }
            return g;
          },
      },
      b);
}

Complex form_factor_angular_derivative_fd(const MassGeometry& g, const Eigen::Vector3d& k, double h) {
  const Eigen::Vector3d ey = h * Eigen::Vector3d::UnitY();
  const Eigen::Vector3d ez = h * Eigen::Vector3d::UnitZ();
  const Complex dz = (form_factor(g, k + ez) - form_factor(g, k - ez)) / (2.0 * h);
  const Complex dy = (form_factor(g, k + ey) - form_factor(g, k - ey)) / (2.0 * h);
  return k.y() * dz - k.z() * dy;
}

Complex form_factor_angular_derivative(const MassGeometry& g, const Eigen::Vector3d& k, double rcHint) {
  return std::visit(Overloaded{
                        [](const Point&) { return Complex(0.0); },
                        [](const Sphere&) { return Complex(0.0); },
                        [&](const Multilayer& m) {
                          const double scale =
                              rcHint > 0.0 ? 1.0 / rcHint : 1.0 / extent(Body{m});
                          const double h = 1e-6 * std::max(k.norm(), scale);
                          return form_factor_angular_derivative_fd(g, k, h);
                        },
                        [&](const TwoBody& t) {
                          return form_factor_angular_derivative(to_geometry(t.unit), k, rcHint);
                        },
                        [&](const auto& b) {
                          const Vector3cd grad = form_factor_gradient(Body{b}, k);
                          return k.y() * grad.z() - k.z() * grad.y();
                        },
                    },
                    g);
}

}  // namespace cslbounds
