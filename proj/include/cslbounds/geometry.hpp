#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

// Rigid-body mass distributions and their Fourier-space form factors
//   mu~(k) = int mu(x) exp(i k.x) dx,
// with every body centered at its center of mass.
namespace cslbounds {

using Complex = std::complex<double>;
using Vector3cd = Eigen::Matrix<Complex, 3, 1>;

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Point {
  double mass = 0.0;
};

struct Sphere {
  double mass = 0.0;
  double radius = 0.0;
};

struct Cuboid {
  double mass = 0.0;
  double lx = 0.0, ly = 0.0, lz = 0.0;
};

struct Cylinder {
  double mass = 0.0;
  double radius = 0.0;
  double length = 0.0;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
};

// Alternating slabs of two materials, starting with material 1 at the
// negative end of the stacking axis. The stacking axis must be a coordinate
// axis; the cross-section edges lx, ly follow the cyclic order
// (z: x,y), (x: y,z), (y: z,x).
struct Multilayer {
  int layerCount = 1;
  double d1 = 0.0, d2 = 0.0;
  double rho1 = 0.0, rho2 = 0.0;
  double lx = 0.0, ly = 0.0;
  Eigen::Vector3d stackingAxis = Eigen::Vector3d::UnitZ();
};

struct PointMass {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double mass = 0.0;
};

// Point masses; make_point_lattice shifts positions to the center of mass.
struct PointLattice {
  std::vector<PointMass> points;
};

using Body = std::variant<Point, Sphere, Cuboid, Cylinder, Multilayer, PointLattice>;

// Two identical units separated by `separation` along x.
struct TwoBody {
  Body unit;
  double separation = 0.0;
};

using MassGeometry = std::variant<Point, Sphere, Cuboid, Cylinder, Multilayer, PointLattice, TwoBody>;

Point make_point(double mass);
Sphere make_sphere(double mass, double radius);
Cuboid make_cuboid(double mass, double lx, double ly, double lz);
Cylinder make_cylinder(double mass, double radius, double length,
                       const Eigen::Vector3d& axis = Eigen::Vector3d::UnitZ());
Multilayer make_multilayer(int layerCount, double d1, double d2, double rho1, double rho2,
                           double lx, double ly,
                           const Eigen::Vector3d& stackingAxis = Eigen::Vector3d::UnitZ());
PointLattice make_point_lattice(std::vector<PointMass> points);
TwoBody make_two_body(const Body& unit, double separation);

MassGeometry to_geometry(const Body& body);

// Throws GeometryError when an invariant is violated.
void validate(const MassGeometry& g);
void validate(const Body& b);

std::string kind_name(const MassGeometry& g);

// For TwoBody, the mass of both units.
double total_mass(const MassGeometry& g);
double total_mass(const Body& b);

// Largest chord of the body (m); zero for a point.
double extent(const Body& b);
double extent(const MassGeometry& g);

// Every mass and density multiplied by alpha.
MassGeometry scale_density(const MassGeometry& g, double alpha);

// One-dimensional piecewise-constant density, used for the factors of
// product-form bodies (cuboid, multilayer). The transform is normalized to 1
// at k = 0.
class SlabProfile {
 public:
  struct Slab {
    double lo, hi, density;
  };

  static SlabProfile box(double length);
  // Slabs given in order along the axis; re-centered on their center of mass.
  static SlabProfile stack(const std::vector<Slab>& slabs);

  const std::vector<Slab>& slabs() const { return slabs_; }
  double linear_mass() const { return linearMass_; }
  double extent() const { return slabs_.back().hi - slabs_.front().lo; }
  double min_thickness() const;

  Complex transform(double k) const;
  Complex transform_derivative(double k) const;

  // Gaussian-weighted moments over the whole k line, with w(k) = exp(-k^2 r^2):
  //   gaussian_moment0(r)          = int |f|^2 w dk
  //   gaussian_moment2(r)          = int k^2 |f|^2 w dk
  //   gaussian_moment2_cos(r, a)   = int k^2 |f|^2 cos(a k) w dk
  //   gaussian_moment2_split(r, a) = int k^2 |f|^2 (1 - cos(a k)) w dk
  //   gaussian_moment_d0(r)        = int |f'|^2 w dk
  //   gaussian_moment_c1(r)        = Re int k f conj(f') w dk
  // Evaluated in real space (closed forms, or a smooth 1D integral for d0)
  // when extent >= 0.2 r; otherwise by Gauss-Kronrod in k, where the
  // real-space differences would cancel.
  double gaussian_moment0(double r) const;
  double gaussian_moment2(double r) const;
  double gaussian_moment2_cos(double r, double shift) const;
  double gaussian_moment2_split(double r, double shift) const;
  double gaussian_moment_d0(double r) const;
  double gaussian_moment_c1(double r) const;

 private:
  std::vector<Slab> slabs_;
  double linearMass_ = 0.0;
};

// Per-axis factors of a cuboid or multilayer in the lab frame, so that
// mu~(k) = mass * f_x(k_x) f_y(k_y) f_z(k_z).
std::array<SlabProfile, 3> lab_profiles(const Cuboid& c);
std::array<SlabProfile, 3> lab_profiles(const Multilayer& m);

// Layer slabs of a multilayer along its stacking axis (before centering).
std::vector<SlabProfile::Slab> multilayer_slabs(const Multilayer& m);

// mu~(k). For TwoBody this is the transform of a single unit; the pair
// phase factor is applied by the spectrum routines.
Complex form_factor(const MassGeometry& g, const Eigen::Vector3d& k);
Complex form_factor(const Body& b, const Eigen::Vector3d& k);

// grad_k mu~(k), analytic for every body type.
Vector3cd form_factor_gradient(const Body& b, const Eigen::Vector3d& k);

// k_y d/dk_z mu~ - k_z d/dk_y mu~ : the generator of rotations about x
// applied to the form factor. Sphere, Point, Cuboid, Cylinder and
// PointLattice use analytic derivatives; Multilayer falls back to central
// differences with step 1e-6 max(|k|, 1/rcHint).
Complex form_factor_angular_derivative(const MassGeometry& g, const Eigen::Vector3d& k,
                                       double rcHint = 0.0);

// Central-difference evaluation of the same quantity with step h.
Complex form_factor_angular_derivative_fd(const MassGeometry& g, const Eigen::Vector3d& k,
                                          double h);

}  // namespace cslbounds
