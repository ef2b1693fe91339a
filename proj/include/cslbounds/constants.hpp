#pragma once

namespace cslbounds {

// SI values. Every routine that needs a constant takes a PhysicalConstants so
// that sensitivity runs (pointcheck --hbar-scale) can perturb them.
struct PhysicalConstants {
  double hbar = 1.054571817e-34;      // J s
  double kB = 1.380649e-23;           // J/K
  double m0 = 1.67262e-27;            // nucleon mass, kg
  double secondsPerYear = 3.15576e7;  // Julian year, s

  void validate() const;
};

inline constexpr PhysicalConstants kConstants{};

inline constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace cslbounds
