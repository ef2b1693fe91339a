#pragma once

#include <cmath>
#include <limits>

#include "cslbounds/constants.hpp"

// Special functions needed by the form factors. All are templated on the
// scalar so they can be used with long double in oracles.
namespace cslbounds {

// sin(x)/x with the removable singularity handled by a series.
template <typename Scalar>
Scalar sinc(Scalar x) {
  const Scalar ax = std::abs(x);
  if (ax < Scalar(1e-4)) {
    const Scalar x2 = x * x;
    return Scalar(1) - x2 / Scalar(6) + x2 * x2 / Scalar(120);
  }
  return std::sin(x) / x;
}

// d/dx sinc(x) = (x cos x - sin x) / x^2.
template <typename Scalar>
Scalar sinc_derivative(Scalar x) {
  if (std::abs(x) < Scalar(0.05)) {
    const Scalar x2 = x * x;
    return x * (Scalar(-1) / Scalar(3) +
                x2 * (Scalar(1) / Scalar(30) +
                      x2 * (Scalar(-1) / Scalar(840) + x2 / Scalar(45360))));
  }
  return (x * std::cos(x) - std::sin(x)) / (x * x);
}

// Normalized transform of a homogeneous ball: 3 (sin x - x cos x) / x^3,
// equal to 1 at x = 0.
template <typename Scalar>
Scalar ball_shape(Scalar x) {
  if (std::abs(x) < Scalar(0.05)) {
    const Scalar x2 = x * x;
    return Scalar(1) +
           x2 * (Scalar(-1) / Scalar(10) +
                 x2 * (Scalar(1) / Scalar(280) +
                       x2 * (Scalar(-1) / Scalar(15120) + x2 / Scalar(1330560))));
  }
  return Scalar(3) * (std::sin(x) - x * std::cos(x)) / (x * x * x);
}

// d/dx ball_shape(x) = -3 j2(x) / x.
template <typename Scalar>
Scalar ball_shape_derivative(Scalar x) {
  if (std::abs(x) < Scalar(0.05)) {
    const Scalar x2 = x * x;
    return x * (Scalar(-1) / Scalar(5) +
                x2 * (Scalar(1) / Scalar(70) +
                      x2 * (Scalar(-1) / Scalar(2520) + x2 / Scalar(166320))));
  }
  const Scalar s = std::sin(x);
  const Scalar c = std::cos(x);
  const Scalar j2 = (Scalar(3) / (x * x) - Scalar(1)) * s / x - Scalar(3) * c / (x * x);
  return Scalar(-3) * j2 / x;
}

namespace detail {

// Ascending series, used for |x| < 4 where the largest term stays O(1).
template <typename Scalar>
Scalar bessel_jn_series(int n, Scalar x) {
  const Scalar half = x / Scalar(2);
  Scalar term = Scalar(1);
  for (int i = 1; i <= n; ++i) term *= half / Scalar(i);
  const Scalar q = -half * half;
  Scalar sum = term;
  for (int k = 1; k < 60; ++k) {
    term *= q / (Scalar(k) * Scalar(k + n));
    sum += term;
    if (std::abs(term) < std::numeric_limits<Scalar>::epsilon() * Scalar(1e-2) * std::abs(sum))
      break;
  }
  return sum;
}

// Trapezoid rule on J_n(x) = (1/2pi) int_0^2pi cos(n t - x sin t) dt. The
// integrand is periodic and entire, so the error is the aliased J_{64-n}(x),
// below 1e-20 for |x| <= 20.
template <typename Scalar>
Scalar bessel_jn_trapezoid(int n, Scalar x) {
  constexpr int kNodes = 64;
  Scalar sum = std::cos(-Scalar(0)) + std::cos(Scalar(n) * Scalar(kPi));
  for (int j = 1; j < kNodes / 2; ++j) {
    const Scalar t = Scalar(2) * Scalar(kPi) * Scalar(j) / Scalar(kNodes);
    sum += Scalar(2) * std::cos(Scalar(n) * t - x * std::sin(t));
  }
  return sum / Scalar(kNodes);
}

// Hankel asymptotic expansion, summed until the terms stop decreasing.
template <typename Scalar>
Scalar bessel_jn_asymptotic(int n, Scalar x) {
  const Scalar mu = Scalar(4 * n * n);
  const Scalar eightx = Scalar(8) * x;
  Scalar p = Scalar(1);
  Scalar q = Scalar(0);
  Scalar term = Scalar(1);
  Scalar last = std::numeric_limits<Scalar>::max();
  for (int k = 1; k < 80; ++k) {
    const Scalar odd = Scalar(2 * k - 1);
    term *= (mu - odd * odd) / (Scalar(k) * eightx);
    if (std::abs(term) >= last) break;
    last = std::abs(term);
    // k odd feeds Q with alternating sign, k even feeds P.
    switch (k % 4) {
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
      default: p += term; break;
    }
    if (last < std::numeric_limits<Scalar>::epsilon() * Scalar(1e-3)) break;
  }
  const Scalar chi = x - (Scalar(2 * n + 1)) * Scalar(kPi) / Scalar(4);
  return std::sqrt(Scalar(2) / (Scalar(kPi) * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace detail

// Bessel function of the first kind for n = 0, 1, 2.
// Crossovers: |x| < 4 ascending series, 4 <= |x| <= 20 trapezoid rule on the
// integral representation, |x| > 20 Hankel asymptotic expansion.
template <typename Scalar>
Scalar bessel_jn(int n, Scalar x) {
  const Scalar ax = std::abs(x);
  Scalar value;
  if (ax < Scalar(4))
    value = detail::bessel_jn_series(n, ax);
  else if (ax <= Scalar(20))
    value = detail::bessel_jn_trapezoid(n, ax);
  else
    value = detail::bessel_jn_asymptotic(n, ax);
  return (x < Scalar(0) && (n % 2 == 1)) ? -value : value;
}

template <typename Scalar>
Scalar bessel_j0(Scalar x) {
  return bessel_jn(0, x);
}

template <typename Scalar>
Scalar bessel_j1(Scalar x) {
  return bessel_jn(1, x);
}

template <typename Scalar>
Scalar bessel_j2(Scalar x) {
  return bessel_jn(2, x);
}

// Normalized transform of a homogeneous disk, 2 J1(x) / x.
template <typename Scalar>
Scalar disk_shape(Scalar x) {
  if (std::abs(x) < Scalar(1e-3)) {
    const Scalar x2 = x * x;
    return Scalar(1) - x2 / Scalar(8) + x2 * x2 / Scalar(192);
  }
  return Scalar(2) * bessel_j1(x) / x;
}

// d/dx disk_shape(x) = -2 J2(x) / x.
template <typename Scalar>
Scalar disk_shape_derivative(Scalar x) {
  if (std::abs(x) < Scalar(1e-3)) {
    const Scalar x2 = x * x;
    return x * (Scalar(-1) / Scalar(4) + x2 / Scalar(48));
  }
  return Scalar(-2) * bessel_j2(x) / x;
}

}  // namespace cslbounds
