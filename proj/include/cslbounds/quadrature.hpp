#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace cslbounds {

struct QuadratureSpec {
  double relTol = 1e-6;
  double absTol = 0.0;
  std::int64_t maxEvals = 50'000'000;
  // The k-space domain is truncated at |k| = cutoffFactor / rC.
  double cutoffFactor = 8.0;

  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::int64_t evaluations = 0;
  bool converged = true;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, QuadratureResult best)
      : std::runtime_error(what), best_(best) {}
  const QuadratureResult& best() const noexcept { return best_; }

 private:
  QuadratureResult best_;
};

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Shared evaluation counter for nested integrations.
struct EvalBudget {
  std::int64_t maxEvals = std::numeric_limits<std::int64_t>::max();
  std::int64_t used = 0;
  bool failed = false;

  bool exhausted() const noexcept { return used >= maxEvals; }
};

struct Integrate1dOptions {
  int initialPanels = 1;
  double relTol = 1e-6;
  double absTol = 0.0;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208067172775, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7, 9.
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
  double a = 0.0;
  double b = 0.0;
  double value = 0.0;
  double error = 0.0;
};

template <typename F>
Panel gauss_kronrod_21(F& f, double a, double b) {
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  constexpr double kTiny = std::numeric_limits<double>::min();
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  std::array<double, 21> fv{};
  fv[20] = f(center);
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    fv[2 * j] = f(center - dx);
    fv[2 * j + 1] = f(center + dx);
  }

  double resk = kKronrodWeights[10] * fv[20];
  double resg = 0.0;
  double resabs = std::abs(resk);
  for (int j = 0; j < 10; ++j) {
    const double pair = fv[2 * j] + fv[2 * j + 1];
    resk += kKronrodWeights[j] * pair;
    resabs += kKronrodWeights[j] * (std::abs(fv[2 * j]) + std::abs(fv[2 * j + 1]));
    if (j % 2 == 1) resg += kGaussWeights[j / 2] * pair;
  }
  const double mean = 0.5 * resk;
  double resasc = kKronrodWeights[10] * std::abs(fv[20] - mean);
  for (int j = 0; j < 10; ++j)
    resasc += kKronrodWeights[j] * (std::abs(fv[2 * j] - mean) + std::abs(fv[2 * j + 1] - mean));

  Panel p{a, b, resk * half, std::abs((resk - resg) * half)};
  resasc *= std::abs(half);
  resabs *= std::abs(half);
  if (resasc != 0.0 && p.error != 0.0)
    p.error = resasc * std::min(1.0, std::pow(200.0 * p.error / resasc, 1.5));
  if (resabs > kTiny / (50.0 * kEps)) p.error = std::max(50.0 * kEps * resabs, p.error);
  return p;
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration of f over [a, b]. The interval
// is first cut into `initialPanels` equal panels; the panel with the largest
// error is bisected until the total error meets max(absTol, relTol |I|) or
// the shared budget runs out. Non-convergence is reported through the result
// flag and budget.failed, never thrown.
template <typename F>
QuadratureResult integrate_1d(F&& f, double a, double b, const Integrate1dOptions& opt,
                              EvalBudget& budget) {
  QuadratureResult out;
  if (a == b) return out;

  std::int64_t evals = 0;
  auto counted = [&](double x) {
    ++evals;
    return f(x);
  };

  const int n0 = std::max(1, opt.initialPanels);
  std::vector<detail::Panel> panels;
  panels.reserve(static_cast<std::size_t>(n0) * 2);
  const double width = (b - a) / n0;
  for (int i = 0; i < n0; ++i) {
    const double lo = a + width * i;
    const double hi = (i + 1 == n0) ? b : a + width * (i + 1);
    panels.push_back(detail::gauss_kronrod_21(counted, lo, hi));
  }

  auto cmp = [&](std::size_t l, std::size_t r) {
    if (panels[l].error != panels[r].error) return panels[l].error < panels[r].error;
    return l > r;
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> heap(cmp);
  double total = 0.0;
  double totalErr = 0.0;
  for (std::size_t i = 0; i < panels.size(); ++i) {
    heap.push(i);
    total += panels[i].value;
    totalErr += panels[i].error;
  }

  bool converged = true;
  while (totalErr > std::max(opt.absTol, opt.relTol * std::abs(total))) {
    if (budget.used + evals >= budget.maxEvals) {
      converged = false;
      break;
    }
    const std::size_t worst = heap.top();
    const detail::Panel w = panels[worst];
    const double mid = 0.5 * (w.a + w.b);
    if (!(mid > w.a && mid < w.b)) {
      // Interval below floating-point resolution; nothing left to refine.
      converged = false;
      break;
    }
    heap.pop();
    const detail::Panel left = detail::gauss_kronrod_21(counted, w.a, mid);
    const detail::Panel right = detail::gauss_kronrod_21(counted, mid, w.b);
    total += left.value + right.value - w.value;
    totalErr += left.error + right.error - w.error;
    panels[worst] = left;
    panels.push_back(right);
    heap.push(worst);
    heap.push(panels.size() - 1);
  }

  // Sum in position order so the result does not depend on refinement order.
  std::sort(panels.begin(), panels.end(),
            [](const detail::Panel& l, const detail::Panel& r) { return l.a < r.a; });
  CompensatedSum sum;
  CompensatedSum err;
  for (const auto& p : panels) {
    sum.add(p.value);
    err.add(p.error);
  }
  out.value = sum.value();
  out.error = err.value();
  out.evaluations = evals;
  out.converged = converged;
  budget.used += evals;
  if (!converged) budget.failed = true;
  return out;
}

// Integrand over wavevector space, with optional structure declarations the
// integrator exploits.
struct KIntegrand {
  std::function<double(const Eigen::Vector3d&)> f;
  // Polar axis of the spherical coordinates.
  Eigen::Vector3d polarAxis = Eigen::Vector3d::UnitZ();
  // f does not depend on the azimuth about polarAxis: reduce to (r, theta).
  bool azimuthallySymmetric = false;
  // f(-k) = f(k): integrate the upper hemisphere only.
  bool inversionSymmetric = false;
  // Largest real-space length the integrand resolves (m). Sets the panel
  // width so that each initial panel covers at most half an oscillation.
  double lengthScale = 0.0;
};

// Integral of f over R^3, truncated at |k| <= cutoffFactor / rC, by nested
// adaptive Gauss-Kronrod in spherical coordinates. Throws NonConvergence with
// the best estimate when the evaluation budget runs out.
QuadratureResult integrate_k3(const KIntegrand& integrand, double rC, const QuadratureSpec& spec);

// Adaptive 1D integral of g(k) over [0, cutoffFactor / rC] in the scaled
// variable u = k rC, with initial panels sized from lengthScale. Throws
// NonConvergence on budget exhaustion.
QuadratureResult integrate_k1_half_line(const std::function<double(double)>& g, double rC,
                                        double lengthScale, double relTol,
                                        const QuadratureSpec& spec);

}  // namespace cslbounds
