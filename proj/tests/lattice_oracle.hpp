#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "cslbounds/geometry.hpp"

namespace cslbounds::testing {

// Discretizes a homogeneous sphere, cuboid or cylinder (axis along z) into
// n^3 cells. Each cell that overlaps the body becomes one point carrying the
// inside volume at the inside centroid, both estimated by sub^3 sub-samples.
inline std::vector<PointMass> lattice_points(const Body& body, int n, int sub = 8) {
  Eigen::Vector3d half;
  std::function<bool(const Eigen::Vector3d&)> inside;
  if (const auto* s = std::get_if<Sphere>(&body)) {
    const double R = s->radius;
    half.setConstant(R);
    inside = [R](const Eigen::Vector3d& x) { return x.squaredNorm() <= R * R; };
  } else if (const auto* c = std::get_if<Cuboid>(&body)) {
    half << c->lx / 2, c->ly / 2, c->lz / 2;
    inside = [](const Eigen::Vector3d&) { return true; };
  } else if (const auto* cy = std::get_if<Cylinder>(&body)) {
    if (!cy->axis.normalized().isApprox(Eigen::Vector3d::UnitZ()))
      throw std::invalid_argument("lattice_points: cylinder axis must be z");
    const double R = cy->radius;
    half << R, R, cy->length / 2;
    inside = [R](const Eigen::Vector3d& x) { return x.x() * x.x() + x.y() * x.y() <= R * R; };
  } else {
    throw std::invalid_argument("lattice_points: unsupported body");
  }

  const Eigen::Vector3d h = 2.0 * half / n;
  std::vector<PointMass> pts;
  double count = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Eigen::Vector3d lo = -half + Eigen::Vector3d(i * h.x(), j * h.y(), k * h.z());
        int hits = 0;
        Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
        for (int a = 0; a < sub; ++a)
          for (int b = 0; b < sub; ++b)
            for (int c = 0; c < sub; ++c) {
              const Eigen::Vector3d x =
                  lo + Eigen::Vector3d((a + 0.5) * h.x() / sub, (b + 0.5) * h.y() / sub, (c + 0.5) * h.z() / sub);
              if (inside(x)) {
                ++hits;
                centroid += x;
              }
            }
        if (hits) {
          pts.push_back({centroid / hits, static_cast<double>(hits)});
          count += hits;
        }
      }
  const double mass = total_mass(body);
  for (auto& p : pts) p.mass *= mass / count;
  return pts;
}

}  // namespace cslbounds::testing
