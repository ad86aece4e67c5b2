#pragma once

// Deterministic random sampling shared by the test suites. The uniform
// stream is built from the raw mt19937_64 output so it is identical on
// every platform, which keeps failure reports reproducible.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace testutil {

inline double unit_uniform(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform in [lo, hi).
inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(g);
}

inline Eigen::Vector3d random_vec(std::mt19937_64& g, double scale) {
  return Eigen::Vector3d(uniform(g, -scale, scale), uniform(g, -scale, scale),
                         uniform(g, -scale, scale));
}

// Uniform on the unit sphere.
inline Eigen::Vector3d random_direction(std::mt19937_64& g) {
  const double z = 2.0 * unit_uniform(g) - 1.0;
  const double th = 2.0 * std::numbers::pi * unit_uniform(g);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return Eigen::Vector3d(r * std::cos(th), r * std::sin(th), z);
}

// Tangent vector at q with entries of roughly the given scale.
inline Eigen::Vector3d random_tangent(std::mt19937_64& g,
                                      const Eigen::Vector3d& q, double scale) {
  const Eigen::Vector3d v = random_vec(g, scale);
  return v - (v.dot(q)) * q;
}

// Random rotation matrix, uniform enough for property tests.
inline Eigen::Matrix3d random_rotation(std::mt19937_64& g) {
  const Eigen::Vector3d axis = random_direction(g);
  const double angle = uniform(g, -std::numbers::pi, std::numbers::pi);
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

}  // namespace testutil
