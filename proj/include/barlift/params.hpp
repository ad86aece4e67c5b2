#pragma once

#include <Eigen/Dense>

#include "barlift/errors.hpp"
#include "barlift/manifold.hpp"

namespace barlift {

// Physical constants of the two-quadrotor / elastic-cable / rigid-bar system.
// Defaults are the benchmark configuration used throughout the test suite.
struct Params {
  double m_Q = 0.755;  // quadrotor mass, kg
  double m_r = 0.5;    // rod mass, kg
  double L_r = 1.0;    // rod half-length, m (attachment points at +-L_r)
  double L_c = 1.0;    // cable rest length, m
  Mat3 J_Q = (Eigen::Vector3d(0.082, 0.0845, 0.1377)).asDiagonal();
  double g = 9.81;       // m/s^2
  double k_bar = 50.0;   // scaled cable stiffness, N/m; physical k = k_bar/eps^2
  double c_bar = 5.0;    // scaled cable damping, N s/m; physical c = c_bar/eps
  double epsilon = 0.04;

  // Derived quantities, recomputed on demand so they can never go stale.
  double m_eff() const { return 2.0 * m_Q + m_r; }
  double I_eff() const { return (2.0 * m_Q + (2.0 / 3.0) * m_r) * L_r; }
  double I_r() const { return (2.0 / 3.0) * m_r * L_r; }
  double k() const { return k_bar / (epsilon * epsilon); }
  double c() const { return c_bar / epsilon; }

  // Rod inertia tensor in a body frame with the first axis along the rod,
  // consistent with the rotational equation of motion (which folds it into
  // I_eff). Diagnostic only; the dynamics never read it.
  Mat3 rod_inertia() const {
    const double i = I_r() * L_r;
    return Eigen::Vector3d(0.0, i, i).asDiagonal();
  }

  // Throws ValidationError naming the offending field. c_bar may be zero
  // (undamped cables are a legitimate configuration for conservation tests).
  void validate() const;
};

}  // namespace barlift
