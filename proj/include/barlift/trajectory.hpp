#pragma once

#include <functional>

#include "barlift/manifold.hpp"

namespace barlift {

// Desired rod motion at one time instant, with the analytic derivatives the
// controller consumes. b1 is the heading reference handed to the quadrotor
// attitude construction.
struct TrajSample {
  Vec3 x = Vec3::Zero();       // desired rod position
  Vec3 v = Vec3::Zero();       // and its first
  Vec3 a = Vec3::Zero();       // and second derivative
  Vec3 q_r = Vec3::UnitY();    // desired rod attitude
  Vec3 w_r = Vec3::Zero();     // desired rod angular velocity (tangent at q_r)
  Vec3 wdot_r = Vec3::Zero();  // its derivative
  Vec3 b1 = Vec3::UnitX();     // desired first body axis for the quadrotors
};

using Trajectory = std::function<TrajSample(double)>;

// The benchmark figure-eight sweep: x(t) = (1.2 sin(0.4 pi t),
// 4.2 cos(0.2 pi t), -0.5) with a constant rod attitude (0, 1, 0).
Trajectory lissajous_trajectory();

// Constant setpoint at x0 with rod attitude qr0 (must be unit).
Trajectory hover_trajectory(const Vec3& x0, const Vec3& qr0);

}  // namespace barlift
