#pragma once

#include <array>

#include <Eigen/Dense>

#include "barlift/manifold.hpp"
#include "barlift/params.hpp"

namespace barlift {

// Cables and quadrotors are indexed 0 and 1 in code; formulas in the
// dynamics use the attachment sign (-1 for the first, +1 for the second),
// i.e. attachment points sit at x_r + end_sign(j) * L_r * q_r.
inline double end_sign(int j) { return j == 0 ? -1.0 : 1.0; }

// State of the inelastic (reduced) model: rod pose/twist plus cable
// attitudes. Quadrotor attitudes are optional passengers used only when a
// runner co-simulates the attitude loop; the reduced dynamics never read
// them.
struct ReducedState {
  Vec3 x_r = Vec3::Zero();
  Vec3 v_r = Vec3::Zero();
  Vec3 q_r = Vec3::UnitX();
  Vec3 w_r = Vec3::Zero();
  std::array<Vec3, 2> q_c = {-Vec3::UnitZ(), -Vec3::UnitZ()};
  std::array<Vec3, 2> w_c = {Vec3::Zero(), Vec3::Zero()};

  bool has_quad_attitudes = false;
  std::array<Mat3, 2> R = {Mat3::Identity(), Mat3::Identity()};
  std::array<Vec3, 2> Om = {Vec3::Zero(), Vec3::Zero()};

  static constexpr int kDim = 24;  // packed core, attitudes excluded

  Eigen::VectorXd pack() const;
  static ReducedState unpack(const Eigen::VectorXd& v);

  // Checks unit norms and tangency of the core fields (and rotation
  // invariants when attitudes are present).
  void validate() const;
};

// State of the full elastic model: the reduced fields plus cable lengths,
// stretch rates, and quadrotor attitudes/body rates.
struct FullState {
  Vec3 x_r = Vec3::Zero();
  Vec3 v_r = Vec3::Zero();
  Vec3 q_r = Vec3::UnitX();
  Vec3 w_r = Vec3::Zero();
  std::array<Vec3, 2> q_c = {-Vec3::UnitZ(), -Vec3::UnitZ()};
  std::array<Vec3, 2> w_c = {Vec3::Zero(), Vec3::Zero()};
  std::array<double, 2> l = {1.0, 1.0};
  std::array<double, 2> ldot = {0.0, 0.0};
  std::array<Mat3, 2> R = {Mat3::Identity(), Mat3::Identity()};
  std::array<Vec3, 2> Om = {Vec3::Zero(), Vec3::Zero()};

  static constexpr int kDim = 52;

  // Derived accessors.
  Vec3 zeta(int j) const { return l[j] * q_c[j]; }
  Vec3 x_Q(int j, const Params& p) const {
    return x_r + end_sign(j) * p.L_r * q_r - l[j] * q_c[j];
  }
  // Fast-scale coordinates of the cable stretch.
  double y(int j, const Params& p) const {
    return (l[j] - p.L_c) / (p.epsilon * p.epsilon);
  }
  double z(int j, const Params& p) const { return ldot[j] / p.epsilon; }

  Eigen::VectorXd pack() const;  // rotation columns stacked in order
  static FullState unpack(const Eigen::VectorXd& v);

  ReducedState reduced_part() const;

  void validate() const;
};

// Instantaneous disturbance forcing of the reduced model, with the bounds
// it is promised to respect.
struct Disturbance {
  Vec3 dx_r = Vec3::Zero();                          // N
  Vec3 dq_r = Vec3::Zero();                          // N m
  std::array<Vec3, 2> dq_c = {Vec3::Zero(), Vec3::Zero()};  // N
  double delta_x_r = 0.0;
  double delta_q_r = 0.0;
  double delta_q_c = 0.0;

  // True when every channel is inside its bound.
  bool within_bounds(double tol = 1e-12) const;
};

// Drift repair after integration steps: unit vectors rescaled, angular
// velocities re-projected, rotations returned to the orthogonal manifold.
void renormalize(ReducedState& s);
void renormalize(FullState& s);

}  // namespace barlift
