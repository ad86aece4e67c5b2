#pragma once

#include <array>

#include "barlift/state.hpp"
#include "barlift/trajectory.hpp"

namespace barlift {

// Controller gains and the Lyapunov cross-coupling constants used by the
// certification machinery. Defaults are the benchmark gain set.
struct GainSet {
  double k_x = 9.0;
  double k_v = 6.0;
  double k_qr = 2.0;
  double k_wr = 2.0 * 1.4142135623730951;  // 2 sqrt(2)
  double k_q1 = 36.0;
  double k_w1 = 12.0;
  double k_q2 = 36.0;
  double k_w2 = 12.0;
  double k_R = 8.81;   // quadrotor attitude, applied as k_R / eps^2
  double k_Om = 2.54;  // quadrotor rate, applied as k_Om / eps
  double c_x = 1.0;
  double c_qr = 0.2;
  double c_q1 = 1.5;
  double c_q2 = 1.5;

  double k_q(int j) const { return j == 0 ? k_q1 : k_q2; }
  double k_w(int j) const { return j == 0 ? k_w1 : k_w2; }
  double c_q(int j) const { return j == 0 ? c_q1 : c_q2; }

  // Positivity plus the c < sqrt(k) conditions that keep the Lyapunov
  // bounding matrices positive-definite. Throws ValidationError.
  void validate() const;
};

struct ControllerConfig {
  double fd_step = 1e-3;         // step for the desired-signal differences, s
  bool flip_thrust_sign = false; // see desired_attitude_frame
};

// Everything the tracking controller computes at one instant. Runners log
// from it and the test suite checks identities on it.
struct ReducedControl {
  Vec3 e_x = Vec3::Zero();
  Vec3 e_v = Vec3::Zero();
  Vec3 e_qr = Vec3::Zero();
  Vec3 e_wr = Vec3::Zero();
  double psi_r = 0.0;
  std::array<double, 2> psi_c = {0.0, 0.0};

  std::array<Vec3, 2> mu_t;      // virtual controls before projection
  std::array<Vec3, 2> q_des;     // desired cable attitudes
  std::array<Vec3, 2> w_des;     // their angular velocities
  std::array<Vec3, 2> wdot_des;  // and accelerations
  std::array<Vec3, 2> e_q;
  std::array<Vec3, 2> e_w;
  std::array<Vec3, 2> mu;        // q-projected virtual controls
  std::array<Vec3, 2> u_par;
  std::array<Vec3, 2> u_perp;
  std::array<Vec3, 2> u;

  // Sequenced closed-loop rod accelerations the thrust terms were built
  // from (see thrust_components).
  Vec3 a_cl = Vec3::Zero();
  Vec3 wdot_cl = Vec3::Zero();
  Vec3 qddot_cl = Vec3::Zero();
};

// Virtual controls: the half-sum implements PD position tracking with
// gravity and feedforward, the half-difference PD rod-attitude tracking.
std::array<Vec3, 2> mu_tilde(const ReducedState& s, const TrajSample& d,
                             const GainSet& g, const Params& p);

// Desired cable attitude -mu/|mu|. Throws DegenerateThrust when the virtual
// control vanishes (below 1e-8).
Vec3 desired_cable_attitude(const Vec3& mu_t);

// Projection of the virtual control onto the actual cable direction.
Vec3 mu_project(const Vec3& mu_t, const Vec3& q);

// Full tracking controller evaluation: errors, virtual controls, desired
// cable attitudes with their rates (by central differences over the
// closed-loop desired signals), and the thrust decomposition.
ReducedControl reduced_control(double t, const ReducedState& s,
                               const Trajectory& traj, const GainSet& g,
                               const Params& p, const ControllerConfig& cc);

// Lyapunov candidate evaluated on the errors of a controller evaluation.
double lyapunov_value(const ReducedControl& rc, const GainSet& g);

// Desired quadrotor attitude for thrust vector u and heading reference b1.
// The third desired axis is -u/|u| by default (thrust opposes the cable
// pull), +u/|u| when flipped; the first column is chosen so the matrix is a
// proper rotation (determinant +1). Throws DegenerateThrust for vanishing
// u and GimbalDegeneracy when b1 is (anti)parallel to u.
Mat3 desired_attitude_frame(const Vec3& u, const Vec3& b1, bool flip);

// Desired attitude, angular velocity and angular acceleration for both
// quadrotors at time t0, obtained by differencing the desired frame along
// the reduced closed-loop flow.
struct AttitudeCmd {
  double t0 = 0.0;
  std::array<Mat3, 2> R_d = {Mat3::Identity(), Mat3::Identity()};
  std::array<Vec3, 2> W_d = {Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, 2> Wdot_d = {Vec3::Zero(), Vec3::Zero()};
};

AttitudeCmd attitude_command(double t0, const ReducedState& s,
                             const Trajectory& traj, const GainSet& g,
                             const Params& p, const ControllerConfig& cc);

// Propagates a command to t0 + dt without re-differencing: the frame is
// advanced by the exponential of the held angular velocity and
// acceleration, so the hold error is second order in dt.
void extrapolate_command(const AttitudeCmd& cmd, double t, int j, Mat3* R_d,
                         Vec3* W_d);

// Thrust magnitude and body moment of the quadrotor attitude loop.
struct AttitudeControl {
  double f = 0.0;
  Vec3 M = Vec3::Zero();
};

AttitudeControl attitude_control(const Mat3& R, const Vec3& Om,
                                 const Mat3& R_d, const Vec3& W_d,
                                 const Vec3& Wdot_d, const Vec3& u,
                                 const GainSet& g, const Params& p);

}  // namespace barlift
