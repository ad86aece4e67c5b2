#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include "barlift/state.hpp"

namespace barlift {

// Accelerations of the full elastic model at one instant.
struct Accelerations {
  Vec3 vdot_r = Vec3::Zero();
  Vec3 wdot_r = Vec3::Zero();
  std::array<double, 2> lddot = {0.0, 0.0};
  std::array<Vec3, 2> wdot_c = {Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, 2> Omdot = {Vec3::Zero(), Vec3::Zero()};
};

// Solves the coupled equations of motion of the elastic system for the
// accelerations, given applied thrust vectors u_j and body moments M_j.
// The translational, rod-rotational, cable-stretch and cable-attitude
// equations couple through the cable accelerations, so they are assembled
// into one 14x14 linear system over (vdot_r, wdot_r, lddot_1, lddot_2,
// wdot_1, wdot_2) and solved; the quadrotor rotational equations decouple.
// Throws CableCollapse if a cable length is at or below 1e-6 m and
// SingularMassMatrix if the assembled system is numerically singular.
Accelerations full_accelerations(const FullState& s, const Vec3& u1,
                                 const Vec3& u2, const Vec3& M1,
                                 const Vec3& M2, const Params& p);

// Thrust vectors and body moments applied to the two quadrotors.
struct FullControls {
  std::array<Vec3, 2> u = {Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, 2> M = {Vec3::Zero(), Vec3::Zero()};
};

using FullControlLaw = std::function<FullControls(double, const FullState&)>;

// Packed time derivative of FullState under the given control law.
Eigen::VectorXd full_rhs(double t, const FullState& s,
                         const FullControlLaw& ctrl, const Params& p);

// Quasi-steady cable stretch: the algebraic solution of the fast equations
// at epsilon = 0.
struct QuasiSteady {
  std::array<double, 2> y = {0.0, 0.0};
  std::array<double, 2> z = {0.0, 0.0};
};

// The slow accelerations entering the fast equations are evaluated from the
// reduced closed loop defined by (mu_1, mu_2), exactly as the reduced model
// does; u_j are the corresponding thrust vectors.
QuasiSteady quasi_steady_state(const ReducedState& s, const Vec3& mu1,
                               const Vec3& mu2, const Vec3& u1, const Vec3& u2,
                               const Params& p);

// Boundary-layer dynamics of the fast variables in stretched time, about
// the quasi-steady solution, with the slow state frozen. r packs
// (r_y1, r_z1, r_y2, r_z2). tau is unused (the frozen system is autonomous)
// but kept for interface symmetry with the other right-hand sides.
Eigen::Vector4d boundary_layer_rhs(double tau, const Eigen::Vector4d& r,
                                   const ReducedState& s, const Vec3& mu1,
                                   const Vec3& mu2, const Vec3& u1,
                                   const Vec3& u2, const Params& p);

// Packed time derivative of the inelastic (reduced) model driven by the
// virtual controls mu_j (which must be parallel to their cables, else
// NonParallelMu) and the thrusts u_j, optionally forced by a disturbance.
// The cable equations use the rod accelerations produced by the same call,
// disturbances included.
Eigen::VectorXd reduced_rhs(double t, const ReducedState& s, const Vec3& mu1,
                            const Vec3& mu2, const Vec3& u1, const Vec3& u2,
                            const Disturbance* d, const Params& p);

// Total mechanical energy of the elastic model (kinetic + gravitational +
// elastic). Conserved by the dynamics when u = M = 0 and c_bar = 0.
double total_energy(const FullState& s, const Params& p);

// Static equilibrium with the rod at x_target, horizontal attitude
// q_r_target, cables vertical and stretched by the static tension.
struct HoverFixture {
  FullState state;
  std::array<Vec3, 2> u = {Vec3::Zero(), Vec3::Zero()};
};

HoverFixture hover_equilibrium(const Params& p, const Vec3& x_target,
                               const Vec3& q_r_target);

// Deterministic bound-saturating disturbance signal: each channel is
// delta * dir * (0.5 + 0.5 sin(2 pi f t + phase)) with a fixed random unit
// direction and seeded frequency/phase. Identical seeds give identical
// signals on any platform (the generator avoids std distributions, whose
// output is implementation-defined).
class DisturbanceSignal {
 public:
  DisturbanceSignal(double delta_x_r, double delta_q_r, double delta_q_c,
                    std::uint64_t seed);

  Disturbance at(double t) const;

 private:
  struct Channel {
    Vec3 dir;
    double freq;
    double phase;
  };
  double delta_x_r_, delta_q_r_, delta_q_c_;
  std::array<Channel, 4> ch_;  // x_r, q_r, q_1, q_2
};

}  // namespace barlift
