#pragma once

// Direct evaluation of the coupled equations of motion. Given a state, the
// applied controls, and a candidate set of accelerations, each equation is
// reassembled term by term, with the cable accelerations expanded through
// zeta_j = l_j q_j and the attitude second derivatives built from plain
// cross products:
//
//   qddot   = wdot x q + w x (w x q)
//   zetaddot = lddot q + 2 ldot qdot + l qddot
//
// Nothing here reuses the solver's matrix assembly, so a small residual is
// independent evidence that the solved accelerations satisfy the dynamics.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "barlift/model.hpp"
#include "barlift/state.hpp"
#include "sampling.hpp"

namespace testutil {

struct DynamicsResiduals {
  barlift::Vec3 translation;
  barlift::Vec3 rod_rotation;
  std::array<double, 2> stretch;
  std::array<barlift::Vec3, 2> cable_swing;
  std::array<barlift::Vec3, 2> quad_rotation;

  double max_abs() const {
    double m = std::max(translation.cwiseAbs().maxCoeff(),
                        rod_rotation.cwiseAbs().maxCoeff());
    for (int j = 0; j < 2; ++j) {
      m = std::max({m, std::abs(stretch[j]),
                    cable_swing[j].cwiseAbs().maxCoeff(),
                    quad_rotation[j].cwiseAbs().maxCoeff()});
    }
    return m;
  }
};

inline DynamicsResiduals dynamics_residuals(
    const barlift::FullState& s, const barlift::Accelerations& a,
    const barlift::Vec3& u1, const barlift::Vec3& u2, const barlift::Vec3& M1,
    const barlift::Vec3& M2, const barlift::Params& p) {
  using barlift::Vec3;
  const Vec3 e3 = Vec3::UnitZ();
  const std::array<Vec3, 2> u = {u1, u2};
  const std::array<Vec3, 2> M = {M1, M2};

  const Vec3 qdot_r = s.w_r.cross(s.q_r);
  const Vec3 qddot_r = a.wdot_r.cross(s.q_r) + s.w_r.cross(qdot_r);

  std::array<Vec3, 2> zdd;
  for (int j = 0; j < 2; ++j) {
    const Vec3 qdot = s.w_c[j].cross(s.q_c[j]);
    const Vec3 qddot = a.wdot_c[j].cross(s.q_c[j]) + s.w_c[j].cross(qdot);
    zdd[j] = a.lddot[j] * s.q_c[j] + 2.0 * s.ldot[j] * qdot + s.l[j] * qddot;
  }

  DynamicsResiduals r;
  r.translation = p.m_eff() * (a.vdot_r + p.g * e3) - u[0] - u[1] -
                  p.m_Q * (zdd[0] + zdd[1]);
  r.rod_rotation =
      p.I_eff() * a.wdot_r -
      s.q_r.cross(u[1] - u[0] + p.m_Q * (zdd[1] - zdd[0]));
  for (int j = 0; j < 2; ++j) {
    const Vec3& q = s.q_c[j];
    const Vec3 frame = a.vdot_r + barlift::end_sign(j) * p.L_r * qddot_r +
                       p.g * e3 - u[j] / p.m_Q;
    r.stretch[j] = p.m_Q * q.dot(zdd[j]) - p.m_Q * q.dot(frame) +
                   p.c() * s.ldot[j] - p.k() * (p.L_c - s.l[j]);
    r.cable_swing[j] = q.cross(zdd[j]) - q.cross(frame);
    r.quad_rotation[j] =
        p.J_Q * a.Omdot[j] - (p.J_Q * s.Om[j]).cross(s.Om[j]) - M[j];
  }
  return r;
}

// Random but physically moderate full state: attitudes anywhere on their
// manifolds, velocities of order one, cable lengths near rest so the stiff
// spring force stays within a few kN.
inline barlift::FullState random_full_state(std::mt19937_64& g) {
  barlift::FullState s;
  s.x_r = random_vec(g, 5.0);
  s.v_r = random_vec(g, 2.0);
  s.q_r = random_direction(g);
  s.w_r = random_tangent(g, s.q_r, 2.0);
  for (int j = 0; j < 2; ++j) {
    s.q_c[j] = random_direction(g);
    s.w_c[j] = random_tangent(g, s.q_c[j], 2.0);
    s.l[j] = uniform(g, 0.9, 1.1);
    s.ldot[j] = uniform(g, -0.5, 0.5);
    s.R[j] = random_rotation(g);
    s.Om[j] = random_vec(g, 3.0);
  }
  return s;
}

}  // namespace testutil
