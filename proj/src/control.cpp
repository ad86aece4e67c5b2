#include "barlift/control.hpp"

#include <cmath>
#include <sstream>

#include "barlift/model.hpp"

namespace barlift {

void GainSet::validate() const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0)) {
      throw ValidationError(key, "must be strictly positive");
    }
  };
  positive(k_x, "gains.k_x");
  positive(k_v, "gains.k_v");
  positive(k_qr, "gains.k_qr");
  positive(k_wr, "gains.k_wr");
  positive(k_q1, "gains.k_q1");
  positive(k_w1, "gains.k_w1");
  positive(k_q2, "gains.k_q2");
  positive(k_w2, "gains.k_w2");
  positive(k_R, "gains.k_R");
  positive(k_Om, "gains.k_Om");
  positive(c_x, "gains.c_x");
  positive(c_qr, "gains.c_qr");
  positive(c_q1, "gains.c_q1");
  positive(c_q2, "gains.c_q2");
  if (c_x >= std::sqrt(k_x)) {
    throw ValidationError("gains.c_x", "must be below sqrt(k_x)");
  }
  if (c_qr >= std::sqrt(k_qr)) {
    throw ValidationError("gains.c_qr", "must be below sqrt(k_qr)");
  }
  if (c_q1 >= std::sqrt(k_q1)) {
    throw ValidationError("gains.c_q1", "must be below sqrt(k_q1)");
  }
  if (c_q2 >= std::sqrt(k_q2)) {
    throw ValidationError("gains.c_q2", "must be below sqrt(k_q2)");
  }
}

std::array<Vec3, 2> mu_tilde(const ReducedState& s, const TrajSample& d,
                             const GainSet& g, const Params& p) {
  const Vec3 e3 = Vec3::UnitZ();
  const Vec3 e_x = s.x_r - d.x;
  const Vec3 e_v = s.v_r - d.v;
  const Vec3 e_qr = attitude_error(d.q_r, s.q_r);
  const Vec3 e_wr = angvel_error(s.q_r, s.w_r, d.q_r, d.w_r);
  const Mat3 hq = hat(s.q_r);
  const double qw = s.q_r.dot(d.w_r);

  const Vec3 sum = p.m_r * (d.a + p.g * e3 - g.k_v * e_v - g.k_x * e_x);
  const Vec3 diff =
      p.I_r() * (-hq * d.wdot_r + qw * (hq * (hq * d.w_r)) - qw * e_wr +
                 g.k_wr * (hq * e_wr) + g.k_qr * (hq * e_qr));
  return {0.5 * (sum - diff), 0.5 * (sum + diff)};
}

Vec3 desired_cable_attitude(const Vec3& mu_t) {
  const double n = mu_t.norm();
  if (n <= 1e-8) {
    std::ostringstream msg;
    msg << "virtual control vanished, |mu| = " << n;
    throw DegenerateThrust(msg.str());
  }
  return -mu_t / n;
}

Vec3 mu_project(const Vec3& mu_t, const Vec3& q) {
  return q.dot(mu_t) * q;
}

namespace {

// The desired cable attitudes have no analytic time derivatives: they are
// unit vectors along the virtual controls, which depend on the tracking
// errors, and the errors evolve under the loop being closed. To
// differentiate them we flow the reduced closed loop itself a few steps
// forward and backward from the current state and apply central differences
// to the desired directions seen along that flow. Generating the stencil
// states needs the applied thrusts, which would recurse into this same
// computation, so the flow runs the controller with the cable-rate
// feedforward switched off. That substitution perturbs the stencil states
// only at third order in the node offset, which the symmetric differences
// cancel.
ReducedControl control_impl(double t, const ReducedState& s,
                            const Trajectory& traj, const GainSet& g,
                            const Params& p, const ControllerConfig& cc,
                            bool rate_feedforward);

Eigen::VectorXd stencil_rhs(double t, const Eigen::VectorXd& y,
                            const Trajectory& traj, const GainSet& g,
                            const Params& p, const ControllerConfig& cc) {
  ReducedState st = ReducedState::unpack(y);
  renormalize(st);  // integrator stage states drift slightly off the manifold
  const ReducedControl rc = control_impl(t, st, traj, g, p, cc, false);
  return reduced_rhs(t, st, rc.mu[0], rc.mu[1], rc.u[0], rc.u[1], nullptr, p);
}

Eigen::VectorXd stencil_step(double t, const Eigen::VectorXd& y, double h,
                             const Trajectory& traj, const GainSet& g,
                             const Params& p, const ControllerConfig& cc) {
  const Eigen::VectorXd k1 = stencil_rhs(t, y, traj, g, p, cc);
  const Eigen::VectorXd k2 =
      stencil_rhs(t + 0.5 * h, y + 0.5 * h * k1, traj, g, p, cc);
  const Eigen::VectorXd k3 =
      stencil_rhs(t + 0.5 * h, y + 0.5 * h * k2, traj, g, p, cc);
  const Eigen::VectorXd k4 = stencil_rhs(t + h, y + h * k3, traj, g, p, cc);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::array<Vec3, 2> desired_cables_at(double t, const ReducedState& s,
                                      const Trajectory& traj, const GainSet& g,
                                      const Params& p) {
  const std::array<Vec3, 2> mt = mu_tilde(s, traj(t), g, p);
  return {desired_cable_attitude(mt[0]), desired_cable_attitude(mt[1])};
}

ReducedControl control_impl(double t, const ReducedState& s,
                            const Trajectory& traj, const GainSet& g,
                            const Params& p, const ControllerConfig& cc,
                            bool rate_feedforward) {
  const Vec3 e3 = Vec3::UnitZ();
  const TrajSample d = traj(t);

  ReducedControl rc;
  rc.e_x = s.x_r - d.x;
  rc.e_v = s.v_r - d.v;
  rc.e_qr = attitude_error(d.q_r, s.q_r);
  rc.e_wr = angvel_error(s.q_r, s.w_r, d.q_r, d.w_r);
  rc.psi_r = config_error_psi(d.q_r, s.q_r);
  rc.mu_t = mu_tilde(s, d, g, p);
  rc.q_des[0] = desired_cable_attitude(rc.mu_t[0]);
  rc.q_des[1] = desired_cable_attitude(rc.mu_t[1]);

  if (rate_feedforward) {
    // Five-node stencil at t + k*h for k in {-2..2}.
    const double h = cc.fd_step;
    Eigen::VectorXd node[5];
    node[2] = s.pack();
    node[3] = stencil_step(t, node[2], h, traj, g, p, cc);
    node[4] = stencil_step(t + h, node[3], h, traj, g, p, cc);
    node[1] = stencil_step(t, node[2], -h, traj, g, p, cc);
    node[0] = stencil_step(t - h, node[1], -h, traj, g, p, cc);
    std::array<Vec3, 2> qd[5];
    qd[2] = {rc.q_des[0], rc.q_des[1]};
    for (int k = 0; k < 5; ++k) {
      if (k == 2) {
        continue;
      }
      ReducedState sk = ReducedState::unpack(node[k]);
      renormalize(sk);
      qd[k] = desired_cables_at(t + (k - 2) * h, sk, traj, g, p);
    }
    for (int j = 0; j < 2; ++j) {
      const Vec3 qdot =
          (qd[0][j] - 8.0 * qd[1][j] + 8.0 * qd[3][j] - qd[4][j]) / (12.0 * h);
      const Vec3 qddot = (-qd[0][j] + 16.0 * qd[1][j] - 30.0 * qd[2][j] +
                          16.0 * qd[3][j] - qd[4][j]) /
                         (12.0 * h * h);
      rc.w_des[j] = rc.q_des[j].cross(qdot);
      rc.wdot_des[j] = rc.q_des[j].cross(qddot);
    }
  } else {
    rc.w_des[0] = rc.w_des[1] = Vec3::Zero();
    rc.wdot_des[0] = rc.wdot_des[1] = Vec3::Zero();
  }

  for (int j = 0; j < 2; ++j) {
    rc.e_q[j] = attitude_error(rc.q_des[j], s.q_c[j]);
    rc.e_w[j] = angvel_error(s.q_c[j], s.w_c[j], rc.q_des[j], rc.w_des[j]);
    rc.psi_c[j] = config_error_psi(rc.q_des[j], s.q_c[j]);
    rc.mu[j] = mu_project(rc.mu_t[j], s.q_c[j]);
  }

  // Rod accelerations of the loop the projected virtual controls close;
  // the thrust terms below feed them forward.
  rc.a_cl = (rc.mu[0] + rc.mu[1]) / p.m_r - p.g * e3;
  rc.wdot_cl = s.q_r.cross(rc.mu[1] - rc.mu[0]) / p.I_r();
  rc.qddot_cl = rc.wdot_cl.cross(s.q_r) - s.w_r.squaredNorm() * s.q_r;

  for (int j = 0; j < 2; ++j) {
    const double sgn = end_sign(j);
    const Vec3& q = s.q_c[j];
    const Mat3 hq = hat(q);
    auto along = [&](const Vec3& v) { return v.dot(q) * q; };

    rc.u_par[j] = rc.mu[j] +
                  p.m_Q * (along(rc.a_cl) + along(p.g * e3) +
                           p.L_c * s.w_c[j].squaredNorm() * q +
                           sgn * p.L_r * along(rc.qddot_cl));

    const Vec3 B = rc.a_cl + sgn * p.L_r * rc.qddot_cl + p.g * e3 +
                   p.L_c * (hq * rc.wdot_des[j]) -
                   p.L_c * q.dot(rc.w_des[j]) * s.w_c[j];
    rc.u_perp[j] = -p.m_Q * (hq * (hq * B)) -
                   p.m_Q * p.L_c *
                       (hq * (g.k_q(j) * rc.e_q[j] + g.k_w(j) * rc.e_w[j]));
    rc.u[j] = rc.u_par[j] + rc.u_perp[j];
  }
  return rc;
}

}  // namespace

ReducedControl reduced_control(double t, const ReducedState& s,
                               const Trajectory& traj, const GainSet& g,
                               const Params& p, const ControllerConfig& cc) {
  return control_impl(t, s, traj, g, p, cc, true);
}

double lyapunov_value(const ReducedControl& rc, const GainSet& g) {
  double V = 0.5 * rc.e_v.squaredNorm() + 0.5 * g.k_x * rc.e_x.squaredNorm() +
             g.c_x * rc.e_x.dot(rc.e_v);
  V += 0.5 * rc.e_wr.squaredNorm() + g.k_qr * rc.psi_r +
       g.c_qr * rc.e_qr.dot(rc.e_wr);
  for (int j = 0; j < 2; ++j) {
    V += 0.5 * rc.e_w[j].squaredNorm() + g.k_q(j) * rc.psi_c[j] +
         g.c_q(j) * rc.e_q[j].dot(rc.e_w[j]);
  }
  return V;
}

Mat3 desired_attitude_frame(const Vec3& u, const Vec3& b1, bool flip) {
  const double un = u.norm();
  if (un <= 1e-8) {
    std::ostringstream msg;
    msg << "thrust vector vanished, |u| = " << un;
    throw DegenerateThrust(msg.str());
  }
  const Vec3 b3 = u / un;
  const Vec3 cross = b3.cross(b1);
  const double n = cross.norm();
  if (n <= 1e-8) {
    std::ostringstream msg;
    msg << "heading reference is parallel to the thrust axis, "
        << "|b3 x b1| = " << n;
    throw GimbalDegeneracy(msg.str());
  }
  // First column: the component of b1 across b3, oriented so the frame has
  // determinant +1 under either sign convention for the third axis.
  const Vec3 c1 = -hat(b3) * cross / n;  // -hat(b3)^2 b1 / |hat(b3) b1|
  Mat3 R;
  if (flip) {
    R.col(0) = c1;
    R.col(1) = cross / n;
    R.col(2) = b3;
  } else {
    R.col(0) = c1;
    R.col(1) = -cross / n;
    R.col(2) = -b3;
  }
  return R;
}

AttitudeCmd attitude_command(double t0, const ReducedState& s,
                             const Trajectory& traj, const GainSet& g,
                             const Params& p, const ControllerConfig& cc) {
  // Flow the reduced closed loop to the stencil nodes and build the desired
  // frame from the thrust vector at each node.
  const double h = cc.fd_step;
  auto closed_loop = [&](double t, const Eigen::VectorXd& v) {
    ReducedState st = ReducedState::unpack(v);
    renormalize(st);  // integrator stage states drift slightly off the manifold
    const ReducedControl rc = reduced_control(t, st, traj, g, p, cc);
    return reduced_rhs(t, st, rc.mu[0], rc.mu[1], rc.u[0], rc.u[1], nullptr,
                       p);
  };
  auto rk4 = [&](double t, const Eigen::VectorXd& v, double step) {
    const Eigen::VectorXd k1 = closed_loop(t, v);
    const Eigen::VectorXd k2 = closed_loop(t + 0.5 * step, v + 0.5 * step * k1);
    const Eigen::VectorXd k3 = closed_loop(t + 0.5 * step, v + 0.5 * step * k2);
    const Eigen::VectorXd k4 = closed_loop(t + step, v + step * k3);
    return (v + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).eval();
  };

  Eigen::VectorXd node[5];
  node[2] = s.pack();
  node[3] = rk4(t0, node[2], h);
  node[4] = rk4(t0 + h, node[3], h);
  node[1] = rk4(t0, node[2], -h);
  node[0] = rk4(t0 - h, node[1], -h);

  std::array<Mat3, 2> Rn[5];
  for (int k = 0; k < 5; ++k) {
    const double tk = t0 + (k - 2) * h;
    ReducedState sk = ReducedState::unpack(node[k]);
    renormalize(sk);
    const ReducedControl rck = reduced_control(tk, sk, traj, g, p, cc);
    const Vec3 b1 = traj(tk).b1;
    for (int j = 0; j < 2; ++j) {
      Rn[k][j] = desired_attitude_frame(rck.u[j], b1, cc.flip_thrust_sign);
    }
  }

  AttitudeCmd cmd;
  cmd.t0 = t0;
  for (int j = 0; j < 2; ++j) {
    auto omega_at = [&](int k) {
      // Body angular velocity from the frame's central difference,
      // projected to skew before extraction.
      const Mat3 D = (Rn[k + 1][j] - Rn[k - 1][j]) / (2.0 * h);
      const Mat3 W = Rn[k][j].transpose() * D;
      return vee(0.5 * (W - W.transpose()));
    };
    cmd.R_d[j] = Rn[2][j];
    cmd.W_d[j] = omega_at(2);
    cmd.Wdot_d[j] = (omega_at(3) - omega_at(1)) / (2.0 * h);
  }
  return cmd;
}

void extrapolate_command(const AttitudeCmd& cmd, double t, int j, Mat3* R_d,
                         Vec3* W_d) {
  const double dt = t - cmd.t0;
  *R_d = cmd.R_d[j] *
         expm_so3(dt * cmd.W_d[j] + 0.5 * dt * dt * cmd.Wdot_d[j]);
  *W_d = cmd.W_d[j] + dt * cmd.Wdot_d[j];
}

AttitudeControl attitude_control(const Mat3& R, const Vec3& Om,
                                 const Mat3& R_d, const Vec3& W_d,
                                 const Vec3& Wdot_d, const Vec3& u,
                                 const GainSet& g, const Params& p) {
  const RotationErrors e = rotation_errors(R_d, W_d, R, Om);
  const Mat3 Rtd = R.transpose() * R_d;
  AttitudeControl out;
  out.f = u.dot(R.col(2));
  out.M = -(g.k_R / (p.epsilon * p.epsilon)) * e.e_R -
          (g.k_Om / p.epsilon) * e.e_Omega + Om.cross(p.J_Q * Om) -
          p.J_Q * (hat(Om) * (Rtd * W_d) - Rtd * Wdot_d);
  return out;
}

}  // namespace barlift
