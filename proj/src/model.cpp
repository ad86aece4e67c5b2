#include "barlift/model.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace barlift {

namespace {

// Velocity-product part of the cable acceleration: expanding
// zeta_j = l_j q_j twice in time gives
//   zeta_ddot = q lddot - l hat(q) wdot + 2 ldot (w x q) - l |w|^2 q,
// and `known` collects the last two (acceleration-free) terms.
Vec3 zeta_known(const FullState& s, int j) {
  return 2.0 * s.ldot[j] * s.w_c[j].cross(s.q_c[j]) -
         s.l[j] * s.w_c[j].squaredNorm() * s.q_c[j];
}

// Slow forcing of a cable's stretch equation: the component along q_j of
// the frame acceleration seen by the cable, plus the centripetal term.
// Dividing by k_bar gives the quasi-steady stretch.
std::array<double, 2> stretch_forcing(const ReducedState& s, const Vec3& mu1,
                                      const Vec3& mu2, const Vec3& u1,
                                      const Vec3& u2, const Params& p) {
  const Vec3 e3 = Vec3::UnitZ();
  const Vec3 vdot_r = (mu1 + mu2) / p.m_r - p.g * e3;
  const Vec3 wdot_r = s.q_r.cross(mu2 - mu1) / p.I_r();
  const Vec3 qddot_r = wdot_r.cross(s.q_r) - s.w_r.squaredNorm() * s.q_r;
  const std::array<Vec3, 2> u = {u1, u2};
  std::array<double, 2> F;
  for (int j = 0; j < 2; ++j) {
    const Vec3& q = s.q_c[j];
    F[j] = p.m_Q * q.dot(vdot_r + end_sign(j) * p.L_r * qddot_r + p.g * e3) -
           q.dot(u[j]) + p.m_Q * p.L_c * s.w_c[j].squaredNorm();
  }
  return F;
}

}  // namespace

Accelerations full_accelerations(const FullState& s, const Vec3& u1,
                                 const Vec3& u2, const Vec3& M1,
                                 const Vec3& M2, const Params& p) {
  for (int j = 0; j < 2; ++j) {
    if (s.l[j] <= 1e-6) {
      std::ostringstream msg;
      msg << "cable " << (j + 1) << " collapsed: l = " << s.l[j];
      throw CableCollapse(msg.str());
    }
  }
  s.validate();

  const Vec3 e3 = Vec3::UnitZ();
  const std::array<Vec3, 2> u = {u1, u2};
  const std::array<Vec3, 2> M = {M1, M2};
  const double k = p.k();
  const double c = p.c();
  const Mat3 hat_qr = hat(s.q_r);
  const double wr2 = s.w_r.squaredNorm();

  // Unknowns a = (vdot_r [0:3], wdot_r [3:6], lddot_1 [6], lddot_2 [7],
  // wdot_1 [8:11], wdot_2 [11:14]). Each equation is written with unknown
  // acceleration terms on the left (zeta_ddot and qddot_r expanded) and
  // velocity products / forces on the right.
  Eigen::Matrix<double, 14, 14> A = Eigen::Matrix<double, 14, 14>::Zero();
  Eigen::Matrix<double, 14, 1> b = Eigen::Matrix<double, 14, 1>::Zero();

  // Rod translation: m_eff (vdot_r + g e3) = u1 + u2 + m_Q sum_j zeta_ddot_j.
  A.block<3, 3>(0, 0) = p.m_eff() * Mat3::Identity();
  b.segment<3>(0) = u1 + u2 - p.m_eff() * p.g * e3;

  // Rod rotation: I_eff wdot_r = q_r x [u2 - u1 + m_Q (zeta_ddot_2 -
  // zeta_ddot_1)]. Every term on both sides is orthogonal to q_r, so the
  // identity diagonal also pins q_r . wdot_r = 0.
  A.block<3, 3>(3, 3) = p.I_eff() * Mat3::Identity();
  b.segment<3>(3) = hat_qr * (u2 - u1);

  for (int j = 0; j < 2; ++j) {
    const double sgn = end_sign(j);
    const Vec3& q = s.q_c[j];
    const Mat3 hat_q = hat(q);
    const Vec3 known = zeta_known(s, j);
    const int lcol = 6 + j;
    const int wcol = 8 + 3 * j;

    A.block<3, 1>(0, lcol) = -p.m_Q * q;
    A.block<3, 3>(0, wcol) = p.m_Q * s.l[j] * hat_q;
    b.segment<3>(0) += p.m_Q * known;

    A.block<3, 1>(3, lcol) = -p.m_Q * sgn * (hat_qr * q);
    A.block<3, 3>(3, wcol) = p.m_Q * sgn * s.l[j] * (hat_qr * hat_q);
    b.segment<3>(3) += p.m_Q * sgn * (hat_qr * known);

    // Stretch: m_Q q_j . zeta_ddot_j = m_Q q_j . (vdot_r + sgn L_r qddot_r
    // + g e3 - u_j / m_Q) - c ldot_j + k (L_c - l_j), where
    // q_j . zeta_ddot_j = lddot_j - l_j |w_j|^2 and
    // qddot_r = -hat(q_r) wdot_r - |w_r|^2 q_r.
    A(lcol, lcol) = p.m_Q;
    A.block<1, 3>(lcol, 0) = -p.m_Q * q.transpose();
    A.block<1, 3>(lcol, 3) = p.m_Q * sgn * p.L_r * (q.transpose() * hat_qr);
    b(lcol) = p.m_Q * s.l[j] * s.w_c[j].squaredNorm() +
              q.dot(p.m_Q * p.g * e3 - u[j]) -
              p.m_Q * sgn * p.L_r * wr2 * q.dot(s.q_r) - c * s.ldot[j] +
              k * (p.L_c - s.l[j]);

    // Cable swing: q_j x zeta_ddot_j = q_j x (vdot_r + sgn L_r qddot_r +
    // g e3 - u_j / m_Q), with q_j x zeta_ddot_j = 2 ldot_j w_j +
    // l_j (I - q q^T) wdot_j. The projector is replaced by the identity:
    // all remaining row terms are orthogonal to q_j, so the q_j-component
    // of the row just enforces q_j . wdot_j = 0.
    A.block<3, 3>(wcol, wcol) = s.l[j] * Mat3::Identity();
    A.block<3, 3>(wcol, 0) = -hat_q;
    A.block<3, 3>(wcol, 3) = sgn * p.L_r * (hat_q * hat_qr);
    b.segment<3>(wcol) = -2.0 * s.ldot[j] * s.w_c[j] +
                         hat_q * (p.g * e3 - u[j] / p.m_Q) -
                         sgn * p.L_r * wr2 * (hat_q * s.q_r);
  }

  Eigen::PartialPivLU<Eigen::Matrix<double, 14, 14>> lu(A);
  if (lu.rcond() < 1e-12) {
    std::ostringstream msg;
    msg << "coupled acceleration system is numerically singular, rcond = "
        << lu.rcond();
    throw SingularMassMatrix(msg.str());
  }
  const Eigen::Matrix<double, 14, 1> a = lu.solve(b);

  Accelerations out;
  out.vdot_r = a.segment<3>(0);
  out.wdot_r = a.segment<3>(3);
  for (int j = 0; j < 2; ++j) {
    out.lddot[j] = a(6 + j);
    out.wdot_c[j] = a.segment<3>(8 + 3 * j);
    out.Omdot[j] = p.J_Q.ldlt().solve((p.J_Q * s.Om[j]).cross(s.Om[j]) + M[j]);
  }
  return out;
}

Eigen::VectorXd full_rhs(double t, const FullState& s,
                         const FullControlLaw& ctrl, const Params& p) {
  const FullControls fc = ctrl(t, s);
  const Accelerations acc =
      full_accelerations(s, fc.u[0], fc.u[1], fc.M[0], fc.M[1], p);

  Eigen::VectorXd d(FullState::kDim);
  d.segment<3>(0) = s.v_r;
  d.segment<3>(3) = acc.vdot_r;
  d.segment<3>(6) = s.w_r.cross(s.q_r);
  d.segment<3>(9) = acc.wdot_r;
  for (int j = 0; j < 2; ++j) {
    d.segment<3>(12 + 6 * j) = s.w_c[j].cross(s.q_c[j]);
    d.segment<3>(15 + 6 * j) = acc.wdot_c[j];
    d(24 + 2 * j) = s.ldot[j];
    d(25 + 2 * j) = acc.lddot[j];
    const Mat3 Rdot = s.R[j] * hat(s.Om[j]);
    d.segment<9>(28 + 12 * j) = Eigen::Map<const Eigen::VectorXd>(Rdot.data(), 9);
    d.segment<3>(37 + 12 * j) = acc.Omdot[j];
  }
  return d;
}

QuasiSteady quasi_steady_state(const ReducedState& s, const Vec3& mu1,
                               const Vec3& mu2, const Vec3& u1, const Vec3& u2,
                               const Params& p) {
  s.validate();
  const std::array<double, 2> F = stretch_forcing(s, mu1, mu2, u1, u2, p);
  QuasiSteady qs;
  for (int j = 0; j < 2; ++j) {
    qs.y[j] = F[j] / p.k_bar;
    qs.z[j] = 0.0;
  }
  return qs;
}

Eigen::Vector4d boundary_layer_rhs(double /*tau*/, const Eigen::Vector4d& r,
                                   const ReducedState& s, const Vec3& mu1,
                                   const Vec3& mu2, const Vec3& u1,
                                   const Vec3& u2, const Params& p) {
  const std::array<double, 2> F = stretch_forcing(s, mu1, mu2, u1, u2, p);
  Eigen::Vector4d dr;
  for (int j = 0; j < 2; ++j) {
    const double y = r(2 * j) + F[j] / p.k_bar;  // absolute stretch variable
    const double z = r(2 * j + 1);
    dr(2 * j) = z;
    dr(2 * j + 1) = (F[j] - p.c_bar * z - p.k_bar * y) / p.m_Q;
  }
  return dr;
}

Eigen::VectorXd reduced_rhs(double /*t*/, const ReducedState& s,
                            const Vec3& mu1, const Vec3& mu2, const Vec3& u1,
                            const Vec3& u2, const Disturbance* d,
                            const Params& p) {
  s.validate();
  const std::array<Vec3, 2> mu = {mu1, mu2};
  for (int j = 0; j < 2; ++j) {
    const double defect = mu[j].cross(s.q_c[j]).norm();
    if (defect >= 1e-9) {
      std::ostringstream msg;
      msg << "mu_" << (j + 1) << " is not parallel to its cable, |mu x q| = "
          << defect;
      throw NonParallelMu(msg.str());
    }
  }

  const Vec3 e3 = Vec3::UnitZ();
  const Vec3 dx_r = d ? d->dx_r : Vec3::Zero();
  const Vec3 dq_r = d ? d->dq_r : Vec3::Zero();
  const std::array<Vec3, 2> dq_c = d ? d->dq_c
                                     : std::array<Vec3, 2>{Vec3::Zero(),
                                                           Vec3::Zero()};

  const Vec3 vdot_r = (mu1 + mu2 + dx_r) / p.m_r - p.g * e3;
  const Vec3 wdot_r =
      tangent_project((s.q_r.cross(mu2 - mu1) + dq_r) / p.I_r(), s.q_r);
  const Vec3 qddot_r = wdot_r.cross(s.q_r) - s.w_r.squaredNorm() * s.q_r;

  const std::array<Vec3, 2> u = {u1, u2};
  Eigen::VectorXd out(ReducedState::kDim);
  out.segment<3>(0) = s.v_r;
  out.segment<3>(3) = vdot_r;
  out.segment<3>(6) = s.w_r.cross(s.q_r);
  out.segment<3>(9) = wdot_r;
  for (int j = 0; j < 2; ++j) {
    const Vec3& q = s.q_c[j];
    const Vec3 frame = vdot_r + end_sign(j) * p.L_r * qddot_r + p.g * e3;
    const Vec3 wdot_j = tangent_project(
        (p.m_Q * q.cross(frame) - q.cross(u[j]) + dq_c[j]) / (p.m_Q * p.L_c),
        q);
    out.segment<3>(12 + 6 * j) = s.w_c[j].cross(q);
    out.segment<3>(15 + 6 * j) = wdot_j;
  }
  return out;
}

double total_energy(const FullState& s, const Params& p) {
  s.validate();
  const Vec3 e3 = Vec3::UnitZ();
  const Vec3 qdot_r = s.w_r.cross(s.q_r);
  // Rod rotational kinetic energy uses the inertia implied by the rod's
  // rotational equation of motion (2/3 m_r L_r^2 about the center), i.e.
  // 1/2 * (2/3 m_r L_r^2) |qdot_r|^2. That is the quantity the dynamics
  // conserve.
  double E = 0.5 * p.m_r * s.v_r.squaredNorm() +
             (p.m_r * p.L_r * p.L_r / 3.0) * qdot_r.squaredNorm() +
             p.m_r * p.g * e3.dot(s.x_r);
  for (int j = 0; j < 2; ++j) {
    const Vec3 qdot_j = s.w_c[j].cross(s.q_c[j]);
    const Vec3 xdot_Q = s.v_r + end_sign(j) * p.L_r * qdot_r -
                        s.ldot[j] * s.q_c[j] - s.l[j] * qdot_j;
    const double stretch = p.L_c - s.l[j];
    E += 0.5 * p.m_Q * xdot_Q.squaredNorm() +
         0.5 * s.Om[j].dot(p.J_Q * s.Om[j]) +
         p.m_Q * p.g * e3.dot(s.x_Q(j, p)) + 0.5 * p.k() * stretch * stretch;
  }
  return E;
}

HoverFixture hover_equilibrium(const Params& p, const Vec3& x_target,
                               const Vec3& q_r_target) {
  p.validate();
  if (std::abs(q_r_target.norm() - 1.0) >= 1e-9) {
    throw ValidationError("q_r_target", "must be a unit vector");
  }
  if (std::abs(q_r_target.dot(Vec3::UnitZ())) >= 1e-9) {
    throw ValidationError("q_r_target", "must be horizontal");
  }
  HoverFixture f;
  f.state.x_r = x_target;
  f.state.q_r = q_r_target;
  const double stretch = p.m_r * p.g * p.epsilon * p.epsilon / (2.0 * p.k_bar);
  for (int j = 0; j < 2; ++j) {
    f.state.q_c[j] = -Vec3::UnitZ();
    f.state.l[j] = p.L_c + stretch;
    f.u[j] = (p.m_Q + 0.5 * p.m_r) * p.g * Vec3::UnitZ();
  }
  return f;
}

namespace {

// Uniform in [0, 1) built directly from the top 53 bits of the generator
// output, so the stream is identical across standard libraries.
double unit_uniform(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

Vec3 random_direction(std::mt19937_64& g) {
  const double z = 2.0 * unit_uniform(g) - 1.0;
  const double th = 2.0 * std::numbers::pi * unit_uniform(g);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return Vec3(r * std::cos(th), r * std::sin(th), z);
}

}  // namespace

DisturbanceSignal::DisturbanceSignal(double delta_x_r, double delta_q_r,
                                     double delta_q_c, std::uint64_t seed)
    : delta_x_r_(delta_x_r), delta_q_r_(delta_q_r), delta_q_c_(delta_q_c) {
  std::mt19937_64 gen(seed);
  for (auto& ch : ch_) {
    ch.dir = random_direction(gen);
    ch.freq = 0.25 + 1.25 * unit_uniform(gen);
    ch.phase = 2.0 * std::numbers::pi * unit_uniform(gen);
  }
}

Disturbance DisturbanceSignal::at(double t) const {
  auto wave = [&](const Channel& ch) {
    return 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * ch.freq * t + ch.phase);
  };
  Disturbance d;
  d.dx_r = delta_x_r_ * wave(ch_[0]) * ch_[0].dir;
  d.dq_r = delta_q_r_ * wave(ch_[1]) * ch_[1].dir;
  d.dq_c[0] = delta_q_c_ * wave(ch_[2]) * ch_[2].dir;
  d.dq_c[1] = delta_q_c_ * wave(ch_[3]) * ch_[3].dir;
  d.delta_x_r = delta_x_r_;
  d.delta_q_r = delta_q_r_;
  d.delta_q_c = delta_q_c_;
  return d;
}

}  // namespace barlift
