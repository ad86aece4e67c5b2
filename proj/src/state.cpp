#include "barlift/state.hpp"

#include <sstream>

namespace barlift {

void Params::validate() const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0)) {
      throw ValidationError(key, "must be strictly positive");
    }
  };
  positive(m_Q, "params.m_Q");
  positive(m_r, "params.m_r");
  positive(L_r, "params.L_r");
  positive(L_c, "params.L_c");
  positive(g, "params.g");
  positive(k_bar, "params.k_bar");
  positive(epsilon, "params.epsilon");
  if (c_bar < 0.0) {
    throw ValidationError("params.c_bar", "must be nonnegative");
  }
  if ((J_Q - J_Q.transpose()).norm() > 1e-12) {
    throw ValidationError("params.J_Q", "must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(J_Q);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw ValidationError("params.J_Q", "must be positive-definite");
  }
}

Eigen::VectorXd ReducedState::pack() const {
  Eigen::VectorXd v(kDim);
  v.segment<3>(0) = x_r;
  v.segment<3>(3) = v_r;
  v.segment<3>(6) = q_r;
  v.segment<3>(9) = w_r;
  for (int j = 0; j < 2; ++j) {
    v.segment<3>(12 + 6 * j) = q_c[j];
    v.segment<3>(15 + 6 * j) = w_c[j];
  }
  return v;
}

ReducedState ReducedState::unpack(const Eigen::VectorXd& v) {
  ReducedState s;
  s.x_r = v.segment<3>(0);
  s.v_r = v.segment<3>(3);
  s.q_r = v.segment<3>(6);
  s.w_r = v.segment<3>(9);
  for (int j = 0; j < 2; ++j) {
    s.q_c[j] = v.segment<3>(12 + 6 * j);
    s.w_c[j] = v.segment<3>(15 + 6 * j);
  }
  return s;
}

void ReducedState::validate() const {
  check_unit(q_r, "q_r");
  check_tangent(w_r, q_r, "w_r");
  check_unit(q_c[0], "q_1");
  check_tangent(w_c[0], q_c[0], "w_1");
  check_unit(q_c[1], "q_2");
  check_tangent(w_c[1], q_c[1], "w_2");
  if (has_quad_attitudes) {
    check_rotation(R[0], "R_1");
    check_rotation(R[1], "R_2");
  }
}

Eigen::VectorXd FullState::pack() const {
  Eigen::VectorXd v(kDim);
  v.segment<3>(0) = x_r;
  v.segment<3>(3) = v_r;
  v.segment<3>(6) = q_r;
  v.segment<3>(9) = w_r;
  for (int j = 0; j < 2; ++j) {
    v.segment<3>(12 + 6 * j) = q_c[j];
    v.segment<3>(15 + 6 * j) = w_c[j];
    v(24 + 2 * j) = l[j];
    v(25 + 2 * j) = ldot[j];
    v.segment<9>(28 + 12 * j) = Eigen::Map<const Eigen::VectorXd>(R[j].data(), 9);
    v.segment<3>(37 + 12 * j) = Om[j];
  }
  return v;
}

FullState FullState::unpack(const Eigen::VectorXd& v) {
  FullState s;
  s.x_r = v.segment<3>(0);
  s.v_r = v.segment<3>(3);
  s.q_r = v.segment<3>(6);
  s.w_r = v.segment<3>(9);
  for (int j = 0; j < 2; ++j) {
    s.q_c[j] = v.segment<3>(12 + 6 * j);
    s.w_c[j] = v.segment<3>(15 + 6 * j);
    s.l[j] = v(24 + 2 * j);
    s.ldot[j] = v(25 + 2 * j);
    Eigen::Map<Mat3> m(s.R[j].data());
    m = Eigen::Map<const Mat3>(v.segment<9>(28 + 12 * j).data());
    s.Om[j] = v.segment<3>(37 + 12 * j);
  }
  return s;
}

ReducedState FullState::reduced_part() const {
  ReducedState s;
  s.x_r = x_r;
  s.v_r = v_r;
  s.q_r = q_r;
  s.w_r = w_r;
  s.q_c = q_c;
  s.w_c = w_c;
  s.has_quad_attitudes = true;
  s.R = R;
  s.Om = Om;
  return s;
}

void FullState::validate() const {
  check_unit(q_r, "q_r");
  check_tangent(w_r, q_r, "w_r");
  for (int j = 0; j < 2; ++j) {
    const char* qn = j == 0 ? "q_1" : "q_2";
    const char* wn = j == 0 ? "w_1" : "w_2";
    const char* rn = j == 0 ? "R_1" : "R_2";
    check_unit(q_c[j], qn);
    check_tangent(w_c[j], q_c[j], wn);
    check_rotation(R[j], rn);
    if (!(l[j] > 0.0)) {
      std::ostringstream msg;
      msg << "l_" << (j + 1) << ": cable length " << l[j] << " not positive";
      throw DegenerateState(msg.str());
    }
  }
}

bool Disturbance::within_bounds(double tol) const {
  return dx_r.norm() <= delta_x_r + tol && dq_r.norm() <= delta_q_r + tol &&
         dq_c[0].norm() <= delta_q_c + tol && dq_c[1].norm() <= delta_q_c + tol;
}

void renormalize(ReducedState& s) {
  s.q_r = renormalize_unit(s.q_r);
  s.w_r = tangent_project(s.w_r, s.q_r);
  for (int j = 0; j < 2; ++j) {
    s.q_c[j] = renormalize_unit(s.q_c[j]);
    s.w_c[j] = tangent_project(s.w_c[j], s.q_c[j]);
    if (s.has_quad_attitudes) s.R[j] = renormalize_rotation(s.R[j]);
  }
}

void renormalize(FullState& s) {
  s.q_r = renormalize_unit(s.q_r);
  s.w_r = tangent_project(s.w_r, s.q_r);
  for (int j = 0; j < 2; ++j) {
    s.q_c[j] = renormalize_unit(s.q_c[j]);
    s.w_c[j] = tangent_project(s.w_c[j], s.q_c[j]);
    s.R[j] = renormalize_rotation(s.R[j]);
  }
}

}  // namespace barlift
