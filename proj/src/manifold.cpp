#include "barlift/manifold.hpp"

#include <cmath>
#include <sstream>

namespace barlift {

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& M) {
  const double skew_defect = (M + M.transpose()).norm();
  if (skew_defect >= 1e-9) {
    std::ostringstream msg;
    msg << "vee: input is not skew-symmetric, |M + M^T| = " << skew_defect;
    throw NonSkewInput(msg.str());
  }
  return Vec3(M(2, 1), M(0, 2), M(1, 0));
}

Split decompose(const Vec3& v, const Vec3& q) {
  Split s;
  s.parallel = v.dot(q) * q;
  s.perpendicular = -hat(q) * (hat(q) * v);
  return s;
}

Vec3 attitude_error(const Vec3& q_des, const Vec3& q) {
  return q_des.cross(q);
}

Vec3 angvel_error(const Vec3& q, const Vec3& w, const Vec3& q_des,
                  const Vec3& w_des) {
  check_tangent(w, q, "angvel_error: w");
  check_tangent(w_des, q_des, "angvel_error: w_des");
  return w + hat(q) * (hat(q) * w_des);
}

double config_error_psi(const Vec3& q_des, const Vec3& q) {
  return 1.0 - q_des.dot(q);
}

RotationErrors rotation_errors(const Mat3& R_des, const Vec3& Om_des,
                               const Mat3& R, const Vec3& Om) {
  check_rotation(R_des, "rotation_errors: R_des");
  check_rotation(R, "rotation_errors: R");
  // A - A^T is skew exactly in floating point, so vee's guard cannot fire.
  const Mat3 A = R_des.transpose() * R;
  RotationErrors e;
  e.e_R = 0.5 * vee(A - A.transpose());
  e.e_Omega = Om - A.transpose() * Om_des;
  return e;
}

Vec3 renormalize_unit(const Vec3& q) {
  const double n = q.norm();
  if (n <= 0.5 || n >= 1.5) {
    std::ostringstream msg;
    msg << "renormalize_unit: norm " << n << " outside (0.5, 1.5)";
    throw DegenerateState(msg.str());
  }
  return q / n;
}

Vec3 tangent_project(const Vec3& w, const Vec3& q) {
  return w - (w.dot(q) / q.squaredNorm()) * q;
}

Mat3 renormalize_rotation(const Mat3& R) {
  const double defect = (R.transpose() * R - Mat3::Identity()).norm();
  if (defect > 0.1) {
    std::ostringstream msg;
    msg << "renormalize_rotation: |R^T R - I| = " << defect
        << " exceeds repair range 0.1";
    throw DegenerateState(msg.str());
  }
  // Newton iteration for the orthogonal polar factor. Quadratic near the
  // manifold, so a handful of steps reaches machine precision.
  Mat3 X = R;
  for (int i = 0; i < 25; ++i) {
    X = 0.5 * (X + X.inverse().transpose());
    if ((X.transpose() * X - Mat3::Identity()).norm() < 1e-14) break;
  }
  if (X.determinant() < 0.0) {
    throw DegenerateState("renormalize_rotation: nearest orthogonal matrix "
                          "is a reflection");
  }
  return X;
}

Mat3 expm_so3(const Vec3& v) {
  const double theta = v.norm();
  const Mat3 V = hat(v);
  double a, b;  // coefficients of V and V^2
  if (theta < 1e-8) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Mat3::Identity() + a * V + b * (V * V);
}

void check_unit(const Vec3& q, const char* name) {
  const double n = q.norm();
  if (std::abs(n - 1.0) >= 1e-9) {
    std::ostringstream msg;
    msg << name << ": norm " << n << " is not 1 within 1e-9";
    throw DegenerateState(msg.str());
  }
}

void check_tangent(const Vec3& w, const Vec3& q, const char* name) {
  const double d = std::abs(w.dot(q));
  if (d >= 1e-9) {
    std::ostringstream msg;
    msg << name << ": not tangent, |w . q| = " << d;
    throw TangencyViolation(msg.str());
  }
}

void check_rotation(const Mat3& R, const char* name) {
  const double defect =
      (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (defect >= 1e-8) {
    std::ostringstream msg;
    msg << name << ": R^T R deviates from I by " << defect;
    throw DegenerateState(msg.str());
  }
  if (std::abs(R.determinant() - 1.0) >= 1e-8) {
    std::ostringstream msg;
    msg << name << ": determinant " << R.determinant() << " is not +1";
    throw DegenerateState(msg.str());
  }
}

}  // namespace barlift
