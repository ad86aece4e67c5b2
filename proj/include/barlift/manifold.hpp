#pragma once

#include <Eigen/Dense>

#include "barlift/errors.hpp"

namespace barlift {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Skew-symmetric matrix such that hat(v) * w == v x w for all w.
Mat3 hat(const Vec3& v);

// Inverse of hat. Throws NonSkewInput if M is not skew-symmetric
// (Frobenius norm of M + M^T at least 1e-9).
Vec3 vee(const Mat3& M);

struct Split {
  Vec3 parallel;       // (v.q) q
  Vec3 perpendicular;  // -hat(q)^2 v
};

// Splits v into components along and across the unit vector q.
Split decompose(const Vec3& v, const Vec3& q);

// Attitude error on the sphere: q_des x q. Vanishes both when q == q_des
// and when q == -q_des; the antipodal case is distinguished by
// config_error_psi, which is 2 there.
Vec3 attitude_error(const Vec3& q_des, const Vec3& q);

// Angular velocity error w + hat(q)^2 w_des, the tangent-space comparison
// of w (at q) with w_des (at q_des). Both velocities must be tangent to
// their base points within 1e-9, else TangencyViolation.
Vec3 angvel_error(const Vec3& q, const Vec3& w, const Vec3& q_des,
                  const Vec3& w_des);

// Configuration error 1 - q_des.q, in [0, 2].
double config_error_psi(const Vec3& q_des, const Vec3& q);

struct RotationErrors {
  Vec3 e_R;      // 0.5 * vee(R_des^T R - R^T R_des)
  Vec3 e_Omega;  // Om - R^T R_des Om_des
};

RotationErrors rotation_errors(const Mat3& R_des, const Vec3& Om_des,
                               const Mat3& R, const Vec3& Om);

// Drift repair for fixed-step integration. renormalize_unit rejects inputs
// whose norm has left (0.5, 1.5); renormalize_rotation rejects matrices
// further than 0.1 from orthogonal in Frobenius norm. Both throw
// DegenerateState, which signals integrator blow-up rather than a bug here.
Vec3 renormalize_unit(const Vec3& q);
Vec3 tangent_project(const Vec3& w, const Vec3& q);
Mat3 renormalize_rotation(const Mat3& R);

// Rotation matrix exp(hat(v)) via the Rodrigues formula, with a series
// fallback near v = 0.
Mat3 expm_so3(const Vec3& v);

// Invariant checks used by state constructors and preconditions. `name`
// identifies the offending field in the exception message.
void check_unit(const Vec3& q, const char* name);
void check_tangent(const Vec3& w, const Vec3& q, const char* name);
void check_rotation(const Mat3& R, const char* name);

}  // namespace barlift
