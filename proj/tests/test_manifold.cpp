#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "barlift/errors.hpp"
#include "barlift/manifold.hpp"
#include "sampling.hpp"

using barlift::Mat3;
using barlift::Vec3;

namespace {

const Vec3 e1(1, 0, 0);
const Vec3 e2(0, 1, 0);
const Vec3 e3(0, 0, 1);

}  // namespace

TEST_CASE("hat of e3 matches the standard skew matrix") {
  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  CHECK((barlift::hat(e3) - expected).norm() == 0.0);
}

TEST_CASE("hat of zero is the zero matrix") {
  CHECK(barlift::hat(Vec3::Zero()).isZero(0.0));
}

TEST_CASE("hat acts as the cross product") {
  const Vec3 v(1, 2, 3);
  const Vec3 w(4, 5, 6);
  const Vec3 expected(-3, 6, -3);
  CHECK((barlift::hat(v) * w - expected).norm() == 0.0);

  std::mt19937_64 gen(11);
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = testutil::random_vec(gen, 5.0);
    const Vec3 b = testutil::random_vec(gen, 5.0);
    CHECK((barlift::hat(a) * b - a.cross(b)).norm() < 1e-13);
    // antisymmetry of the product, hat(a) b = -hat(b) a
    CHECK((barlift::hat(a) * b + barlift::hat(b) * a).norm() < 1e-13);
  }
}

TEST_CASE("vee inverts hat") {
  CHECK((barlift::vee(barlift::hat(e3)) - e3).norm() == 0.0);
  CHECK(barlift::vee(Mat3::Zero()).isZero(0.0));
  const Vec3 v(-2, 0.5, 7);
  CHECK((barlift::vee(barlift::hat(v)) - v).norm() == 0.0);

  std::mt19937_64 gen(12);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 a = testutil::random_vec(gen, 10.0);
    CHECK((barlift::vee(barlift::hat(a)) - a).norm() < 1e-14);
    CHECK((barlift::hat(a) + barlift::hat(a).transpose()).norm() == 0.0);
  }
}

TEST_CASE("vee rejects a matrix that is not skew") {
  Mat3 m = Mat3::Identity();
  CHECK_THROWS_AS(barlift::vee(m), barlift::NonSkewInput);
  m = barlift::hat(e1);
  m(0, 1) += 1e-6;
  CHECK_THROWS_AS(barlift::vee(m), barlift::NonSkewInput);
}

TEST_CASE("decompose splits along and across the axis") {
  auto s = barlift::decompose(e3, e3);
  CHECK((s.parallel - e3).norm() == 0.0);
  CHECK(s.perpendicular.norm() == 0.0);

  s = barlift::decompose(e1, e3);
  CHECK(s.parallel.norm() == 0.0);
  CHECK((s.perpendicular - e1).norm() == 0.0);

  s = barlift::decompose(Vec3(1, 1, 0), e1);
  CHECK((s.parallel - e1).norm() < 1e-15);
  CHECK((s.perpendicular - e2).norm() < 1e-15);
}

TEST_CASE("decompose reconstructs its input on random samples") {
  std::mt19937_64 gen(13);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 q = testutil::random_direction(gen);
    const Vec3 v = testutil::random_vec(gen, 10.0);
    const auto s = barlift::decompose(v, q);
    CHECK((s.parallel + s.perpendicular - v).norm() < 1e-12);
    CHECK(std::abs(s.perpendicular.dot(q)) < 1e-12);
    CHECK(s.parallel.cross(q).norm() < 1e-12);
  }
}

TEST_CASE("attitude error is the cross product of desired and actual") {
  CHECK(barlift::attitude_error(e1, e1).norm() == 0.0);
  CHECK((barlift::attitude_error(e1, e2) - e3).norm() == 0.0);
  // Antipodal attitudes give a zero error vector; only the configuration
  // error function can tell this apart from perfect tracking.
  CHECK(barlift::attitude_error(e3, -e3).norm() == 0.0);
  CHECK(barlift::config_error_psi(e3, -e3) == doctest::Approx(2.0));
}

TEST_CASE("attitude error is tangent at the actual attitude") {
  std::mt19937_64 gen(14);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 qd = testutil::random_direction(gen);
    const Vec3 q = testutil::random_direction(gen);
    const Vec3 eq = barlift::attitude_error(qd, q);
    CHECK(std::abs(eq.dot(q)) < 1e-15);
    // sin^2 of the angle between the two attitudes
    const double lhs = eq.squaredNorm();
    const double rhs = 1.0 - qd.dot(q) * qd.dot(q);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("configuration error spans zero to two") {
  CHECK(barlift::config_error_psi(e2, e2) == 0.0);
  CHECK(barlift::config_error_psi(e2, -e2) == 2.0);
  CHECK(barlift::config_error_psi(e1, e3) == 1.0);
}

TEST_CASE("configuration error brackets the attitude error norm") {
  // For psi <= psibar < 1 the squared error norm satisfies
  //   0.5 ||e_q||^2 <= psi <= ||e_q||^2 / (2 - psibar),
  // with equality on the right when psibar = psi because
  // ||e_q||^2 = psi (2 - psi) exactly.
  std::mt19937_64 gen(15);
  int used = 0;
  while (used < 2000) {
    const Vec3 qd = testutil::random_direction(gen);
    const Vec3 q = testutil::random_direction(gen);
    const double psi = barlift::config_error_psi(qd, q);
    if (psi >= 1.0) continue;
    ++used;
    const double eq2 = barlift::attitude_error(qd, q).squaredNorm();
    CHECK(0.5 * eq2 <= psi * (1.0 + 1e-12) + 1e-15);
    CHECK(psi <= eq2 / (2.0 - psi) * (1.0 + 1e-12) + 1e-15);
    CHECK(eq2 == doctest::Approx(psi * (2.0 - psi)).epsilon(1e-12));
  }
}

TEST_CASE("angular velocity error compares rates across base points") {
  // identical attitudes and rates
  const Vec3 w = 0.3 * e1;
  CHECK(barlift::angvel_error(e3, w, e3, w).norm() < 1e-15);
  // transport of the desired rate flips its sign through hat(q)^2
  CHECK((barlift::angvel_error(e3, Vec3::Zero(), e3, e1) + e1).norm() ==
        0.0);
  // zero desired rate passes the actual rate through
  CHECK((barlift::angvel_error(e3, e2, e1, Vec3::Zero()) - e2).norm() == 0.0);
}

TEST_CASE("angular velocity error result stays tangent") {
  std::mt19937_64 gen(16);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 q = testutil::random_direction(gen);
    const Vec3 qd = testutil::random_direction(gen);
    const Vec3 w = testutil::random_tangent(gen, q, 3.0);
    const Vec3 wd = testutil::random_tangent(gen, qd, 3.0);
    const Vec3 ew = barlift::angvel_error(q, w, qd, wd);
    CHECK(std::abs(ew.dot(q)) < 1e-9);
  }
}

TEST_CASE("angular velocity error rejects non-tangent rates") {
  CHECK_THROWS_AS(barlift::angvel_error(e3, e3, e3, Vec3::Zero()),
                  barlift::TangencyViolation);
  CHECK_THROWS_AS(barlift::angvel_error(e3, Vec3::Zero(), e1, e1),
                  barlift::TangencyViolation);
}

TEST_CASE("rotation errors match their defining formulas") {
  const Mat3 I = Mat3::Identity();
  auto r = barlift::rotation_errors(I, Vec3::Zero(), I, Vec3::Zero());
  CHECK(r.e_R.norm() == 0.0);
  CHECK(r.e_Omega.norm() == 0.0);

  const Mat3 Rz =
      Eigen::AngleAxisd(std::numbers::pi / 2, e3).toRotationMatrix();
  r = barlift::rotation_errors(I, Vec3::Zero(), Rz, Vec3::Zero());
  CHECK((r.e_R - e3).norm() < 1e-15);

  r = barlift::rotation_errors(I, Vec3::Zero(), I, e1);
  CHECK((r.e_Omega - e1).norm() == 0.0);

  std::mt19937_64 gen(17);
  for (int i = 0; i < 500; ++i) {
    const Mat3 Rd = testutil::random_rotation(gen);
    const Mat3 R = testutil::random_rotation(gen);
    const Vec3 Om = testutil::random_vec(gen, 2.0);
    const Vec3 Omd = testutil::random_vec(gen, 2.0);
    const auto e = barlift::rotation_errors(Rd, Omd, R, Om);
    const Mat3 skew = Rd.transpose() * R - R.transpose() * Rd;
    CHECK((e.e_R - 0.5 * barlift::vee(skew)).norm() < 1e-13);
    CHECK((e.e_Omega - (Om - R.transpose() * Rd * Omd)).norm() < 1e-13);
  }
}

TEST_CASE("renormalize_unit rescales drifted vectors") {
  const Vec3 q = 1.0001 * e2;
  CHECK((barlift::renormalize_unit(q) - e2).norm() < 1e-15);
  CHECK(barlift::renormalize_unit(0.6 * e1).norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(barlift::renormalize_unit(0.4 * e1),
                  barlift::DegenerateState);
  CHECK_THROWS_AS(barlift::renormalize_unit(Vec3::Zero()),
                  barlift::DegenerateState);
}

TEST_CASE("tangent_project removes the normal component") {
  const Vec3 w = e2 + 1e-5 * e3;
  const Vec3 p = barlift::tangent_project(w, e3);
  CHECK(std::abs(p.dot(e3)) < 1e-15);
  CHECK((p - e2).norm() < 1e-15);
}

TEST_CASE("renormalize_rotation repairs mild drift and rejects junk") {
  std::mt19937_64 gen(18);
  for (int i = 0; i < 200; ++i) {
    const Mat3 R = testutil::random_rotation(gen);
    // exact rotations are fixed points
    CHECK((barlift::renormalize_rotation(R) - R).norm() < 1e-12);
    // small perturbations come back orthogonal
    Mat3 drifted = R;
    drifted(0, 1) += 1e-4;
    drifted(2, 2) -= 1e-4;
    const Mat3 fixed = barlift::renormalize_rotation(drifted);
    CHECK((fixed.transpose() * fixed - Mat3::Identity()).norm() < 1e-14);
    CHECK(fixed.determinant() == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(barlift::renormalize_rotation(2.0 * Mat3::Identity()),
                  barlift::DegenerateState);
}

TEST_CASE("expm_so3 agrees with the axis-angle rotation") {
  CHECK((barlift::expm_so3(Vec3::Zero()) - Mat3::Identity()).norm() == 0.0);

  const double th = 0.7;
  const Mat3 Rz = Eigen::AngleAxisd(th, e3).toRotationMatrix();
  CHECK((barlift::expm_so3(th * e3) - Rz).norm() < 1e-14);

  // tiny angles exercise the series branch
  const Vec3 tiny = 1e-9 * Vec3(1, -2, 0.5);
  const Mat3 R = barlift::expm_so3(tiny);
  CHECK((R - (Mat3::Identity() + barlift::hat(tiny))).norm() < 1e-17);
  CHECK((R.transpose() * R - Mat3::Identity()).norm() < 1e-15);

  std::mt19937_64 gen(19);
  for (int i = 0; i < 200; ++i) {
    const Vec3 v = testutil::random_vec(gen, 3.0);
    const Mat3 expected = Eigen::AngleAxisd(v.norm(), v.normalized())
                              .toRotationMatrix();
    CHECK((barlift::expm_so3(v) - expected).norm() < 1e-13);
  }
}
