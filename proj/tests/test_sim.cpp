#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "barlift/config.hpp"
#include "barlift/model.hpp"
#include "barlift/sim.hpp"
#include "barlift/trajectory.hpp"

using barlift::IntegratorConfig;
using barlift::ReducedState;
using barlift::TraceRecord;
using barlift::Vec3;

namespace {

IntegratorConfig make_cfg(IntegratorConfig::Method m, double h, double T) {
  IntegratorConfig cfg;
  cfg.method = m;
  cfg.h = h;
  cfg.T = T;
  return cfg;
}

// Closed-loop reduced dynamics as a plain vector field. Inputs arriving
// from integrator stages sit slightly off the manifold, so normalize the
// working copy before evaluating.
barlift::Rhs closed_loop_rhs(const barlift::Trajectory& traj,
                             const barlift::GainSet& g,
                             const barlift::Params& p,
                             const barlift::ControllerConfig& cc) {
  return [&traj, g, p, cc](double t, const Eigen::VectorXd& y) {
    ReducedState s = ReducedState::unpack(y);
    barlift::renormalize(s);
    const auto rc = barlift::reduced_control(t, s, traj, g, p, cc);
    return barlift::reduced_rhs(t, s, rc.mu[0], rc.mu[1], rc.u[0], rc.u[1],
                                nullptr, p);
  };
}

}  // namespace

TEST_CASE("integrator configuration") {
  IntegratorConfig cfg;
  CHECK(cfg.steps() == 10000);
  CHECK(make_cfg(IntegratorConfig::Method::euler, 0.01, 1.0).steps() == 100);
  CHECK(make_cfg(IntegratorConfig::Method::euler, 0.3, 1.0).steps() == 3);

  cfg.h = 0.0;
  CHECK_THROWS_AS(cfg.validate(), barlift::ValidationError);
  cfg = IntegratorConfig{};
  cfg.renormalize_every = 0;
  CHECK_THROWS_AS(cfg.validate(), barlift::ValidationError);
  cfg = IntegratorConfig{};
  cfg.T = 0.001;  // below one step
  try {
    cfg.validate();
    CHECK(false);
  } catch (const barlift::ValidationError& e) {
    CHECK(e.key == "integrator.T");
  }
}

TEST_CASE("euler takes the textbook step") {
  const auto rhs = [](double, const Eigen::VectorXd& y) {
    return Eigen::VectorXd(-y);
  };
  Eigen::VectorXd s0(1);
  s0 << 1.0;
  const auto cfg = make_cfg(IntegratorConfig::Method::euler, 0.002, 0.002);
  const Eigen::VectorXd s1 = barlift::integrate_stream(rhs, s0, cfg);
  CHECK(s1(0) == 0.998);
}

TEST_CASE("rk4 hits the analytic decay") {
  const auto rhs = [](double, const Eigen::VectorXd& y) {
    return Eigen::VectorXd(-y);
  };
  Eigen::VectorXd s0(1);
  s0 << 1.0;
  const auto cfg = make_cfg(IntegratorConfig::Method::rk4, 0.01, 1.0);
  const Eigen::VectorXd s1 = barlift::integrate_stream(rhs, s0, cfg);
  CHECK(std::abs(s1(0) - std::exp(-1.0)) < 1e-9);
}

TEST_CASE("stored trace has steps plus one entries") {
  const auto rhs = [](double, const Eigen::VectorXd& y) {
    return Eigen::VectorXd(Eigen::VectorXd::Zero(y.size()));
  };
  Eigen::VectorXd s0 = Eigen::VectorXd::Ones(2);
  const auto trace = barlift::integrate(
      rhs, s0, make_cfg(IntegratorConfig::Method::euler, 0.002, 20.0));
  CHECK(trace.size() == 10001);
  CHECK(trace.front() == s0);
}

TEST_CASE("renormalization keeps a rigid rotation on the sphere") {
  const Vec3 w(0.0, 0.0, 1.0);
  const auto rhs = [&](double, const Eigen::VectorXd& y) {
    const Vec3 q(y(0), y(1), y(2));
    Eigen::VectorXd dy(3);
    dy = w.cross(q);
    return dy;
  };
  Eigen::VectorXd q0(3);
  q0 << 1.0, 0.0, 0.0;
  const auto cfg = make_cfg(IntegratorConfig::Method::euler, 0.002, 20.0);

  // without the hook Euler spirals outward measurably
  const Eigen::VectorXd drifted = barlift::integrate_stream(rhs, q0, cfg);
  CHECK(drifted.norm() > 1.0 + 1e-4);

  double worst = 0.0;
  const auto renorm = [](Eigen::VectorXd& y) { y /= y.norm(); };
  const auto watch = [&](int, double, const Eigen::VectorXd& y) {
    worst = std::max(worst, std::abs(y.norm() - 1.0));
  };
  barlift::integrate_stream(rhs, q0, cfg, renorm, watch);
  CHECK(worst < 1e-9);
}

TEST_CASE("rhs errors carry the step index and time") {
  const auto rhs = [](double t, const Eigen::VectorXd& y) {
    if (t >= 0.0059) throw barlift::DegenerateState("boom");
    return Eigen::VectorXd(Eigen::VectorXd::Zero(y.size()));
  };
  Eigen::VectorXd s0 = Eigen::VectorXd::Zero(1);
  try {
    barlift::integrate_stream(
        rhs, s0, make_cfg(IntegratorConfig::Method::euler, 0.002, 1.0));
    CHECK(false);
  } catch (const barlift::Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("step 3 (t=0.006") != std::string::npos);
    CHECK(msg.find("boom") != std::string::npos);
  }
}

TEST_CASE("observer exceptions pass through unwrapped") {
  const auto rhs = [](double, const Eigen::VectorXd& y) {
    return Eigen::VectorXd(Eigen::VectorXd::Zero(y.size()));
  };
  const auto observer = [](int k, double, const Eigen::VectorXd&) {
    if (k == 2) throw std::runtime_error("observer stop");
  };
  Eigen::VectorXd s0 = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_WITH_AS(
      barlift::integrate_stream(
          rhs, s0, make_cfg(IntegratorConfig::Method::euler, 0.1, 1.0), {},
          observer),
      "observer stop", std::runtime_error);
}

TEST_CASE("observed convergence orders on the tracking loop") {
  const barlift::Params p;
  const barlift::GainSet g;
  const barlift::ControllerConfig cc;
  const auto traj = barlift::lissajous_trajectory();
  const auto rhs = closed_loop_rhs(traj, g, p, cc);
  const Eigen::VectorXd y0 = barlift::benchmark_initial_state().pack();
  const double T = 1.0;

  const Eigen::VectorXd ref = barlift::integrate_stream(
      rhs, y0, make_cfg(IntegratorConfig::Method::rk4, 5e-4, T));

  auto err_at = [&](IntegratorConfig::Method m, double h) {
    const Eigen::VectorXd y =
        barlift::integrate_stream(rhs, y0, make_cfg(m, h, T));
    return (y - ref).norm();
  };

  double e_prev = err_at(IntegratorConfig::Method::euler, 0.01);
  for (double h : {0.005, 0.0025}) {
    const double e = err_at(IntegratorConfig::Method::euler, h);
    const double order = std::log2(e_prev / e);
    CHECK(order > 0.7);
    CHECK(order < 1.3);
    e_prev = e;
  }

  e_prev = err_at(IntegratorConfig::Method::rk4, 0.02);
  for (double h : {0.01, 0.005}) {
    const double e = err_at(IntegratorConfig::Method::rk4, h);
    const double order = std::log2(e_prev / e);
    CHECK(order > 3.7);
    CHECK(order < 4.3);
    e_prev = e;
  }
}

TEST_CASE("tracking from the hover equilibrium stays put") {
  const barlift::Params p;
  const barlift::GainSet g;
  const barlift::BoundSet b;
  const barlift::ControllerConfig cc;
  const Vec3 x0(0.0, 0.0, -0.5);
  const auto fix = barlift::hover_equilibrium(p, x0, Vec3::UnitY());
  const auto traj = barlift::hover_trajectory(x0, Vec3::UnitY());
  const auto cfg = make_cfg(IntegratorConfig::Method::euler, 0.002, 2.0);
  const auto r = barlift::run_reduced_tracking(traj, fix.state.reduced_part(),
                                               g, b, p, cfg, cc);
  for (const auto& rec : r.trace) {
    for (double e : {rec.e_x, rec.e_v, rec.e_qr, rec.e_wr, rec.e_q1,
                     rec.e_w1, rec.e_q2, rec.e_w2}) {
      CHECK(e < 1e-6);
    }
  }
  CHECK(r.t_enter == 0.0);
  CHECK(r.v_monotone);
  CHECK(r.u_in_band);
  CHECK(r.u_hover == doctest::Approx(9.85905).epsilon(1e-6));
  CHECK(r.max_unit_defect < 1e-12);
  CHECK(r.max_tangent_defect < 1e-12);
}

TEST_CASE("benchmark tracking run structure and determinism") {
  const barlift::Params p;
  const barlift::GainSet g;
  const barlift::BoundSet b;
  const barlift::ControllerConfig cc;
  const ReducedState s0 = barlift::benchmark_initial_state();
  const auto traj = barlift::lissajous_trajectory();
  const auto cfg = make_cfg(IntegratorConfig::Method::euler, 0.002, 3.0);

  const auto r1 = barlift::run_reduced_tracking(traj, s0, g, b, p, cfg, cc);
  CHECK(r1.trace.size() == 1501);
  for (size_t i = 1; i < r1.trace.size(); ++i)
    CHECK(r1.trace[i].t > r1.trace[i - 1].t);

  // first record reflects the initial condition
  const auto& rec0 = r1.trace.front();
  CHECK(rec0.e_x == r1.initial_errors[0]);
  CHECK(rec0.e_q1 == r1.initial_errors[4]);
  CHECK((rec0.x_r - s0.x_r).norm() < 1e-12);
  const Vec3 xq1 = s0.x_r - p.L_r * s0.q_r - p.L_c * s0.q_c[0];
  const Vec3 xq2 = s0.x_r + p.L_r * s0.q_r - p.L_c * s0.q_c[1];
  CHECK((rec0.x_Q1 - xq1).norm() < 1e-12);
  CHECK((rec0.x_Q2 - xq2).norm() < 1e-12);

  // last record agrees with the reported final state
  const auto& recN = r1.trace.back();
  const Vec3 xq1N = r1.final_state.x_r - p.L_r * r1.final_state.q_r -
                    p.L_c * r1.final_state.q_c[0];
  CHECK((recN.x_Q1 - xq1N).norm() < 1e-12);

  // errors contract over the opening seconds
  CHECK(recN.e_x < 0.5 * rec0.e_x);
  CHECK(recN.e_q1 < 0.1 * rec0.e_q1);

  CHECK(r1.max_unit_defect < 1e-9);
  CHECK(r1.max_tangent_defect < 1e-7);
  CHECK(r1.max_rotation_defect < 1e-8);

  const auto r2 = barlift::run_reduced_tracking(traj, s0, g, b, p, cfg, cc);
  REQUIRE(r2.trace.size() == r1.trace.size());
  for (size_t i = 0; i < r1.trace.size(); ++i) {
    CHECK(r1.trace[i].V == r2.trace[i].V);
    CHECK(r1.trace[i].u1 == r2.trace[i].u1);
    CHECK(r1.trace[i].e_x == r2.trace[i].e_x);
    CHECK((r1.trace[i].x_r - r2.trace[i].x_r).norm() == 0.0);
  }

  // the attitude co-simulation is a diagnostic: switching it off must not
  // perturb the reduced trajectory
  barlift::TrackOptions opt;
  opt.attitude_loop = false;
  const auto r3 =
      barlift::run_reduced_tracking(traj, s0, g, b, p, cfg, cc, opt);
  CHECK(r3.max_rotation_defect == 0.0);
  REQUIRE(r3.trace.size() == r1.trace.size());
  for (size_t i = 0; i < r1.trace.size(); ++i) {
    CHECK(r3.trace[i].e_x == r1.trace[i].e_x);
    CHECK(r3.trace[i].V == r1.trace[i].V);
  }
}

TEST_CASE("lissajous trajectory samples") {
  const auto traj = barlift::lissajous_trajectory();
  const auto d0 = traj(0.0);
  CHECK((d0.x - Vec3(0.0, 4.2, -0.5)).norm() == 0.0);
  CHECK((d0.v - Vec3(0.48 * M_PI, 0.0, 0.0)).norm() < 1e-15);
  CHECK((d0.a - Vec3(0.0, -0.168 * M_PI * M_PI, 0.0)).norm() < 1e-15);
  for (double t : {0.0, 0.7, 3.9, 12.0}) {
    const auto d = traj(t);
    CHECK((d.q_r - Vec3::UnitY()).norm() == 0.0);
    CHECK(d.w_r.norm() == 0.0);
    CHECK(d.wdot_r.norm() == 0.0);
    CHECK((d.b1 - Vec3::UnitX()).norm() == 0.0);
    CHECK(d.x(0) == 1.2 * std::sin(0.4 * M_PI * t));
    CHECK(d.x(1) == 4.2 * std::cos(0.2 * M_PI * t));
    CHECK(d.x(2) == -0.5);
  }
}

TEST_CASE("hover trajectory is constant") {
  const Vec3 x0(1.0, -2.0, 0.5);
  const auto traj = barlift::hover_trajectory(x0, Vec3(0.0, 1.0001, 0.0));
  for (double t : {0.0, 1.5, 19.0}) {
    const auto d = traj(t);
    CHECK((d.x - x0).norm() == 0.0);
    CHECK(d.v.norm() == 0.0);
    CHECK(d.a.norm() == 0.0);
    CHECK((d.q_r - Vec3::UnitY()).norm() < 1e-12);  // drift repaired
  }
}

TEST_CASE("trace csv format round trips") {
  std::vector<TraceRecord> trace(2);
  trace[0].t = 0.0;
  trace[0].e_x = 1.0 / 3.0;
  trace[0].V = 12.345678901234567;
  trace[0].x_r = Vec3(0.1, -0.2, 0.3);
  trace[1].t = 0.002;
  trace[1].u1 = 9.85905;
  trace[1].x_Q2 = Vec3(-1.0, 2.0, M_PI);

  const auto path = (std::filesystem::temp_directory_path() /
                     "barlift_trace_roundtrip.csv")
                        .string();
  barlift::write_trace_csv(path, trace);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "t,e_x,e_v,e_qr,e_wr,e_q1,e_w1,e_q2,e_w2,u1,u2,V,"
        "xr_x,xr_y,xr_z,xq1_x,xq1_y,xq1_z,xq2_x,xq2_y,xq2_z");

  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    rows.push_back(vals);
  }
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].size() == 21);
  // 17 significant digits round-trip doubles exactly
  CHECK(rows[0][1] == 1.0 / 3.0);
  CHECK(rows[0][11] == 12.345678901234567);
  CHECK(rows[0][13] == -0.2);
  CHECK(rows[1][0] == 0.002);
  CHECK(rows[1][9] == 9.85905);
  CHECK(rows[1][20] == M_PI);
  std::filesystem::remove(path);
}

TEST_CASE("energy check runs clean on a short window") {
  const barlift::Params p;
  barlift::FullState fs;
  const ReducedState rs = barlift::benchmark_initial_state();
  fs.x_r = rs.x_r;
  fs.v_r = rs.v_r;
  fs.q_r = rs.q_r;
  fs.w_r = rs.w_r;
  fs.q_c = rs.q_c;
  fs.w_c = rs.w_c;
  const auto r = barlift::run_energy_check(fs, p, 2e-4, 0.2);
  CHECK(r.E0 == barlift::total_energy(fs, p));
  CHECK(r.max_rel_drift < 1e-8);
}
