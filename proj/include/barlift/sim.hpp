#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "barlift/certify.hpp"
#include "barlift/control.hpp"
#include "barlift/model.hpp"
#include "barlift/state.hpp"
#include "barlift/trajectory.hpp"

namespace barlift {

struct IntegratorConfig {
  enum class Method { euler, rk4 };
  Method method = Method::euler;
  double h = 0.002;
  double T = 20.0;
  int renormalize_every = 1;

  int steps() const;      // floor(T / h)
  void validate() const;  // throws ValidationError
};

using Rhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;
using StateHook = std::function<void(Eigen::VectorXd&)>;
using Observer = std::function<void(int, double, const Eigen::VectorXd&)>;

// Fixed-step explicit integration. The renormalizer runs after every
// renormalize_every-th step; the observer sees every stored state,
// including the initial one, outside the error-wrapping of the step
// itself. Errors thrown by the rhs or the renormalizer are rethrown with
// the step index and time prepended.
Eigen::VectorXd integrate_stream(const Rhs& rhs, Eigen::VectorXd state,
                                 const IntegratorConfig& cfg,
                                 const StateHook& renorm = {},
                                 const Observer& observer = {});

// Same, storing the whole trace: steps() + 1 states.
std::vector<Eigen::VectorXd> integrate(const Rhs& rhs,
                                       const Eigen::VectorXd& state,
                                       const IntegratorConfig& cfg,
                                       const StateHook& renorm = {},
                                       const Observer& observer = {});

// One row of the standard run output.
struct TraceRecord {
  double t = 0.0;
  double e_x = 0.0, e_v = 0.0, e_qr = 0.0, e_wr = 0.0;
  double e_q1 = 0.0, e_w1 = 0.0, e_q2 = 0.0, e_w2 = 0.0;
  double u1 = 0.0, u2 = 0.0, V = 0.0;
  Vec3 x_r = Vec3::Zero(), x_Q1 = Vec3::Zero(), x_Q2 = Vec3::Zero();
};

void write_trace_csv(const std::string& path,
                     const std::vector<TraceRecord>& trace);

struct TrackOptions {
  bool attitude_loop = true;  // co-simulate the quadrotor attitude loops
};

struct TrackResult {
  std::vector<TraceRecord> trace;
  std::array<double, 8> initial_errors{};
  std::array<double, 8> final_errors{};
  double u_hover = 0.0;  // per-vehicle hover thrust magnitude
  double u_min_tail = 0.0, u_max_tail = 0.0;  // over the final two seconds
  bool u_in_band = false;
  double t_enter = -1.0;  // first time inside the certified domain, -1 never
  double v_enter = 0.0;   // V at domain entry, anchors the monitor slack
  bool v_monotone = false;  // V nonincreasing from t_enter on
  double max_v_growth = 0.0;  // worst relative single-step V increase
  double max_unit_defect = 0.0;
  double max_tangent_defect = 0.0;
  double max_rotation_defect = 0.0;
  ReducedState final_state;
};

// Closed-loop tracking of the reduced model. The quadrotor attitude loops
// are co-simulated against the cable controls as a diagnostic; the reduced
// dynamics take the cable controls directly.
TrackResult run_reduced_tracking(const Trajectory& traj,
                                 const ReducedState& s0, const GainSet& g,
                                 const BoundSet& b, const Params& p,
                                 const IntegratorConfig& cfg,
                                 const ControllerConfig& cc,
                                 const TrackOptions& opt = {});

struct SweepResult {
  std::vector<double> epsilons;
  std::vector<double> deviations;  // sup over (t1, T] per epsilon
  std::vector<double> ratios;      // deviations[i] / deviations[i+1]
  std::vector<double> h_full;      // full-model step per epsilon
  double T = 0.0, t1 = 0.0;
};

// Compares the full elastic model against the reduced model over a range
// of stiffness scales. Each full run starts on the slow manifold and is
// sampled on a common 0.01 s grid; runs are independent and execute on a
// small thread pool (capped by the BARLIFT_THREADS environment variable).
// Throws StiffnessInstability when a full run diverges.
SweepResult run_epsilon_sweep(const Trajectory& traj, const ReducedState& s0,
                              const GainSet& g, const Params& base,
                              const std::vector<double>& eps_list, double T,
                              double t1, const ControllerConfig& cc);

struct DisturbResult {
  std::vector<TraceRecord> trace;
  double d1 = 0.0, rate = 0.0;
  double t_enter = -1.0;
  double max_V_after = 0.0;
  bool contained = false;  // V stayed within 1.05 d1 after entry
};

// Tracking under a bounded random disturbance. Certifies the gains first
// to obtain the ultimate bound d1, then checks that V enters the d1
// sublevel set and stays in its 5 percent neighbourhood. Throws NeverEnters
// when the run ends before entry.
DisturbResult run_disturbance(const Trajectory& traj, const ReducedState& s0,
                              const GainSet& g, const BoundSet& b,
                              const Params& p, const IntegratorConfig& cfg,
                              const ControllerConfig& cc, uint64_t seed);

struct EnergyResult {
  double E0 = 0.0;
  double max_rel_drift = 0.0;
};

// Unforced full-model run measuring the worst relative drift of the total
// energy, which is conserved when the cable damping is zero.
EnergyResult run_energy_check(const FullState& s0, const Params& p, double h,
                              double T);

}  // namespace barlift
