#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "barlift/certify.hpp"
#include "barlift/sim.hpp"

namespace barlift {

// The benchmark initial condition (renormalized onto the state manifold).
ReducedState benchmark_initial_state();

// One experiment, fully described. Parsed from flat key=value text where
// nested fields use dotted keys ("gains.k_x = 9"), '#' starts a comment,
// and unknown keys are rejected. An empty file is the default experiment:
// benchmark tracking with the reference parameter set.
struct ExperimentConfig {
  enum class Mode { track, sweep, disturb, certify, synthesize, energy };
  enum class TrajKind { lissajous, hover };

  Mode mode = Mode::track;
  Params params;
  GainSet gains;
  BoundSet bounds;

  TrajKind trajectory = TrajKind::lissajous;
  Vec3 hover_x = Vec3(0.0, 0.0, -0.5);
  Vec3 hover_q_r = Vec3::UnitY();

  ReducedState initial = benchmark_initial_state();
  IntegratorConfig integrator;
  ControllerConfig controller;

  std::uint64_t seed = 1;
  std::string output_path;  // trace CSV target; empty = default name

  // Mode knobs, defaulted to the benchmark thresholds.
  std::vector<double> sweep_epsilons = {0.04, 0.02, 0.01};
  double sweep_T = 4.0;
  double sweep_t1 = 0.5;
  double sweep_ratio_lo = 1.5;
  double sweep_ratio_hi = 2.5;
  double sweep_dev_frac = 0.05;  // smallest-eps deviation cap, fraction of
  double sweep_scale = 4.2;      // the trajectory scale
  bool track_attitude_loop = true;
  double track_error_max = 0.05;
  double track_error_frac = 0.1;
  double track_u_band = 0.05;
  double disturb_contain_factor = 1.05;
  double disturb_enter_frac = 0.5;  // must enter by this fraction of T
  double energy_drift_max = 1e-6;
  double synth_target_lambda = 0.05;

  Trajectory make_trajectory() const;
  void validate() const;
};

// Throws ParseError (with the 1-based line number) for malformed syntax or
// values, ValidationError for unknown keys and out-of-range settings. The
// initial-state attitude fields are renormalized, angular velocities
// re-projected.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config(const std::string& path);

// Emits every key; parse_config(serialize(c)) reproduces c exactly
// (doubles are printed round-trip safe).
std::string serialize(const ExperimentConfig& cfg);

}  // namespace barlift
