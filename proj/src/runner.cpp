#include "barlift/runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "barlift/errors.hpp"

namespace barlift {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error("write failure on " + path);
}

void append_errors(std::ostringstream& o, const char* prefix,
                   const std::array<double, 8>& e) {
  static const char* names[8] = {"e_x",  "e_v",  "e_qr", "e_wr",
                                 "e_q1", "e_w1", "e_q2", "e_w2"};
  for (int i = 0; i < 8; ++i)
    o << prefix << "_" << names[i] << " = " << fmt(e[i]) << "\n";
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  namespace fs = std::filesystem;
  const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  fs::create_directories(dir);
  const std::string trace_path = cfg.output_path.empty()
                                     ? (dir / "trace.csv").string()
                                     : cfg.output_path;
  const Trajectory traj = cfg.make_trajectory();

  std::ostringstream rep;
  bool pass = false;

  switch (cfg.mode) {
    case ExperimentConfig::Mode::track: {
      const auto t0 = std::chrono::steady_clock::now();
      TrackOptions opt;
      opt.attitude_loop = cfg.track_attitude_loop;
      const TrackResult r =
          run_reduced_tracking(traj, cfg.initial, cfg.gains, cfg.bounds,
                               cfg.params, cfg.integrator, cfg.controller,
                               opt);
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      write_trace_csv(trace_path, r.trace);

      bool err_ok = true;
      for (int i = 0; i < 8; ++i)
        err_ok = err_ok && r.final_errors[i] < cfg.track_error_max &&
                 r.final_errors[i] <
                     cfg.track_error_frac * r.initial_errors[i];
      const bool u_ok =
          r.u_min_tail >= (1.0 - cfg.track_u_band) * r.u_hover &&
          r.u_max_tail <= (1.0 + cfg.track_u_band) * r.u_hover;
      pass = err_ok && u_ok;

      rep << "mode = track\n";
      rep << "runtime_s = " << fmt(wall) << "\n";
      append_errors(rep, "initial", r.initial_errors);
      append_errors(rep, "final", r.final_errors);
      rep << "u_hover = " << fmt(r.u_hover) << "\n";
      rep << "u_min_tail = " << fmt(r.u_min_tail) << "\n";
      rep << "u_max_tail = " << fmt(r.u_max_tail) << "\n";
      rep << "u_in_band = " << (u_ok ? "true" : "false") << "\n";
      rep << "t_enter = " << fmt(r.t_enter) << "\n";
      rep << "v_enter = " << fmt(r.v_enter) << "\n";
      rep << "v_monotone = " << (r.v_monotone ? "true" : "false") << "\n";
      rep << "max_v_growth = " << fmt(r.max_v_growth) << "\n";
      rep << "max_unit_defect = " << fmt(r.max_unit_defect) << "\n";
      rep << "max_tangent_defect = " << fmt(r.max_tangent_defect) << "\n";
      rep << "max_rotation_defect = " << fmt(r.max_rotation_defect) << "\n";
      rep << "trace = " << trace_path << "\n";
      break;
    }

    case ExperimentConfig::Mode::sweep: {
      const SweepResult r =
          run_epsilon_sweep(traj, cfg.initial, cfg.gains, cfg.params,
                            cfg.sweep_epsilons, cfg.sweep_T, cfg.sweep_t1,
                            cfg.controller);
      std::ostringstream csv;
      csv << "epsilon,h_full,deviation\n";
      for (size_t i = 0; i < r.epsilons.size(); ++i)
        csv << fmt(r.epsilons[i]) << "," << fmt(r.h_full[i]) << ","
            << fmt(r.deviations[i]) << "\n";
      write_text((dir / "sweep.csv").string(), csv.str());

      bool ratio_ok = true;
      for (double q : r.ratios)
        ratio_ok = ratio_ok && q >= cfg.sweep_ratio_lo &&
                   q <= cfg.sweep_ratio_hi;
      size_t smallest = 0;
      for (size_t i = 1; i < r.epsilons.size(); ++i)
        if (r.epsilons[i] < r.epsilons[smallest]) smallest = i;
      const bool dev_ok = r.deviations[smallest] <
                          cfg.sweep_dev_frac * cfg.sweep_scale;
      pass = ratio_ok && dev_ok;

      rep << "mode = sweep\n";
      for (size_t i = 0; i < r.epsilons.size(); ++i) {
        rep << "deviation_eps_" << fmt(r.epsilons[i]) << " = "
            << fmt(r.deviations[i]) << "\n";
      }
      for (size_t i = 0; i < r.ratios.size(); ++i)
        rep << "ratio_" << i << " = " << fmt(r.ratios[i]) << "\n";
      rep << "ratios_in_band = " << (ratio_ok ? "true" : "false") << "\n";
      rep << "smallest_eps_deviation_ok = " << (dev_ok ? "true" : "false")
          << "\n";
      break;
    }

    case ExperimentConfig::Mode::disturb: {
      rep << "mode = disturb\n";
      try {
        const DisturbResult r =
            run_disturbance(traj, cfg.initial, cfg.gains, cfg.bounds,
                            cfg.params, cfg.integrator, cfg.controller,
                            cfg.seed);
        write_trace_csv(trace_path, r.trace);
        const bool enter_ok =
            r.t_enter <= cfg.disturb_enter_frac * cfg.integrator.T;
        const bool contain_ok =
            r.max_V_after <= cfg.disturb_contain_factor * r.d1;
        pass = enter_ok && contain_ok;
        rep << "d1 = " << fmt(r.d1) << "\n";
        rep << "rate = " << fmt(r.rate) << "\n";
        rep << "t_enter = " << fmt(r.t_enter) << "\n";
        rep << "max_V_after = " << fmt(r.max_V_after) << "\n";
        rep << "entered_in_time = " << (enter_ok ? "true" : "false") << "\n";
        rep << "contained = " << (contain_ok ? "true" : "false") << "\n";
        rep << "trace = " << trace_path << "\n";
      } catch (const NeverEnters& e) {
        pass = false;
        rep << "never_enters = true\n";
        rep << "detail = " << e.what() << "\n";
      }
      break;
    }

    case ExperimentConfig::Mode::certify: {
      const CertificationReport r =
          certify(cfg.gains, cfg.bounds, cfg.params);
      write_text((dir / "certification.txt").string(), r.serialize());
      pass = r.pass;
      rep << "mode = certify\n" << r.serialize();
      break;
    }

    case ExperimentConfig::Mode::synthesize: {
      rep << "mode = synthesize\n";
      try {
        const GainSet g = synthesize_gains(cfg.bounds, cfg.params,
                                           cfg.synth_target_lambda);
        const CertificationReport r = certify(g, cfg.bounds, cfg.params);
        std::ostringstream gtxt;
        gtxt << "k_x = " << fmt(g.k_x) << "\nk_v = " << fmt(g.k_v)
             << "\nk_qr = " << fmt(g.k_qr) << "\nk_wr = " << fmt(g.k_wr)
             << "\nk_q1 = " << fmt(g.k_q1) << "\nk_w1 = " << fmt(g.k_w1)
             << "\nk_q2 = " << fmt(g.k_q2) << "\nk_w2 = " << fmt(g.k_w2)
             << "\nc_x = " << fmt(g.c_x) << "\nc_qr = " << fmt(g.c_qr)
             << "\nc_q1 = " << fmt(g.c_q1) << "\nc_q2 = " << fmt(g.c_q2)
             << "\n";
        write_text((dir / "synthesis.txt").string(),
                   gtxt.str() + r.serialize());
        pass = r.pass && r.lambda_min_Wbar >= cfg.synth_target_lambda;
        rep << gtxt.str() << r.serialize();
      } catch (const SynthesisFailed& e) {
        pass = false;
        rep << "synthesis_failed = true\n";
        rep << "detail = " << e.what() << "\n";
      }
      break;
    }

    case ExperimentConfig::Mode::energy: {
      FullState fs;
      fs.x_r = cfg.initial.x_r;
      fs.v_r = cfg.initial.v_r;
      fs.q_r = cfg.initial.q_r;
      fs.w_r = cfg.initial.w_r;
      fs.q_c = cfg.initial.q_c;
      fs.w_c = cfg.initial.w_c;
      for (int j = 0; j < 2; ++j) {
        fs.l[j] = cfg.params.L_c;
        fs.ldot[j] = 0.0;
      }
      const EnergyResult r =
          run_energy_check(fs, cfg.params, cfg.integrator.h,
                           cfg.integrator.T);
      pass = r.max_rel_drift < cfg.energy_drift_max;
      rep << "mode = energy\n";
      rep << "E0 = " << fmt(r.E0) << "\n";
      rep << "max_rel_drift = " << fmt(r.max_rel_drift) << "\n";
      break;
    }
  }

  rep << "pass = " << (pass ? "true" : "false") << "\n";
  const std::string report = rep.str();
  write_text((dir / "report.txt").string(), report);
  std::cout << report;
  return pass ? 0 : 1;
}

}  // namespace barlift
