#include "barlift/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "barlift/errors.hpp"
#include "barlift/manifold.hpp"

namespace barlift {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt3(const Vec3& v) {
  return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z());
}

// Manifold cleanup for parsed initial-state fields. Skipping fields that
// are already on the manifold to machine precision keeps a parse ->
// serialize -> parse cycle bit-exact; unconditional renormalization would
// dither the last ulp on every pass.
Vec3 clean_unit(const Vec3& v) {
  if (std::abs(v.norm() - 1.0) <= 1e-12) return v;
  return renormalize_unit(v);
}

Vec3 clean_tangent(const Vec3& w, const Vec3& q) {
  if (std::abs(w.dot(q)) <= 1e-12 * std::max(1.0, w.norm())) return w;
  return tangent_project(w, q);
}

void clean_state(ReducedState& s) {
  s.q_r = clean_unit(s.q_r);
  s.w_r = clean_tangent(s.w_r, s.q_r);
  for (int j = 0; j < 2; ++j) {
    s.q_c[j] = clean_unit(s.q_c[j]);
    s.w_c[j] = clean_tangent(s.w_c[j], s.q_c[j]);
  }
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, int line) {
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  while (end && (*end == ' ' || *end == '\t')) ++end;
  if (end == v.c_str() || !end || *end != '\0')
    throw ParseError(line, "expected a number, got '" + v + "'");
  if (errno == ERANGE || !std::isfinite(d))
    throw ParseError(line, "number out of range: '" + v + "'");
  return d;
}

int to_int(const std::string& v, int line) {
  const double d = to_double(v, line);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d)
    throw ParseError(line, "expected an integer, got '" + v + "'");
  return i;
}

std::uint64_t to_u64(const std::string& v, int line) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || !end || *end != '\0' || errno == ERANGE ||
      v.find('-') != std::string::npos)
    throw ParseError(line, "expected an unsigned integer, got '" + v + "'");
  return u;
}

bool to_bool(const std::string& v, int line) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ParseError(line, "expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& v, int line) {
  std::vector<double> out;
  std::istringstream in(v);
  std::string tok;
  while (in >> tok) out.push_back(to_double(tok, line));
  if (out.empty()) throw ParseError(line, "expected at least one number");
  return out;
}

Vec3 to_vec3(const std::string& v, int line) {
  const std::vector<double> xs = to_list(v, line);
  if (xs.size() != 3)
    throw ParseError(line, "expected exactly three numbers, got '" + v + "'");
  return Vec3(xs[0], xs[1], xs[2]);
}

void apply(ExperimentConfig& c, const std::string& k, const std::string& v,
           int line) {
  using Mode = ExperimentConfig::Mode;
  using TrajKind = ExperimentConfig::TrajKind;

  if (k == "mode") {
    if (v == "track") c.mode = Mode::track;
    else if (v == "sweep") c.mode = Mode::sweep;
    else if (v == "disturb") c.mode = Mode::disturb;
    else if (v == "certify") c.mode = Mode::certify;
    else if (v == "synthesize") c.mode = Mode::synthesize;
    else if (v == "energy") c.mode = Mode::energy;
    else throw ParseError(line, "unknown mode '" + v + "'");
    return;
  }

  if (k == "params.m_Q") { c.params.m_Q = to_double(v, line); return; }
  if (k == "params.m_r") { c.params.m_r = to_double(v, line); return; }
  if (k == "params.L_r") { c.params.L_r = to_double(v, line); return; }
  if (k == "params.L_c") { c.params.L_c = to_double(v, line); return; }
  if (k == "params.J_Q") {
    c.params.J_Q = to_vec3(v, line).asDiagonal();
    return;
  }
  if (k == "params.g") { c.params.g = to_double(v, line); return; }
  if (k == "params.k_bar") { c.params.k_bar = to_double(v, line); return; }
  if (k == "params.c_bar") { c.params.c_bar = to_double(v, line); return; }
  if (k == "params.epsilon") { c.params.epsilon = to_double(v, line); return; }

  if (k == "gains.k_x") { c.gains.k_x = to_double(v, line); return; }
  if (k == "gains.k_v") { c.gains.k_v = to_double(v, line); return; }
  if (k == "gains.k_qr") { c.gains.k_qr = to_double(v, line); return; }
  if (k == "gains.k_wr") { c.gains.k_wr = to_double(v, line); return; }
  if (k == "gains.k_q1") { c.gains.k_q1 = to_double(v, line); return; }
  if (k == "gains.k_w1") { c.gains.k_w1 = to_double(v, line); return; }
  if (k == "gains.k_q2") { c.gains.k_q2 = to_double(v, line); return; }
  if (k == "gains.k_w2") { c.gains.k_w2 = to_double(v, line); return; }
  if (k == "gains.k_R") { c.gains.k_R = to_double(v, line); return; }
  if (k == "gains.k_Om") { c.gains.k_Om = to_double(v, line); return; }
  if (k == "gains.c_x") { c.gains.c_x = to_double(v, line); return; }
  if (k == "gains.c_qr") { c.gains.c_qr = to_double(v, line); return; }
  if (k == "gains.c_q1") { c.gains.c_q1 = to_double(v, line); return; }
  if (k == "gains.c_q2") { c.gains.c_q2 = to_double(v, line); return; }

  if (k == "bounds.psi_r") { c.bounds.psi_r = to_double(v, line); return; }
  if (k == "bounds.psi_1") { c.bounds.psi_1 = to_double(v, line); return; }
  if (k == "bounds.psi_2") { c.bounds.psi_2 = to_double(v, line); return; }
  if (k == "bounds.e_x_bar") { c.bounds.e_x_bar = to_double(v, line); return; }
  if (k == "bounds.e_v_bar") { c.bounds.e_v_bar = to_double(v, line); return; }
  if (k == "bounds.e_w_bar") { c.bounds.e_w_bar = to_double(v, line); return; }
  if (k == "bounds.C") { c.bounds.C = to_double(v, line); return; }
  if (k == "bounds.C_qr") { c.bounds.C_qr = to_double(v, line); return; }
  if (k == "bounds.C_q1") { c.bounds.C_q1 = to_double(v, line); return; }
  if (k == "bounds.C_q2") { c.bounds.C_q2 = to_double(v, line); return; }
  if (k == "bounds.delta_x_r") {
    c.bounds.delta_x_r = to_double(v, line);
    return;
  }
  if (k == "bounds.delta_q_r") {
    c.bounds.delta_q_r = to_double(v, line);
    return;
  }
  if (k == "bounds.delta_q_c") {
    c.bounds.delta_q_c = to_double(v, line);
    return;
  }
  if (k == "bounds.eps_young") {
    c.bounds.eps_young = to_double(v, line);
    return;
  }

  if (k == "trajectory") {
    if (v == "lissajous") c.trajectory = TrajKind::lissajous;
    else if (v == "hover") c.trajectory = TrajKind::hover;
    else throw ParseError(line, "unknown trajectory '" + v + "'");
    return;
  }
  if (k == "trajectory.hover_x") { c.hover_x = to_vec3(v, line); return; }
  if (k == "trajectory.hover_q_r") { c.hover_q_r = to_vec3(v, line); return; }

  if (k == "initial.x_r") { c.initial.x_r = to_vec3(v, line); return; }
  if (k == "initial.v_r") { c.initial.v_r = to_vec3(v, line); return; }
  if (k == "initial.q_r") { c.initial.q_r = to_vec3(v, line); return; }
  if (k == "initial.w_r") { c.initial.w_r = to_vec3(v, line); return; }
  if (k == "initial.q_1") { c.initial.q_c[0] = to_vec3(v, line); return; }
  if (k == "initial.w_1") { c.initial.w_c[0] = to_vec3(v, line); return; }
  if (k == "initial.q_2") { c.initial.q_c[1] = to_vec3(v, line); return; }
  if (k == "initial.w_2") { c.initial.w_c[1] = to_vec3(v, line); return; }

  if (k == "integrator.method") {
    if (v == "euler") c.integrator.method = IntegratorConfig::Method::euler;
    else if (v == "rk4") c.integrator.method = IntegratorConfig::Method::rk4;
    else throw ParseError(line, "unknown integrator method '" + v + "'");
    return;
  }
  if (k == "integrator.h") { c.integrator.h = to_double(v, line); return; }
  if (k == "integrator.T") { c.integrator.T = to_double(v, line); return; }
  if (k == "integrator.renormalize_every") {
    c.integrator.renormalize_every = to_int(v, line);
    return;
  }

  if (k == "controller.fd_step") {
    c.controller.fd_step = to_double(v, line);
    return;
  }
  if (k == "controller.flip_thrust_sign") {
    c.controller.flip_thrust_sign = to_bool(v, line);
    return;
  }

  if (k == "seed") { c.seed = to_u64(v, line); return; }
  if (k == "output") { c.output_path = v; return; }

  if (k == "sweep.epsilons") { c.sweep_epsilons = to_list(v, line); return; }
  if (k == "sweep.T") { c.sweep_T = to_double(v, line); return; }
  if (k == "sweep.t1") { c.sweep_t1 = to_double(v, line); return; }
  if (k == "sweep.ratio_lo") { c.sweep_ratio_lo = to_double(v, line); return; }
  if (k == "sweep.ratio_hi") { c.sweep_ratio_hi = to_double(v, line); return; }
  if (k == "sweep.dev_frac") { c.sweep_dev_frac = to_double(v, line); return; }
  if (k == "sweep.scale") { c.sweep_scale = to_double(v, line); return; }

  if (k == "track.attitude_loop") {
    c.track_attitude_loop = to_bool(v, line);
    return;
  }
  if (k == "track.error_max") { c.track_error_max = to_double(v, line); return; }
  if (k == "track.error_frac") {
    c.track_error_frac = to_double(v, line);
    return;
  }
  if (k == "track.u_band") { c.track_u_band = to_double(v, line); return; }

  if (k == "disturb.contain_factor") {
    c.disturb_contain_factor = to_double(v, line);
    return;
  }
  if (k == "disturb.enter_frac") {
    c.disturb_enter_frac = to_double(v, line);
    return;
  }

  if (k == "energy.drift_max") {
    c.energy_drift_max = to_double(v, line);
    return;
  }
  if (k == "synthesize.target_lambda") {
    c.synth_target_lambda = to_double(v, line);
    return;
  }

  throw ValidationError(k, "unknown key");
}

void require(bool ok, const std::string& key, const std::string& reason) {
  if (!ok) throw ValidationError(key, reason);
}

}  // namespace

ReducedState benchmark_initial_state() {
  ReducedState s;
  s.x_r = Vec3(1.0, 4.9, -1.0);
  s.v_r = Vec3(1.2, 0.55, 0.15);
  s.q_r = renormalize_unit(Vec3(0.24, 0.97, -0.1));
  s.w_r = tangent_project(Vec3(0.1, -0.1, 0.0), s.q_r);
  s.q_c[0] = renormalize_unit(Vec3(0.53, 0.63, -0.56));
  s.q_c[1] = renormalize_unit(Vec3(0.48, 0.67, -0.56));
  s.w_c[0].setZero();
  s.w_c[1].setZero();
  return s;
}

Trajectory ExperimentConfig::make_trajectory() const {
  if (trajectory == TrajKind::lissajous) return lissajous_trajectory();
  return hover_trajectory(hover_x, hover_q_r);
}

void ExperimentConfig::validate() const {
  params.validate();
  gains.validate();
  bounds.validate();
  integrator.validate();
  require(controller.fd_step > 0.0, "controller.fd_step",
          "must be positive");
  require(!sweep_epsilons.empty(), "sweep.epsilons",
          "need at least one value");
  for (double e : sweep_epsilons)
    require(e > 0.0 && e <= 0.5, "sweep.epsilons",
            "values must lie in (0, 0.5]");
  require(sweep_T > 0.0, "sweep.T", "must be positive");
  require(sweep_t1 >= 0.0 && sweep_t1 < sweep_T, "sweep.t1",
          "must lie in [0, sweep.T)");
  require(sweep_ratio_lo > 0.0 && sweep_ratio_lo < sweep_ratio_hi,
          "sweep.ratio_lo", "band must be positive and ordered");
  require(sweep_dev_frac > 0.0, "sweep.dev_frac", "must be positive");
  require(sweep_scale > 0.0, "sweep.scale", "must be positive");
  require(track_error_max > 0.0, "track.error_max", "must be positive");
  require(track_error_frac > 0.0, "track.error_frac", "must be positive");
  require(track_u_band > 0.0 && track_u_band < 1.0, "track.u_band",
          "must lie in (0, 1)");
  require(disturb_contain_factor >= 1.0, "disturb.contain_factor",
          "must be at least 1");
  require(disturb_enter_frac > 0.0 && disturb_enter_frac <= 1.0,
          "disturb.enter_frac", "must lie in (0, 1]");
  require(energy_drift_max > 0.0, "energy.drift_max", "must be positive");
  require(synth_target_lambda > 0.0, "synthesize.target_lambda",
          "must be positive");
  initial.validate();
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const size_t hash = s.find('#');
    if (hash != std::string::npos) s.erase(hash);
    s = trim(s);
    if (s.empty()) continue;
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ParseError(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (key.empty()) throw ParseError(line, "missing key");
    apply(cfg, key, val, line);
  }

  try {
    cfg.hover_q_r = clean_unit(cfg.hover_q_r);
    clean_state(cfg.initial);
  } catch (const Error& e) {
    throw ValidationError("initial",
                          std::string("not renormalizable: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize(const ExperimentConfig& c) {
  using Mode = ExperimentConfig::Mode;
  std::ostringstream o;
  const char* mode = c.mode == Mode::track      ? "track"
                     : c.mode == Mode::sweep    ? "sweep"
                     : c.mode == Mode::disturb  ? "disturb"
                     : c.mode == Mode::certify  ? "certify"
                     : c.mode == Mode::synthesize ? "synthesize"
                                                  : "energy";
  o << "mode = " << mode << "\n";

  o << "params.m_Q = " << fmt(c.params.m_Q) << "\n";
  o << "params.m_r = " << fmt(c.params.m_r) << "\n";
  o << "params.L_r = " << fmt(c.params.L_r) << "\n";
  o << "params.L_c = " << fmt(c.params.L_c) << "\n";
  o << "params.J_Q = " << fmt3(c.params.J_Q.diagonal()) << "\n";
  o << "params.g = " << fmt(c.params.g) << "\n";
  o << "params.k_bar = " << fmt(c.params.k_bar) << "\n";
  o << "params.c_bar = " << fmt(c.params.c_bar) << "\n";
  o << "params.epsilon = " << fmt(c.params.epsilon) << "\n";

  o << "gains.k_x = " << fmt(c.gains.k_x) << "\n";
  o << "gains.k_v = " << fmt(c.gains.k_v) << "\n";
  o << "gains.k_qr = " << fmt(c.gains.k_qr) << "\n";
  o << "gains.k_wr = " << fmt(c.gains.k_wr) << "\n";
  o << "gains.k_q1 = " << fmt(c.gains.k_q1) << "\n";
  o << "gains.k_w1 = " << fmt(c.gains.k_w1) << "\n";
  o << "gains.k_q2 = " << fmt(c.gains.k_q2) << "\n";
  o << "gains.k_w2 = " << fmt(c.gains.k_w2) << "\n";
  o << "gains.k_R = " << fmt(c.gains.k_R) << "\n";
  o << "gains.k_Om = " << fmt(c.gains.k_Om) << "\n";
  o << "gains.c_x = " << fmt(c.gains.c_x) << "\n";
  o << "gains.c_qr = " << fmt(c.gains.c_qr) << "\n";
  o << "gains.c_q1 = " << fmt(c.gains.c_q1) << "\n";
  o << "gains.c_q2 = " << fmt(c.gains.c_q2) << "\n";

  o << "bounds.psi_r = " << fmt(c.bounds.psi_r) << "\n";
  o << "bounds.psi_1 = " << fmt(c.bounds.psi_1) << "\n";
  o << "bounds.psi_2 = " << fmt(c.bounds.psi_2) << "\n";
  o << "bounds.e_x_bar = " << fmt(c.bounds.e_x_bar) << "\n";
  o << "bounds.e_v_bar = " << fmt(c.bounds.e_v_bar) << "\n";
  o << "bounds.e_w_bar = " << fmt(c.bounds.e_w_bar) << "\n";
  o << "bounds.C = " << fmt(c.bounds.C) << "\n";
  o << "bounds.C_qr = " << fmt(c.bounds.C_qr) << "\n";
  o << "bounds.C_q1 = " << fmt(c.bounds.C_q1) << "\n";
  o << "bounds.C_q2 = " << fmt(c.bounds.C_q2) << "\n";
  o << "bounds.delta_x_r = " << fmt(c.bounds.delta_x_r) << "\n";
  o << "bounds.delta_q_r = " << fmt(c.bounds.delta_q_r) << "\n";
  o << "bounds.delta_q_c = " << fmt(c.bounds.delta_q_c) << "\n";
  o << "bounds.eps_young = " << fmt(c.bounds.eps_young) << "\n";

  o << "trajectory = "
    << (c.trajectory == ExperimentConfig::TrajKind::lissajous ? "lissajous"
                                                              : "hover")
    << "\n";
  o << "trajectory.hover_x = " << fmt3(c.hover_x) << "\n";
  o << "trajectory.hover_q_r = " << fmt3(c.hover_q_r) << "\n";

  o << "initial.x_r = " << fmt3(c.initial.x_r) << "\n";
  o << "initial.v_r = " << fmt3(c.initial.v_r) << "\n";
  o << "initial.q_r = " << fmt3(c.initial.q_r) << "\n";
  o << "initial.w_r = " << fmt3(c.initial.w_r) << "\n";
  o << "initial.q_1 = " << fmt3(c.initial.q_c[0]) << "\n";
  o << "initial.w_1 = " << fmt3(c.initial.w_c[0]) << "\n";
  o << "initial.q_2 = " << fmt3(c.initial.q_c[1]) << "\n";
  o << "initial.w_2 = " << fmt3(c.initial.w_c[1]) << "\n";

  o << "integrator.method = "
    << (c.integrator.method == IntegratorConfig::Method::euler ? "euler"
                                                               : "rk4")
    << "\n";
  o << "integrator.h = " << fmt(c.integrator.h) << "\n";
  o << "integrator.T = " << fmt(c.integrator.T) << "\n";
  o << "integrator.renormalize_every = " << c.integrator.renormalize_every
    << "\n";

  o << "controller.fd_step = " << fmt(c.controller.fd_step) << "\n";
  o << "controller.flip_thrust_sign = "
    << (c.controller.flip_thrust_sign ? "true" : "false") << "\n";

  o << "seed = " << c.seed << "\n";
  o << "output = " << c.output_path << "\n";

  o << "sweep.epsilons =";
  for (double e : c.sweep_epsilons) o << " " << fmt(e);
  o << "\n";
  o << "sweep.T = " << fmt(c.sweep_T) << "\n";
  o << "sweep.t1 = " << fmt(c.sweep_t1) << "\n";
  o << "sweep.ratio_lo = " << fmt(c.sweep_ratio_lo) << "\n";
  o << "sweep.ratio_hi = " << fmt(c.sweep_ratio_hi) << "\n";
  o << "sweep.dev_frac = " << fmt(c.sweep_dev_frac) << "\n";
  o << "sweep.scale = " << fmt(c.sweep_scale) << "\n";

  o << "track.attitude_loop = " << (c.track_attitude_loop ? "true" : "false")
    << "\n";
  o << "track.error_max = " << fmt(c.track_error_max) << "\n";
  o << "track.error_frac = " << fmt(c.track_error_frac) << "\n";
  o << "track.u_band = " << fmt(c.track_u_band) << "\n";

  o << "disturb.contain_factor = " << fmt(c.disturb_contain_factor) << "\n";
  o << "disturb.enter_frac = " << fmt(c.disturb_enter_frac) << "\n";
  o << "energy.drift_max = " << fmt(c.energy_drift_max) << "\n";
  o << "synthesize.target_lambda = " << fmt(c.synth_target_lambda) << "\n";
  return o.str();
}

}  // namespace barlift
