#pragma once

#include <optional>
#include <string>
#include <vector>

#include "barlift/control.hpp"
#include "barlift/state.hpp"
#include "barlift/trajectory.hpp"

namespace barlift {

// Domain and disturbance bounds under which gains are certified. The psi
// caps define the attitude-error region, the alphas are derived from them,
// and C / C_q bound the feedforward magnitudes along the trajectory.
struct BoundSet {
  double psi_r = 0.1;
  double psi_1 = 0.005;
  double psi_2 = 0.005;
  double e_x_bar = 0.3;  // caps on |e_x|, |e_v|, |e_w| inside the domain
  double e_v_bar = 1.0;
  double e_w_bar = 1.0;
  double C = 1.25;     // bound on the virtual-control feedforward, N
  double C_qr = 0.0;  // bounds on twice the desired angular rates, rad/s
  double C_q1 = 0.6;
  double C_q2 = 0.6;
  double delta_x_r = 0.0;  // disturbance bounds
  double delta_q_r = 0.0;
  double delta_q_c = 0.0;
  double eps_young = 0.01;

  double alpha_j(int j) const {
    const double psi = j == 0 ? psi_1 : psi_2;
    return std::sqrt(psi * (2.0 - psi));
  }
  double alpha() const { return 2.0 * std::max(alpha_j(0), alpha_j(1)); }
  double alpha_r() const { return std::sqrt(psi_r * (2.0 - psi_r)); }

  void validate() const;  // throws ValidationError
};

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
// ascending. Deterministic and dependency-free; intended for the small
// matrices of the certification problem.
Eigen::VectorXd jacobi_eigenvalues(const Eigen::MatrixXd& S,
                                   double tol = 1e-12);

// Quadratic bounds on the Lyapunov candidate: 0.5 z' P_lo z <= V <=
// 0.5 z' P_hi z over the bounded domain.
struct PMats {
  Eigen::Matrix<double, 8, 8> P_lo;
  Eigen::Matrix<double, 8, 8> P_hi;
};

PMats build_P(const GainSet& g, const BoundSet& b);

// The decrease-rate matrices: 2x2 blocks, the two per-cable 6x6 matrices,
// and the assembled symmetric 8x8. The 8x8 carries one copy of the shared
// rod blocks (each cable's embedding contributes half) and both cables'
// blocks at full weight.
struct WBlocks {
  Eigen::Matrix2d W_xr, W_qr, W_q1, W_q2;
  Eigen::Matrix2d W_xr_qr;            // coupling, not symmetric
  Eigen::Matrix2d W_xr_qj, W_qr_qj;   // identical for both cables
  std::array<Eigen::Matrix<double, 6, 6>, 2> W6;
  Eigen::Matrix<double, 8, 8> Wbar;
};

WBlocks build_W(const GainSet& g, const BoundSet& b, const Params& p);

// Positive-definiteness by sequential Schur-complement elimination over a
// block partition, from the last block toward the first. failed_condition
// counts elimination stages from the tail (0 when positive-definite);
// lambda_lower is a certified lower bound on the least eigenvalue obtained
// by bisecting the same test on W - s I.
struct SchurResult {
  bool pd = false;
  int failed_stage = 0;
  double lambda_lower = 0.0;
};

SchurResult check_pd_schur(const Eigen::MatrixXd& W,
                           const std::vector<int>& block_sizes);

struct CertificationReport {
  bool pass = false;
  double lambda_min_Wbar = 0.0;
  double lambda_max_Phi = 0.0;
  double lambda_min_Plo = 0.0;
  double rate = 0.0;  // lambda_min(Wbar) / lambda_max(P_hi)
  double d1 = 0.0;    // ultimate bound; 0 when no disturbances configured
  // 0 when certified; otherwise the failed proof condition: 1 = a cable
  // block, 2 = the rod-attitude complement, 3 = the translation complement.
  int failed_condition = 0;

  std::string serialize() const;  // flat key=value block
};

// Certifies a gain set on the given domain: the 8x8 assembly and both
// per-cable 6x6 matrices must all pass, and the P bounds must be
// positive-definite. When disturbance bounds are present, d1 is filled in
// via ultimate_bound.
CertificationReport certify(const GainSet& g, const BoundSet& b,
                            const Params& p);

// Constructive gain synthesis following the stability proof: cable gains
// first (k_q = k_w / c_q), then the rod-attitude gain from its closed-form
// choice, then the translation block, checked as a whole at each candidate.
// Deterministic: first success in a fixed geometric schedule. Throws
// SynthesisFailed when the schedule exhausts (or immediately when
// alpha > 0.5, where the rod complement is provably out of reach for this
// schedule).
GainSet synthesize_gains(const BoundSet& b, const Params& p,
                         double target_lambda);

struct UltimateBound {
  double d1 = 0.0;
  double rate = 0.0;
};

// Disturbance ultimate bound: trajectories converge exponentially at `rate`
// to the V-sublevel set of height d1. Throws NotContracting when the
// decrease margin cannot absorb the Young's-inequality split.
UltimateBound ultimate_bound(const GainSet& g, const BoundSet& b,
                             const Params& p);

// Sup bounds on the feedforward magnitudes measured along the closed-loop
// desired signals of a trajectory (sampled, with a safety margin). Fills
// C, C_qr, C_q1, C_q2 of `seed` and returns it.
BoundSet estimate_bounds(const Trajectory& traj, const GainSet& g,
                         const Params& p, BoundSet seed, double T,
                         int samples = 1000, double margin = 0.1);

// Searches admissible Lyapunov constants (c_x, c_qr, c_q1, c_q2) and psi
// caps under which the given gains certify. Returns the first success of a
// deterministic grid, or nullopt.
std::optional<std::pair<GainSet, BoundSet>> find_admissible_constants(
    const GainSet& gains, const BoundSet& seed, const Params& p);

}  // namespace barlift
