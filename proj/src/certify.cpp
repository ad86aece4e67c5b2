#include "barlift/certify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "barlift/errors.hpp"
#include "barlift/manifold.hpp"

namespace barlift {

namespace {

void require(bool ok, const std::string& key, const std::string& reason) {
  if (!ok) throw ValidationError(key, reason);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Positive definiteness of a small symmetric matrix by a bare Cholesky
// attempt. Kept free of eigenvalue machinery on purpose: the eigensolver
// is the independent cross-check in the tests.
bool sym_pd(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double d = A(j, j);
    for (int k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!(d > 0.0)) return false;
    L(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = A(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  return true;
}

// Sequential Schur elimination from the last block toward the first.
// Returns 0 when every stage stays positive-definite, otherwise the
// 1-based stage index counted from the tail.
int schur_stages(Eigen::MatrixXd A, const std::vector<int>& bs) {
  const int nb = static_cast<int>(bs.size());
  std::vector<int> off(nb, 0);
  for (int k = 1; k < nb; ++k) off[k] = off[k - 1] + bs[k - 1];
  for (int k = nb - 1; k >= 1; --k) {
    const int o = off[k];
    const int sz = bs[k];
    Eigen::MatrixXd D = A.block(o, o, sz, sz);
    if (!sym_pd(D)) return nb - k;
    Eigen::MatrixXd B = A.block(0, o, o, sz);
    A.topLeftCorner(o, o) -= B * D.inverse() * B.transpose();
    A.topLeftCorner(o, o) =
        (0.5 * (A.topLeftCorner(o, o) + A.topLeftCorner(o, o).transpose()))
            .eval();
  }
  if (!sym_pd(A.topLeftCorner(bs[0], bs[0]))) return nb;
  return 0;
}

}  // namespace

void BoundSet::validate() const {
  require(psi_r > 0.0 && psi_r < 1.0, "bounds.psi_r", "must lie in (0, 1)");
  require(psi_1 > 0.0 && psi_1 < 1.0, "bounds.psi_1", "must lie in (0, 1)");
  require(psi_2 > 0.0 && psi_2 < 1.0, "bounds.psi_2", "must lie in (0, 1)");
  require(e_x_bar > 0.0, "bounds.e_x_bar", "must be positive");
  require(e_v_bar > 0.0, "bounds.e_v_bar", "must be positive");
  require(e_w_bar > 0.0, "bounds.e_w_bar", "must be positive");
  require(C >= 0.0, "bounds.C", "must be nonnegative");
  require(C_qr >= 0.0, "bounds.C_qr", "must be nonnegative");
  require(C_q1 >= 0.0, "bounds.C_q1", "must be nonnegative");
  require(C_q2 >= 0.0, "bounds.C_q2", "must be nonnegative");
  require(delta_x_r >= 0.0, "bounds.delta_x_r", "must be nonnegative");
  require(delta_q_r >= 0.0, "bounds.delta_q_r", "must be nonnegative");
  require(delta_q_c >= 0.0, "bounds.delta_q_c", "must be nonnegative");
  require(eps_young > 0.0, "bounds.eps_young", "must be positive");
}

Eigen::VectorXd jacobi_eigenvalues(const Eigen::MatrixXd& S, double tol) {
  if (S.rows() != S.cols())
    throw ValidationError("matrix", "must be square");
  if ((S - S.transpose()).norm() > 1e-9 * (1.0 + S.norm()))
    throw ValidationError("matrix", "must be symmetric");
  Eigen::MatrixXd A = 0.5 * (S + S.transpose());
  const int n = static_cast<int>(A.rows());
  const double scale = std::max(A.norm(), 1e-300);

  auto off_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += 2.0 * A(i, j) * A(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && off_norm() > tol * scale; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (std::abs(apq) <= 0.1 * tol * scale / n) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t =
            (theta >= 0.0 ? 1.0 : -1.0) /
            (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double app = A(p, p), aqq = A(q, q);
        A(p, p) = c * c * app - 2.0 * s * c * apq + s * s * aqq;
        A(q, q) = s * s * app + 2.0 * s * c * apq + c * c * aqq;
        A(p, q) = A(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = A(p, k) = c * akp - s * akq;
          A(k, q) = A(q, k) = s * akp + c * akq;
        }
      }
    }
  }

  Eigen::VectorXd ev = A.diagonal();
  std::sort(ev.data(), ev.data() + n);
  return ev;
}

PMats build_P(const GainSet& g, const BoundSet& b) {
  b.validate();
  PMats P;
  P.P_lo.setZero();
  P.P_hi.setZero();
  const double ks[4] = {g.k_x, g.k_qr, g.k_q1, g.k_q2};
  const double cs[4] = {g.c_x, g.c_qr, g.c_q1, g.c_q2};
  const double psis[4] = {0.0, b.psi_r, b.psi_1, b.psi_2};
  for (int i = 0; i < 4; ++i) {
    Eigen::Matrix2d lo, hi;
    lo << ks[i], -cs[i], -cs[i], 1.0;
    const double k_hi = i == 0 ? ks[i] : 2.0 * ks[i] / (2.0 - psis[i]);
    hi << k_hi, cs[i], cs[i], 1.0;
    P.P_lo.block<2, 2>(2 * i, 2 * i) = lo;
    P.P_hi.block<2, 2>(2 * i, 2 * i) = hi;
  }
  return P;
}

WBlocks build_W(const GainSet& g, const BoundSet& b, const Params& p) {
  b.validate();
  const double al = b.alpha();
  const double al_r = b.alpha_r();
  const double Ir = p.I_r();
  WBlocks W;

  W.W_xr << g.c_x * (1.0 - al) * g.k_x,
      -0.5 * (1.0 + al) * g.c_x * g.k_v,
      -0.5 * (1.0 + al) * g.c_x * g.k_v, (1.0 - al) * g.k_v - g.c_x;

  const double Cq2 = b.C_qr * b.C_qr;
  W.W_qr << (1.0 - al) * g.c_qr * g.k_qr,
      -0.5 * g.c_qr * ((1.0 + al) * g.k_wr + b.C_qr + al * Cq2),
      -0.5 * g.c_qr * ((1.0 + al) * g.k_wr + b.C_qr + al * Cq2),
      (1.0 - al) * g.k_wr - g.c_qr - al * Cq2;

  const double Cqs[2] = {b.C_q1, b.C_q2};
  Eigen::Matrix2d* Wq[2] = {&W.W_q1, &W.W_q2};
  for (int j = 0; j < 2; ++j) {
    const double kq = g.k_q(j), kw = g.k_w(j), cq = g.c_q(j);
    *Wq[j] << cq * kq, -0.5 * cq * (kw + Cqs[j]), -0.5 * cq * (kw + Cqs[j]),
        kw - cq;
  }

  const double rI = Ir / p.m_r;
  const double rM = p.m_r / Ir;
  W.W_xr_qr << rI * g.c_x * g.k_qr + rM * g.c_qr * g.k_x,
      rI * g.c_x * (Cq2 + g.k_wr) + rM * g.k_x,
      rI * g.k_qr + rM * g.c_qr * g.k_v, rI * (Cq2 + g.k_wr) + rM * g.k_v;
  W.W_xr_qr *= al;

  W.W_xr_qj << g.c_x * b.C, 0.0, b.C + p.m_r * g.k_x * b.e_x_bar, 0.0;
  W.W_xr_qj /= p.m_r;

  W.W_qr_qj << g.c_qr * b.C, 0.0, b.C + Ir * g.k_qr * al_r, 0.0;
  W.W_qr_qj /= Ir;

  for (int j = 0; j < 2; ++j) {
    Eigen::Matrix<double, 6, 6> M = Eigen::Matrix<double, 6, 6>::Zero();
    M.block<2, 2>(0, 0) = W.W_xr;
    M.block<2, 2>(2, 2) = W.W_qr;
    M.block<2, 2>(4, 4) = *Wq[j];
    M.block<2, 2>(0, 2) = -0.5 * W.W_xr_qr;
    M.block<2, 2>(0, 4) = -0.5 * W.W_xr_qj;
    M.block<2, 2>(2, 4) = -0.5 * W.W_qr_qj;
    W.W6[j] = 0.5 * (M + M.transpose());
  }

  // Both cables share the translation and rod-attitude channels, so the
  // joint matrix carries those blocks once and the cable blocks in full.
  Eigen::Matrix<double, 8, 8> M8 = Eigen::Matrix<double, 8, 8>::Zero();
  M8.block<2, 2>(0, 0) = W.W_xr;
  M8.block<2, 2>(2, 2) = W.W_qr;
  M8.block<2, 2>(0, 2) = -0.5 * W.W_xr_qr;
  for (int j = 0; j < 2; ++j) {
    M8.block<2, 2>(4 + 2 * j, 4 + 2 * j) = *Wq[j];
    M8.block<2, 2>(0, 4 + 2 * j) = -0.5 * W.W_xr_qj;
    M8.block<2, 2>(2, 4 + 2 * j) = -0.5 * W.W_qr_qj;
  }
  W.Wbar = 0.5 * (M8 + M8.transpose());
  return W;
}

SchurResult check_pd_schur(const Eigen::MatrixXd& W,
                           const std::vector<int>& block_sizes) {
  int total = 0;
  for (int b : block_sizes) {
    require(b > 0, "block_sizes", "entries must be positive");
    total += b;
  }
  require(total == W.rows() && W.rows() == W.cols(), "block_sizes",
          "partition must cover the matrix");
  if ((W - W.transpose()).norm() > 1e-9 * (1.0 + W.norm()))
    throw ValidationError("matrix", "must be symmetric");
  const Eigen::MatrixXd A = 0.5 * (W + W.transpose());
  const int n = static_cast<int>(A.rows());

  SchurResult r;
  r.failed_stage = schur_stages(A, block_sizes);
  r.pd = r.failed_stage == 0;

  // Bisection on s with W - s I tested by the same elimination gives a
  // certified lower bound on the least eigenvalue. lo always keeps the
  // invariant "W - lo I is positive-definite" (Gershgorin seeds it).
  double lo = -(A.cwiseAbs().rowwise().sum().maxCoeff() + 1.0);
  double hi = A.diagonal().minCoeff();
  if (hi <= lo) hi = lo + 1.0;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (schur_stages(A - mid * I, block_sizes) == 0)
      lo = mid;
    else
      hi = mid;
  }
  r.lambda_lower = lo;
  return r;
}

CertificationReport certify(const GainSet& g, const BoundSet& b,
                            const Params& p) {
  g.validate();
  b.validate();
  p.validate();
  const PMats P = build_P(g, b);
  const WBlocks W = build_W(g, b, p);

  CertificationReport r;
  const Eigen::VectorXd ev_lo = jacobi_eigenvalues(P.P_lo);
  const Eigen::VectorXd ev_hi = jacobi_eigenvalues(P.P_hi);
  r.lambda_min_Plo = ev_lo(0);
  r.lambda_max_Phi = ev_hi(ev_hi.size() - 1);
  r.lambda_min_Wbar = jacobi_eigenvalues(W.Wbar)(0);

  const SchurResult s8 = check_pd_schur(W.Wbar, {2, 2, 2, 2});
  const SchurResult s6[2] = {check_pd_schur(W.W6[0], {2, 2, 2}),
                             check_pd_schur(W.W6[1], {2, 2, 2})};

  r.pass = s8.pd && s6[0].pd && s6[1].pd && r.lambda_min_Plo > 0.0;
  if (!r.pass) {
    // Map an elimination stage to its proof condition. In the joint matrix
    // the first two stages are both cable blocks.
    if (!s8.pd)
      r.failed_condition = std::max(1, s8.failed_stage - 1);
    else if (!s6[0].pd)
      r.failed_condition = s6[0].failed_stage;
    else if (!s6[1].pd)
      r.failed_condition = s6[1].failed_stage;
    else
      r.failed_condition = 1;
  }
  if (r.pass) {
    r.rate = r.lambda_min_Wbar / r.lambda_max_Phi;
    if (b.delta_x_r > 0.0 || b.delta_q_r > 0.0 || b.delta_q_c > 0.0) {
      if (r.lambda_min_Wbar > b.eps_young)
        r.d1 = ultimate_bound(g, b, p).d1;
    }
  }
  return r;
}

std::string CertificationReport::serialize() const {
  std::ostringstream out;
  out << "verdict=" << (pass ? "pass" : "fail") << "\n";
  out << "lambda_min_W=" << fmt(lambda_min_Wbar) << "\n";
  out << "lambda_max_P_upper=" << fmt(lambda_max_Phi) << "\n";
  out << "lambda_min_P_lower=" << fmt(lambda_min_Plo) << "\n";
  out << "rate=" << fmt(rate) << "\n";
  out << "d1=" << fmt(d1) << "\n";
  out << "failed_condition=" << failed_condition << "\n";
  return out.str();
}

GainSet synthesize_gains(const BoundSet& b, const Params& p,
                         double target_lambda) {
  b.validate();
  p.validate();
  const double al = b.alpha();
  if (al > 0.5)
    throw SynthesisFailed("alpha=" + fmt(al) +
                          " exceeds 0.5; the rod-attitude complement cannot "
                          "be made positive-definite by gain escalation");

  const double c_q_grid[] = {1.0, 0.5, 0.25, 0.125, 0.0625};
  const double c_qr_grid[] = {0.5, 0.25, 0.125, 0.0625};
  const double k_qr_grid[] = {2.0, 4.0, 8.0, 16.0, 32.0};
  const double c_x_grid[] = {1.0, 0.5, 0.25};
  const double k_x_grid[] = {9.0, 18.0, 36.0, 72.0};
  const double k_v_grid[] = {6.0, 12.0, 24.0, 48.0};

  double best_lambda = -1e300;
  int last_failed = 0;

  // Escalate the cable angular gain geometrically; inside one escalation
  // level take candidates in a fixed order so the result is deterministic.
  for (int m = 0; m < 10; ++m) {
    const double k_w = 12.0 * std::pow(2.0, m);
    for (double c_q : c_q_grid) {
      const double k_q = k_w / c_q;
      if (!(c_q < std::sqrt(k_q)) || !(c_q < std::sqrt(k_w))) continue;
      for (double c_qr : c_qr_grid) {
        for (double k_qr : k_qr_grid) {
          if (!(c_qr < std::sqrt(k_qr))) continue;
          const double k_wr = (al / (1.0 - al)) * b.C_qr * b.C_qr +
                              c_qr * k_qr + c_qr / (1.0 - al);
          for (double c_x : c_x_grid) {
            for (double k_x : k_x_grid) {
              if (!(c_x < std::sqrt(k_x))) continue;
              for (double k_v : k_v_grid) {
                GainSet g;
                g.k_x = k_x;
                g.k_v = k_v;
                g.c_x = c_x;
                g.k_qr = k_qr;
                g.k_wr = k_wr;
                g.c_qr = c_qr;
                g.k_q1 = g.k_q2 = k_q;
                g.k_w1 = g.k_w2 = k_w;
                g.c_q1 = g.c_q2 = c_q;
                const CertificationReport r = certify(g, b, p);
                if (r.pass && r.lambda_min_Wbar >= target_lambda) return g;
                if (r.lambda_min_Wbar > best_lambda)
                  best_lambda = r.lambda_min_Wbar;
                if (r.failed_condition != 0) last_failed = r.failed_condition;
              }
            }
          }
        }
      }
    }
  }
  throw SynthesisFailed(
      "schedule exhausted: best lambda_min=" + fmt(best_lambda) +
      " below target " + fmt(target_lambda) +
      (last_failed != 0
           ? " (last failed condition " + std::to_string(last_failed) + ")"
           : ""));
}

UltimateBound ultimate_bound(const GainSet& g, const BoundSet& b,
                             const Params& p) {
  g.validate();
  b.validate();
  p.validate();
  const WBlocks W = build_W(g, b, p);
  const double lmin = jacobi_eigenvalues(W.Wbar)(0);
  if (lmin <= b.eps_young)
    throw NotContracting("lambda_min(W)=" + fmt(lmin) +
                         " does not exceed the Young margin eps=" +
                         fmt(b.eps_young));
  const Eigen::Matrix<double, 8, 8> Wstar =
      W.Wbar - b.eps_young * Eigen::Matrix<double, 8, 8>::Identity();
  if (!check_pd_schur(Wstar, {2, 2, 2, 2}).pd)
    throw NotContracting("shifted decrease matrix lost definiteness");
  const double lmin_star = jacobi_eigenvalues(Wstar)(0);

  const PMats P = build_P(g, b);
  const Eigen::VectorXd ev_hi = jacobi_eigenvalues(P.P_hi);
  const double lmaxP = ev_hi(ev_hi.size() - 1);

  Eigen::Matrix<double, 8, 1> E;
  const double ex = b.delta_x_r / p.m_r;
  const double er = 1.5 * b.delta_q_r / (p.m_r * p.L_r);
  const double ec = b.delta_q_c / (p.m_Q * p.L_c);
  E << ex, ex, er, er, ec, ec, ec, ec;

  UltimateBound u;
  u.rate = lmin_star / lmaxP;
  u.d1 = (lmaxP / lmin_star) * E.squaredNorm() / (4.0 * b.eps_young);
  return u;
}

BoundSet estimate_bounds(const Trajectory& traj, const GainSet& g,
                         const Params& p, BoundSet seed, double T,
                         int samples, double margin) {
  require(samples >= 2, "samples", "need at least two sample points");
  ControllerConfig cc;
  double max_a = 0.0, max_wr = 0.0, max_wdotr = 0.0, max_wc = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = T * static_cast<double>(i) / (samples - 1);
    const TrajSample d = traj(t);
    max_a = std::max(max_a, d.a.norm());
    max_wr = std::max(max_wr, d.w_r.norm());
    max_wdotr = std::max(max_wdotr, d.wdot_r.norm());

    // Zero-error state: rod on the trajectory, cables at the attitude the
    // virtual control asks for. Its surrogate rates are the desired ones.
    ReducedState s;
    s.x_r = d.x;
    s.v_r = d.v;
    s.q_r = renormalize_unit(d.q_r);
    s.w_r = tangent_project(d.w_r, s.q_r);
    const std::array<Vec3, 2> mt = mu_tilde(s, d, g, p);
    for (int j = 0; j < 2; ++j) {
      s.q_c[j] = desired_cable_attitude(mt[j]);
      s.w_c[j].setZero();
    }
    const ReducedControl rc = reduced_control(t, s, traj, g, p, cc);
    max_wc = std::max({max_wc, rc.w_des[0].norm(), rc.w_des[1].norm()});
  }
  seed.C = (1.0 + margin) * (p.m_r * max_a + p.I_r() * max_wdotr);
  seed.C_qr = (1.0 + margin) * 2.0 * max_wr;
  seed.C_q1 = seed.C_q2 = (1.0 + margin) * 2.0 * max_wc;
  return seed;
}

std::optional<std::pair<GainSet, BoundSet>> find_admissible_constants(
    const GainSet& gains, const BoundSet& seed, const Params& p) {
  const double alpha_grid[] = {0.2, 0.15, 0.1, 0.08, 0.05, 0.03, 0.02};
  const double psi_r_grid[] = {0.1, 0.05, 0.02, 0.01};
  const double c_x_grid[] = {1.0, 0.75, 0.5, 0.25};
  const double c_qr_grid[] = {0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
  const double c_q_grid[] = {1.5, 1.25, 1.0, 0.75, 0.5, 0.25};

  for (double al : alpha_grid) {
    // psi cap giving each cable alpha_j = al / 2.
    const double aj = 0.5 * al;
    const double psi_j = 1.0 - std::sqrt(1.0 - aj * aj);
    for (double psi_r : psi_r_grid) {
      for (double c_x : c_x_grid) {
        if (!(c_x < std::sqrt(gains.k_x))) continue;
        for (double c_qr : c_qr_grid) {
          if (!(c_qr < std::sqrt(gains.k_qr))) continue;
          for (double c_q : c_q_grid) {
            if (!(c_q < std::sqrt(gains.k_q1)) ||
                !(c_q < std::sqrt(gains.k_q2)))
              continue;
            GainSet g = gains;
            g.c_x = c_x;
            g.c_qr = c_qr;
            g.c_q1 = g.c_q2 = c_q;
            BoundSet b = seed;
            b.psi_1 = b.psi_2 = psi_j;
            b.psi_r = psi_r;
            const CertificationReport r = certify(g, b, p);
            if (r.pass) return std::make_pair(g, b);
          }
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace barlift
