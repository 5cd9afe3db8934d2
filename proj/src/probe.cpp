#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "fraktur/probe.hpp"

namespace fraktur {

namespace {

using Mat = Eigen::MatrixXd;

double min_gen_eig(const Mat& A, const Mat& B) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(A, B, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  return ges.eigenvalues().minCoeff();
}

}  // namespace

ProbeReport regularity_probe(const Problem& pb, const SpaceTimeState& s, double tol_rel) {
  s.check_shape(pb.fem, pb.time);
  const auto& fem = pb.fem;
  const auto& p = pb.phys;
  const int M = pb.time.steps, nu = fem.n_vector(), np = fem.n_scalar();

  ProbeReport rep;
  rep.tol_rel = tol_rel;

  const Mat Hv = Mat(fem.mass_vec()) + Mat(fem.stiffness_vec());
  const Mat Hp = Mat(fem.mass_phi()) + Mat(fem.stiffness_phi());
  const Mat Mp = Mat(fem.mass_phi());

  double strain_sq = 0.0, phase_sq = 0.0;
  std::vector<Mat> A(M + 1), G(M + 1);
  for (int m = 0; m <= M; ++m) {
    A[m] = Mat(fem.degraded_elastic(s.phi[m], p));
    G[m] = Mat(fem.elastic_cross(s.u[m], s.phi[m], p));
    strain_sq = std::max(strain_sq, s.u[m].dot(Mat(fem.stiffness_vec()) * s.u[m]));
    phase_sq = std::max(phase_sq, s.phi[m].dot(Mp * s.phi[m]));
  }
  rep.degenerate_zero_strain = strain_sq <= 1e-28;
  rep.degenerate_zero_phase = phase_sq <= 1e-28;

  // factor grams: solutions x = (du^0..M, dl1), tests w = (w_u^0..M, w_phi^0..M)
  const int nxu = (M + 1) * nu;
  const int nx = nxu + np;
  const int nyp = (M + 1) * np;

  Mat X = Mat::Zero(nx, nx);
  const Eigen::LDLT<Mat> hp_ldlt(Hp);
  for (int m = 0; m <= M; ++m)
    X.block(m * nu, m * nu, nu, nu) = pb.time.weight(m) * Hv;
  // dual H1 gram for dl1 stored as a mass-Riesz representative
  X.block(nxu, nxu, np, np) = Mp * hp_ldlt.solve(Mp);

  Mat Yphi = Mat::Zero(nyp, nyp);
  const double dt = pb.time.dt();
  for (int m = 0; m <= M; ++m)
    Yphi.block(m * np, m * np, np, np) += pb.time.weight(m) * Hp;
  for (int m = 1; m <= M; ++m) {
    Yphi.block(m * np, m * np, np, np) += Hp / dt;
    Yphi.block((m - 1) * np, (m - 1) * np, np, np) += Hp / dt;
    Yphi.block(m * np, (m - 1) * np, np, np) -= Hp / dt;
    Yphi.block((m - 1) * np, m * np, np, np) -= Hp / dt;
  }

  // W = B Y^{-1} B^T assembled from the two factor parts of the test space.
  // The w_u part is block diagonal and pairs only with the matching du^m.
  Mat W = Mat::Zero(nx, nx);
  const Eigen::LDLT<Mat> hv_ldlt(Hv);
  for (int m = 0; m <= M; ++m)
    W.block(m * nu, m * nu, nu, nu) =
        pb.time.weight(m) * (A[m] * hv_ldlt.solve(A[m]));
  // The w_phi part couples du^m (through G) and dl1 (through the mass).
  Mat Bphi = Mat::Zero(nx, nyp);
  for (int m = 0; m <= M; ++m)
    Bphi.block(m * nu, m * np, nu, np) = pb.time.weight(m) * G[m];
  Bphi.block(nxu, 0, np, np) = -Mp;
  const Eigen::LDLT<Mat> yphi_ldlt(Yphi);
  W += Bphi * yphi_ldlt.solve(Bphi.transpose());

  {
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(W, X,
                                                      Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    const Vec ev = ges.eigenvalues();
    rep.infsup_A = std::sqrt(std::max(0.0, ev.minCoeff()));
    rep.sigma_max = std::sqrt(std::max(0.0, ev.maxCoeff()));
  }
  rep.infsup_A_u = std::sqrt(
      std::max(0.0, min_gen_eig(W.topLeftCorner(nxu, nxu), X.topLeftCorner(nxu, nxu))));

  const Mat A_pristine = Mat(fem.degraded_elastic(Vec::Ones(np), p));
  rep.korn_kappa_bound = p.kappa * min_gen_eig(A_pristine, Hv);

  // Test-factor verdict. A direction with nonzero initial trace w_phi(0)
  // always registers against dl1; in the dual gram that channel has the
  // state-independent strength 1/sqrt(w_0 + 1/dt). A direction with
  // w_phi(0) = 0 can only register against du, through the cross block G.
  // No uniform inf-sup over those directions exists (already at an
  // elementwise-constant phi the pair w = (t u, const) cancels the coupling
  // exactly, whatever the load), so the channel is judged by its magnitude
  // over pure-phase directions: zero precisely when every G[m] vanishes,
  // i.e. in the flagged degenerate states, and O(1) under load.
  Mat P = Mat::Zero(M * np, M * np);
  for (int m = 1; m <= M; ++m)
    P.block((m - 1) * np, (m - 1) * np, np, np) =
        pb.time.weight(m) * (G[m].transpose() * hv_ldlt.solve(G[m]));
  const Mat Q = Yphi.bottomRightCorner(M * np, M * np);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> pq(P, Q,
                                                   Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  const double trace_channel = 1.0 / std::sqrt(pb.time.weight(0) + 1.0 / dt);
  const double phase_channel = std::sqrt(std::max(0.0, pq.eigenvalues().maxCoeff()));
  rep.infsup_B = std::min(trace_channel, phase_channel);

  rep.north_ok = !rep.degenerate_zero_strain && !rep.degenerate_zero_phase &&
                 std::min(rep.infsup_A, rep.infsup_B) > tol_rel * rep.sigma_max;
  return rep;
}

}  // namespace fraktur
