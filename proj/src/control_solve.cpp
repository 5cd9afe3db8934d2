#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "fraktur/control.hpp"

namespace fraktur {

namespace {

void add_block_t(std::vector<Eigen::Triplet<double>>& trip, const SpMat& B, int row0, int col0,
                 double scale = 1.0) {
  for (int j = 0; j < B.outerSize(); ++j)
    for (SpMat::InnerIterator it(B, j); it; ++it)
      trip.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(it.col()),
                        scale * it.value());
}

struct FrozenSets {
  std::vector<std::vector<int>> act;  // per interval, joint active nodes
  int nonsmooth = 0;
};

// Active sets of the joint system read off the converged pair (state,
// multiplier). Nodes with both the multiplier and the rate at zero are
// nonsmooth points of the solution map; they land on the inactive side.
FrozenSets joint_sets(const Problem& pb, const PdasResult& fwd) {
  const double c = 1e2 * pb.phys.g_c / pb.phys.eps;
  const double nstol = 1e-9;
  const int M = pb.time.steps, np = pb.fem.n_scalar();
  FrozenSets fs;
  fs.act.resize(M);
  for (int m = 1; m <= M; ++m) {
    for (int i = 0; i < np; ++i) {
      const double dphi = fwd.state.phi[m][i] - fwd.state.phi[m - 1][i];
      const double l2 = fwd.mult.l2[m - 1][i];
      const bool degenerate = std::abs(l2) <= nstol && std::abs(dphi) <= nstol;
      if (degenerate) ++fs.nonsmooth;
      if (!degenerate && l2 + c * dphi > 0.0) fs.act[m - 1].push_back(i);
    }
  }
  return fs;
}

}  // namespace

double ReducedGradientResult::norm() const {
  double acc = 0.0;
  for (const Vec& v : g) acc += v.squaredNorm();
  return std::sqrt(acc);
}

ReducedGradientResult reduced_gradient(const Problem& pb, const Control& c,
                                       const PdasResult& fwd, const ControlProblemSpec& spec) {
  const auto& fem = pb.fem;
  const auto& p = pb.phys;
  const int M = pb.time.steps, nu = fem.n_vector(), np = fem.n_scalar();
  const SpMat& Mp = fem.mass_phi();

  const FrozenSets fs = joint_sets(pb, fwd);
  std::vector<int> lam_off(M + 1);
  int acc = M * (nu + np);
  for (int m = 0; m < M; ++m) {
    lam_off[m] = acc;
    acc += static_cast<int>(fs.act[m].size());
  }
  lam_off[M] = acc;
  const int ntot = acc;

  // transpose of the frozen joint Newton matrix, assembled directly
  std::vector<Eigen::Triplet<double>> trip;
  for (int m = 1; m <= M; ++m) {
    const double w = pb.time.weight(m);
    const int off = (m - 1) * (nu + np);
    const SpMat A = fem.degraded_elastic(fwd.state.phi[m], p);
    const SpMat G = fem.elastic_cross(fwd.state.u[m], fwd.state.phi[m], p);
    const SpMat W = fem.elastic_phi_mass(fwd.state.u[m], p);
    const SpMat H = W + (p.g_c / p.eps) * Mp + p.g_c * p.eps * fem.stiffness_phi();
    // the (u, phi) superblock of the joint matrix is symmetric
    add_block_t(trip, A, off, off, w);
    add_block_t(trip, G, off, off + nu, w);
    add_block_t(trip, SpMat(G.transpose()), off + nu, off, w);
    add_block_t(trip, H, off + nu, off + nu, w);
    // multiplier columns become rows of the transpose
    for (std::size_t k = 0; k < fs.act[m - 1].size(); ++k) {
      const int i = fs.act[m - 1][k];
      for (SpMat::InnerIterator it(Mp, i); it; ++it)
        trip.emplace_back(lam_off[m - 1] + static_cast<int>(k),
                          off + nu + static_cast<int>(it.row()), it.value());
    }
    if (m < M)
      for (std::size_t k = 0; k < fs.act[m].size(); ++k) {
        const int i = fs.act[m][k];
        for (SpMat::InnerIterator it(Mp, i); it; ++it)
          trip.emplace_back(lam_off[m] + static_cast<int>(k),
                            off + nu + static_cast<int>(it.row()), -it.value());
      }
    // constraint rows become columns
    for (std::size_t k = 0; k < fs.act[m - 1].size(); ++k) {
      const int i = fs.act[m - 1][k];
      const int row = lam_off[m - 1] + static_cast<int>(k);
      trip.emplace_back(off + nu + i, row, 1.0);
      if (m > 1) trip.emplace_back(off - (nu + np) + nu + i, row, -1.0);
    }
  }
  SpMat Kt(ntot, ntot);
  Kt.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<SpMat> lu;
  lu.compute(Kt);
  if (lu.info() != Eigen::Success)
    throw SolverFailure("reduced_gradient: singular frozen adjoint system", 0.0);

  Vec rhs = Vec::Zero(ntot);
  for (int m = 1; m <= M; ++m)
    rhs.segment((m - 1) * (nu + np) + nu, np) =
        -pb.time.weight(m) * (Mp * (fwd.state.phi[m] - spec.phi_d));
  const Vec padj = lu.solve(rhs);

  ReducedGradientResult out;
  out.nonsmooth_nodes = fs.nonsmooth;
  out.g.assign(M + 1, Vec::Zero(fem.n_gamma()));
  for (int m = 0; m <= M; ++m) {
    const double w = pb.time.weight(m);
    out.g[m] = w * spec.alpha * (fem.mass_gamma() * (c.q[m] - spec.q_r));
    if (m >= 1) {
      const Vec pu = padj.segment((m - 1) * (nu + np), nu);
      out.g[m] -= w * (fem.neumann_matrix().transpose() * pu);
    }
  }
  return out;
}

UpperMultiplier recover_pi(const Problem& pb, const Control& c, const SpaceTimeState& s,
                           const ControlProblemSpec& spec, double ridge) {
  const auto& fem = pb.fem;
  const auto& p = pb.phys;
  const int M = pb.time.steps, nu = fem.n_vector(), np = fem.n_scalar(),
            ng = fem.n_gamma();
  const double dt = pb.time.dt();
  const SpMat& Mp = fem.mass_phi();

  // unknown layout: pi1 | pi2.u^0..M | pi2.phi^0..M | pi3^1..M | pi4^1..M
  const int o_pi1 = 0;
  const int o_p2u = np;
  const int o_p2p = o_p2u + (M + 1) * nu;
  const int o_pi3 = o_p2p + (M + 1) * np;
  const int o_pi4 = o_pi3 + M * np;
  const int ncols = o_pi4 + M * np;

  // residual row layout: rq^0..M | ru^0..M | rphi^0..M | rl1 | rl2^1..M
  const int r_rq = 0;
  const int r_ru = r_rq + (M + 1) * ng;
  const int r_rp = r_ru + (M + 1) * nu;
  const int r_l1 = r_rp + (M + 1) * np;
  const int r_l2 = r_l1 + np;
  const int nrows = r_l2 + M * np;

  std::vector<Eigen::Triplet<double>> trip;
  Vec b0 = Vec::Zero(nrows);
  for (int m = 0; m <= M; ++m) {
    const double w = pb.time.weight(m);
    b0.segment(r_rq + m * ng, ng) = w * spec.alpha * (fem.mass_gamma() * (c.q[m] - spec.q_r));
    b0.segment(r_rp + m * np, np) = w * (Mp * (s.phi[m] - spec.phi_d));

    const SpMat A = fem.degraded_elastic(s.phi[m], p);
    const SpMat G = fem.elastic_cross(s.u[m], s.phi[m], p);
    const SpMat W = fem.elastic_phi_mass(s.u[m], p);
    const SpMat H = W + (p.g_c / p.eps) * Mp + p.g_c * p.eps * fem.stiffness_phi();
    add_block_t(trip, SpMat(fem.neumann_matrix().transpose()), r_rq + m * ng, o_p2u + m * nu, w);
    add_block_t(trip, A, r_ru + m * nu, o_p2u + m * nu, -w);
    add_block_t(trip, G, r_ru + m * nu, o_p2p + m * np, -w);
    add_block_t(trip, SpMat(G.transpose()), r_rp + m * np, o_p2u + m * nu, -w);
    add_block_t(trip, H, r_rp + m * np, o_p2p + m * np, -w);
  }
  // pi1 and pi3 enter the phi rows with the telescoped pattern
  add_block_t(trip, Mp, r_rp + 0, o_pi1, -1.0);
  add_block_t(trip, Mp, r_rp + 0, o_pi3 + 0, -1.0);
  for (int m = 1; m < M; ++m) {
    add_block_t(trip, Mp, r_rp + m * np, o_pi3 + (m - 1) * np, 1.0);
    add_block_t(trip, Mp, r_rp + m * np, o_pi3 + m * np, -1.0);
  }
  add_block_t(trip, Mp, r_rp + M * np, o_pi3 + (M - 1) * np, 1.0);
  // rl1 row: + M pi2.phi^0
  add_block_t(trip, Mp, r_l1, o_p2p, 1.0);
  // rl2 rows: -M(pi2.phi^m - pi2.phi^{m-1}) - dt M pi4^m
  for (int m = 1; m <= M; ++m) {
    add_block_t(trip, Mp, r_l2 + (m - 1) * np, o_p2p + m * np, -1.0);
    add_block_t(trip, Mp, r_l2 + (m - 1) * np, o_p2p + (m - 1) * np, 1.0);
    add_block_t(trip, Mp, r_l2 + (m - 1) * np, o_pi4 + (m - 1) * np, -dt);
  }

  SpMat Amat(nrows, ncols);
  Amat.setFromTriplets(trip.begin(), trip.end());
  SpMat AtA = SpMat(Amat.transpose() * Amat);
  SpMat I(ncols, ncols);
  I.setIdentity();
  AtA += ridge * I;
  Eigen::SimplicialLDLT<SpMat> ldlt(AtA);
  if (ldlt.info() != Eigen::Success)
    throw SolverFailure("recover_pi: normal equations not SPD", 0.0);
  const Vec z = ldlt.solve(-(Amat.transpose() * b0));

  UpperMultiplier pi = UpperMultiplier::zero(fem, pb.time);
  pi.pi1 = z.segment(o_pi1, np);
  for (int m = 0; m <= M; ++m) {
    pi.pi2.u[m] = z.segment(o_p2u + m * nu, nu);
    pi.pi2.phi[m] = z.segment(o_p2p + m * np, np);
  }
  for (int m = 0; m < M; ++m) {
    pi.pi3[m] = z.segment(o_pi3 + m * np, np).cwiseMax(0.0);
    pi.pi4[m] = z.segment(o_pi4 + m * np, np).cwiseMax(0.0);
  }
  return pi;
}

SolveControlResult solve_control(const Problem& pb, const Vec& phi0,
                                 const ControlProblemSpec& spec,
                                 const SolveControlOptions& opts) {
  spec.check_shape(pb.fem);
  const int M = pb.time.steps, ng = pb.fem.n_gamma();
  const int n = (M + 1) * ng;

  auto to_control = [&](const Vec& x) {
    Control c = Control::zero(pb.fem, pb.time);
    for (int m = 0; m <= M; ++m) c.q[m] = x.segment(m * ng, ng);
    return c;
  };
  auto gather = [&](const std::vector<Vec>& blocks) {
    Vec x(n);
    for (int m = 0; m <= M; ++m) x.segment(m * ng, ng) = blocks[m];
    return x;
  };

  SolveControlResult out;
  Vec x = Vec::Zero(n);
  Control c = to_control(x);
  PdasResult fwd = pdas_forward_solve(pb, phi0, c, opts.pdas);
  double J = cost_J(pb, c, fwd.state, spec);
  ReducedGradientResult rg = reduced_gradient(pb, c, fwd, spec);
  Vec g = gather(rg.g);

  // seed the inverse Hessian with the exact Tikhonov block; for large alpha
  // this is the Newton matrix of the dominant term, and it keeps the first
  // direction on the right scale even when the misfit part still has to be
  // learned from curvature pairs
  Eigen::MatrixXd Binv0 = Eigen::MatrixXd::Zero(n, n);
  {
    const Eigen::MatrixXd Mg = Eigen::MatrixXd(pb.fem.mass_gamma());
    const Eigen::MatrixXd Ig = Eigen::MatrixXd::Identity(ng, ng);
    for (int m = 0; m <= M; ++m)
      Binv0.block(m * ng, m * ng, ng, ng) =
          (spec.alpha * pb.time.weight(m) * Mg).ldlt().solve(Ig);
  }
  Eigen::MatrixXd Binv = Binv0;
  bool first_update = true;
  int tiny_streak = 0;
  auto comp_held = [&](const PdasResult& f) {
    return f.residual.r_comp <= 1e-8 && f.residual.comp_nodal <= 1e-8;
  };
  out.history.push_back({0, J, g.norm(), 0.0, comp_held(fwd)});

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    if (g.norm() <= opts.gtol) {
      out.converged = true;
      break;
    }
    Vec dir = -(Binv * g);
    if (g.dot(dir) >= 0.0) {  // lost positive definiteness; restart
      Binv = Binv0;
      first_update = true;
      dir = -(Binv * g);
    }
    // trust cap: an underestimated curvature seed must not fling the trial
    // load out of the forward solver's reach
    const double dcap = 10.0 * std::max(1.0, x.norm());
    if (dir.norm() > dcap) dir *= dcap / dir.norm();
    const double slope = g.dot(dir);
    double step = 1.0;
    bool accepted = false;
    Vec x_new;
    Control c_new;
    double J_new = 0.0;
    PdasResult fwd_new;
    for (int ls = 0; ls < opts.max_linesearch; ++ls) {
      x_new = x + step * dir;
      c_new = to_control(x_new);
      bool solved = true;
      try {
        fwd_new = pdas_forward_solve(pb, phi0, c_new, opts.pdas);
      } catch (const SolverFailure&) {
        solved = false;  // trial load out of the forward solver's reach
      }
      if (solved) {
        J_new = cost_J(pb, c_new, fwd_new.state, spec);
        // machine slack keeps progress possible when the true decrease per
        // step sits below the roundoff of J itself (tight Tikhonov pinning)
        const double slack = 16.0 * std::numeric_limits<double>::epsilon() * std::abs(J);
        if (J_new <= J + opts.armijo_c * step * slope + slack) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.line_search_failed = true;
      break;
    }
    ReducedGradientResult rg_new = reduced_gradient(pb, c_new, fwd_new, spec);
    Vec g_new = gather(rg_new.g);

    const Vec sk = x_new - x, yk = g_new - g;
    const double sy = sk.dot(yk);
    if (sy > 1e-12 * sk.norm() * yk.norm()) {  // curvature condition
      if (first_update) {
        // calibrate the seed to the observed curvature scale; gamma ~ 1 when
        // the Tikhonov block already is the dominant Hessian
        Binv = (sy / yk.dot(Binv0 * yk)) * Binv0;
        first_update = false;
      }
      const Vec By = Binv * yk;
      const double yBy = yk.dot(By);
      Binv += ((sy + yBy) / (sy * sy)) * (sk * sk.transpose()) -
              (By * sk.transpose() + sk * By.transpose()) / sy;
    }
    x = x_new;
    c = c_new;
    J = J_new;
    fwd = fwd_new;
    g = g_new;
    out.history.push_back({iter, J, g.norm(), step, comp_held(fwd)});
    // When the attainable decrease drops below the floating-point resolution
    // of J, no further progress is measurable. This happens legitimately away
    // from gtol: with loads that are constant in time the optimum sits on the
    // irreversibility kink (phi^m = phi^{m-1} with zero multiplier), where the
    // gradient of the followed smooth branch need not vanish even though no
    // descent direction exists.
    const double pred_dec = -slope * step;
    if (pred_dec <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(J)))
      ++tiny_streak;
    else
      tiny_streak = 0;
    if (tiny_streak >= 2) {
      out.converged = true;
      break;
    }
  }
  if (g.norm() <= opts.gtol) out.converged = true;

  out.q = c;
  out.forward = fwd;
  out.complementarity_held = comp_held(fwd);
  out.pi = recover_pi(pb, c, fwd.state, spec, opts.ridge);
  out.kkt = upper_kkt_residual(pb, c, fwd.state, fwd.mult, out.pi, spec, phi0);
  return out;
}

}  // namespace fraktur
