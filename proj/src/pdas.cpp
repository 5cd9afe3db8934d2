#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <vector>

#include <Eigen/SparseLU>

#include "fraktur/lower_kkt.hpp"

namespace fraktur {

namespace {

// Scatter the columns of M belonging to `act` into triplets at (row0 +
// row, col0 + position-in-active-list).
void add_mass_columns(std::vector<Eigen::Triplet<double>>& trip, const SpMat& M,
                      const std::vector<int>& act, int row0, int col0, double sign) {
  for (std::size_t k = 0; k < act.size(); ++k) {
    const int j = act[k];
    for (SpMat::InnerIterator it(M, j); it; ++it)
      trip.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(k),
                        sign * it.value());
  }
}

void add_block(std::vector<Eigen::Triplet<double>>& trip, const SpMat& B, int row0, int col0,
               double scale = 1.0) {
  for (int j = 0; j < B.outerSize(); ++j)
    for (SpMat::InnerIterator it(B, j); it; ++it)
      trip.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(it.col()),
                        scale * it.value());
}

std::vector<int> active_list(const std::vector<char>& mask) {
  std::vector<int> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(static_cast<int>(i));
  return out;
}

struct StepEval {
  Vec grad_u;        // A(phi) u - N q
  Vec grad_phi;      // unconstrained energy gradient in phi
  SpMat A, G, H;     // second derivative blocks
};

StepEval eval_step(const Problem& pb, const Vec& u, const Vec& phi, const Vec& q) {
  const auto& fem = pb.fem;
  const auto& p = pb.phys;
  StepEval ev;
  ev.A = fem.degraded_elastic(phi, p);
  const SpMat W = fem.elastic_phi_mass(u, p);
  ev.G = fem.elastic_cross(u, phi, p);
  ev.H = W + (p.g_c / p.eps) * fem.mass_phi() + p.g_c * p.eps * fem.stiffness_phi();
  ev.grad_u = ev.A * u - fem.neumann_load(q);
  const Vec ones = Vec::Ones(fem.n_scalar());
  ev.grad_phi = W * phi - (p.g_c / p.eps) * (fem.mass_phi() * (ones - phi)) +
                p.g_c * p.eps * (fem.stiffness_phi() * phi);
  return ev;
}

double step_energy(const Problem& pb, const Vec& u, const Vec& phi, const Vec& q) {
  const auto& fem = pb.fem;
  const auto& p = pb.phys;
  const Vec miss = Vec::Ones(fem.n_scalar()) - phi;
  return fem.elastic_energy(u, phi, p) + 0.5 * p.g_c / p.eps * miss.dot(fem.mass_phi() * miss) +
         0.5 * p.g_c * p.eps * phi.dot(fem.stiffness_phi() * phi) - u.dot(fem.neumann_load(q));
}

// residual of the constrained step system at (u, phi, lambda supported on act)
double step_residual(const Problem& pb, const StepEval& ev, const Vec& lambda, const Vec& phi,
                     const Vec& bound, const std::vector<char>& act) {
  const Vec rphi = ev.grad_phi + pb.fem.mass_phi() * lambda;
  double r = std::sqrt(pb.fem.dual_norm_sq_vec(ev.grad_u) + pb.fem.dual_norm_sq_phi(rphi));
  for (std::size_t i = 0; i < act.size(); ++i)
    if (act[i]) r = std::max(r, std::abs(phi[static_cast<int>(i)] - bound[static_cast<int>(i)]));
  return r;
}

struct StepSolution {
  Vec u, phi, lambda;
  std::vector<char> active;
};

// Exact minimizer of the step objective in phi at frozen u, subject to
// phi <= bound nodally. The objective is a strictly convex quadratic in phi
// (elastic weight + reaction mass + gradient stiffness), solved by a primal
// active-set method: iterates stay feasible, the objective is non-increasing,
// and the working set changes by one constraint per iteration, so the loop
// terminates at the unique minimizer. The bound multiplier of this nodal
// subproblem is a nodal functional; it is returned rescaled by the lumped
// mass so it lives on the same density scale as the step multiplier and can
// seed the active-set indicator.
struct PhiQp {
  Vec phi, lambda;
  std::vector<char> active;
};

PhiQp phi_bound_qp(const Problem& pb, const Vec& u, const Vec& bound, Vec phi,
                   std::vector<char> act) {
  const auto& fem = pb.fem;
  const auto& p = pb.phys;
  const int np = fem.n_scalar();
  const SpMat Hq = SpMat(fem.elastic_phi_mass(u, p)) + (p.g_c / p.eps) * fem.mass_phi() +
                   p.g_c * p.eps * fem.stiffness_phi();
  const Vec b = (p.g_c / p.eps) * (fem.mass_phi() * Vec::Ones(np));
  const Vec mlump = fem.mass_phi() * Vec::Ones(np);
  const double mu_release = -1e-13 * b.cwiseAbs().maxCoeff();

  // start feasible, working set only where the bound is attained
  for (int i = 0; i < np; ++i) {
    phi[i] = std::min(phi[i], bound[i]);
    if (act[i] && phi[i] < bound[i]) act[i] = 0;
  }
  for (int iter = 0; iter < 40 * np + 100; ++iter) {
    const std::vector<int> alist = active_list(act);
    const int na = static_cast<int>(alist.size());
    std::vector<Eigen::Triplet<double>> trip;
    add_block(trip, Hq, 0, 0);
    for (int k = 0; k < na; ++k) {
      trip.emplace_back(alist[k], np + k, 1.0);
      trip.emplace_back(np + k, alist[k], 1.0);
    }
    SpMat Ksys(np + na, np + na);
    Ksys.setFromTriplets(trip.begin(), trip.end());
    Vec rhs(np + na);
    rhs.segment(0, np) = b;
    for (int k = 0; k < na; ++k) rhs[np + k] = bound[alist[k]];
    Eigen::SparseLU<SpMat> lu(Ksys);
    if (lu.info() != Eigen::Success)
      throw SolverFailure("phase-field bound QP factorization failed", 0.0);
    const Vec sol = lu.solve(rhs);
    const Vec d = sol.segment(0, np) - phi;
    const double d_tol = 1e-12 * std::max(1.0, d.cwiseAbs().maxCoeff());

    // longest feasible fraction of the move toward the pinned minimizer;
    // constraints that are tight already get pinned as a batch
    double s = 1.0;
    int blocker = -1;
    bool tight = false;
    for (int i = 0; i < np; ++i) {
      if (act[i] || d[i] <= d_tol) continue;
      const double room = bound[i] - phi[i];
      if (room <= 0.0) {
        act[i] = 1;
        tight = true;
      } else if (room < s * d[i]) {
        s = room / d[i];
        blocker = i;
      }
    }
    if (tight) continue;
    if (blocker >= 0) {
      phi += s * d;
      phi[blocker] = bound[blocker];
      act[blocker] = 1;
      continue;
    }
    // apply the full step, keeping machine-precision fixed points exact
    for (int i = 0; i < np; ++i)
      if (std::abs(d[i]) > 1e-14 * std::max(1.0, std::abs(phi[i])))
        phi[i] = std::min(phi[i] + d[i], bound[i]);
    // pinned minimizer reached: release the most negative multiplier, if any
    int worst = -1;
    double mu_min = mu_release;
    for (int k = 0; k < na; ++k)
      if (sol[np + k] < mu_min) {
        mu_min = sol[np + k];
        worst = alist[k];
      }
    if (worst < 0) {
      PhiQp out;
      out.phi = phi;
      out.lambda = Vec::Zero(np);
      for (int k = 0; k < na; ++k) out.lambda[alist[k]] = std::max(0.0, sol[np + k]) / mlump[alist[k]];
      out.active = std::move(act);
      return out;
    }
    act[worst] = 0;
  }
  throw SolverFailure("phase-field bound QP did not terminate", 0.0);
}

StepSolution solve_step(const Problem& pb, const Vec& bound, const Vec& q, const Vec& u0,
                        const Vec& phi0, const std::vector<char>& act0, double c_active,
                        const PdasOptions& opts, int step_id, std::vector<StepLogEntry>& log) {
  const int nu = pb.fem.n_vector(), np = pb.fem.n_scalar();
  Vec u = u0, phi = phi0, lambda = Vec::Zero(np);
  std::vector<char> act = act0;
  const double tol_step = opts.tol / std::max(1.0, std::sqrt(pb.time.t_final));

  // Phase one: alternating descent into the step's energy basin. Each
  // half-sweep minimizes its subproblem exactly (SPD elastic solve in u,
  // convex bound-QP in phi), so the objective never increases. The joint
  // Newton iteration below converges fast but is only locally reliable:
  // started cold on this nonconvex landscape it can settle on a stationary
  // point well above the minimum that plain descent reaches.
  {
    double e_prev = step_energy(pb, u, phi, q);
    for (int sweep = 0; sweep < 60; ++sweep) {
      Eigen::SimplicialLDLT<SpMat> ldlt(pb.fem.degraded_elastic(phi, pb.phys));
      if (ldlt.info() != Eigen::Success) break;
      u = ldlt.solve(pb.fem.neumann_load(q));
      PhiQp qp = phi_bound_qp(pb, u, bound, phi, act);
      phi = qp.phi;
      lambda = qp.lambda;
      act = std::move(qp.active);
      const double e_now = step_energy(pb, u, phi, q);
      if (std::getenv("FRAKTUR_PDAS_TRACE"))
        std::fprintf(stderr, "[pdas] step %d descent sweep %d E %.12f na %d\n", step_id, sweep,
                     e_now, static_cast<int>(active_list(act).size()));
      if (e_prev - e_now <= 1e-12 * std::max(1.0, std::abs(e_now))) break;
      e_prev = e_now;
    }
  }

  for (int outer = 1; outer <= opts.max_outer; ++outer) {
    const std::vector<int> alist = active_list(act);
    const int na = static_cast<int>(alist.size());
    // released nodes carry no multiplier; dropping stale entries here makes
    // the convergence test below re-prove stationarity on the current set
    for (int i = 0; i < np; ++i)
      if (!act[i]) lambda[i] = 0.0;
    // newly pinned nodes may sit above the bound: snap them onto it, so the
    // outer iteration starts feasible and the pinning rows stay homogeneous
    for (int i : alist) phi[i] = std::min(phi[i], bound[i]);
    double shift = 0.0;
    int newton = 0;
    int rejects = 0;
    double res = 0.0;
    bool inner_ok = false;
    while (newton < opts.max_newton && rejects < 8 * opts.max_newton) {
      StepEval ev = eval_step(pb, u, phi, q);
      res = step_residual(pb, ev, lambda, phi, bound, act);
      if (res <= tol_step) {
        inner_ok = true;
        break;
      }
      std::vector<Eigen::Triplet<double>> trip;
      add_block(trip, ev.A, 0, 0);
      add_block(trip, ev.G, 0, nu);
      const SpMat Gt = SpMat(ev.G.transpose());
      add_block(trip, Gt, nu, 0);
      add_block(trip, ev.H, nu, nu);
      if (shift > 0.0) {
        for (int i = 0; i < nu; ++i) trip.emplace_back(i, i, shift);
        for (int i = 0; i < np; ++i) trip.emplace_back(nu + i, nu + i, shift);
      }
      add_mass_columns(trip, pb.fem.mass_phi(), alist, nu, nu + np, 1.0);
      for (int k = 0; k < na; ++k) trip.emplace_back(nu + np + k, nu + alist[k], 1.0);

      const int ntot = nu + np + na;
      SpMat Ksys(ntot, ntot);
      Ksys.setFromTriplets(trip.begin(), trip.end());
      Vec rhs(ntot);
      rhs.segment(0, nu) = -ev.grad_u;
      rhs.segment(nu, np) = -ev.grad_phi;
      for (int k = 0; k < na; ++k) rhs[nu + np + k] = bound[alist[k]] - phi[alist[k]];

      Eigen::SparseLU<SpMat> lu;
      lu.compute(Ksys);
      if (lu.info() != Eigen::Success) {
        shift = std::max(2.0 * shift, opts.levenberg0);
        continue;
      }
      const Vec dx = lu.solve(rhs);
      Vec lam_new = Vec::Zero(np);
      for (int k = 0; k < na; ++k) lam_new[alist[k]] = dx[nu + np + k];

      // backtracking on the frozen-set residual; the descent phase above has
      // already placed the iterate in the right basin, so the Newton step
      // only has to contract locally
      bool accepted = false;
      double s = 1.0;
      for (int bt = 0; bt < 30; ++bt) {
        const Vec u_try = u + s * dx.segment(0, nu);
        const Vec phi_try = phi + s * dx.segment(nu, np);
        const Vec lam_try = lambda + s * (lam_new - lambda);
        const StepEval evt = eval_step(pb, u_try, phi_try, q);
        const double res_try = step_residual(pb, evt, lam_try, phi_try, bound, act);
        if (res_try <= (1.0 - 1e-4 * s) * res) {
          u = u_try;
          phi = phi_try;
          lambda = lam_try;
          accepted = true;
          break;
        }
        s *= 0.5;
      }
      if (accepted) {
        ++newton;
        shift *= 0.25;  // relax toward the pure Newton step once it works
        if (shift < opts.levenberg0) shift = 0.0;
      } else {
        // no residual decrease along the step: regularize harder
        ++rejects;
        shift = std::max(4.0 * shift, opts.levenberg0);
      }
      if (std::getenv("FRAKTUR_PDAS_TRACE"))
        std::fprintf(stderr,
                     "[pdas] step %d outer %d newton %d rejects %d na %d shift %.3e res %.6e "
                     "s %.3e acc %d\n",
                     step_id, outer, newton, rejects, na, shift, res, s, accepted ? 1 : 0);
    }
    if (!inner_ok) throw SolverFailure("pdas step " + std::to_string(step_id) + " Newton stall", res);

    // log the step objective at the feasibility-clipped iterate
    const Vec phi_clip = phi.cwiseMin(bound);
    log.push_back({step_id, outer, newton, na, res, step_energy(pb, u, phi_clip, q), shift});

    std::vector<char> act_new(np, 0);
    for (int i = 0; i < np; ++i)
      act_new[i] = (lambda[i] + c_active * (phi[i] - bound[i]) > 0.0) ? 1 : 0;
    if (act_new == act) {
      StepSolution sol;
      sol.u = u;
      sol.phi = phi;
      sol.lambda = lambda;
      sol.active = act;
      return sol;
    }
    act = std::move(act_new);
  }
  throw SolverFailure("pdas step " + std::to_string(step_id) + " active set did not settle",
                      0.0);
}

// One Newton pass on the joint space-time system with frozen active sets.
// Unknowns: (u^m, phi^m) for m = 1..M plus the supported l2 blocks.
struct MonoResult {
  bool solved = false;
};

MonoResult monolithic_newton(const Problem& pb, const Vec& phi0, const Control& c,
                             SpaceTimeState& s, LowerMultiplier& l,
                             const std::vector<std::vector<char>>& act, double shift,
                             const PdasOptions& opts) {
  const int M = pb.time.steps, nu = pb.fem.n_vector(), np = pb.fem.n_scalar();
  const SpMat& Mphi = pb.fem.mass_phi();
  std::vector<std::vector<int>> alist(M);
  std::vector<int> lam_off(M + 1);
  const int base = M * (nu + np);
  int acc = base;
  for (int m = 0; m < M; ++m) {
    alist[m] = active_list(act[m]);
    lam_off[m] = acc;
    acc += static_cast<int>(alist[m].size());
  }
  lam_off[M] = acc;
  const int ntot = acc;

  for (int newton = 0; newton < opts.max_newton; ++newton) {
    std::vector<Eigen::Triplet<double>> trip;
    Vec rhs = Vec::Zero(ntot);
    for (int m = 1; m <= M; ++m) {
      const double w = pb.time.weight(m);
      const int off = (m - 1) * (nu + np);
      StepEval ev = eval_step(pb, s.u[m], s.phi[m], c.q[m]);
      add_block(trip, ev.A, off, off, w);
      add_block(trip, ev.G, off, off + nu, w);
      const SpMat Gt = SpMat(ev.G.transpose());
      add_block(trip, Gt, off + nu, off, w);
      add_block(trip, ev.H, off + nu, off + nu, w);
      if (shift > 0.0) {
        for (int i = 0; i < nu; ++i) trip.emplace_back(off + i, off + i, shift);
        for (int i = 0; i < np; ++i) trip.emplace_back(off + nu + i, off + nu + i, shift);
      }
      // multiplier columns: + M[:,A_m] z_m - M[:,A_{m+1}] z_{m+1}
      add_mass_columns(trip, Mphi, alist[m - 1], off + nu, lam_off[m - 1], 1.0);
      if (m < M) add_mass_columns(trip, Mphi, alist[m], off + nu, lam_off[m], -1.0);
      rhs.segment(off, nu) = -w * ev.grad_u;
      rhs.segment(off + nu, np) = -w * ev.grad_phi;
      // constraint rows: dphi^m_i - dphi^{m-1}_i = -(phi^m_i - phi^{m-1}_i)
      for (std::size_t k = 0; k < alist[m - 1].size(); ++k) {
        const int i = alist[m - 1][k];
        const int row = lam_off[m - 1] + static_cast<int>(k);
        trip.emplace_back(row, off + nu + i, 1.0);
        if (m > 1) trip.emplace_back(row, off - (nu + np) + nu + i, -1.0);
        const double prev = (m > 1) ? s.phi[m - 1][i] : phi0[i];
        rhs[row] = -(s.phi[m][i] - prev);
      }
    }
    SpMat Ksys(ntot, ntot);
    Ksys.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<SpMat> lu;
    lu.compute(Ksys);
    if (lu.info() != Eigen::Success) return {false};
    const Vec dx = lu.solve(rhs);
    if (!dx.allFinite()) return {false};

    for (int m = 1; m <= M; ++m) {
      const int off = (m - 1) * (nu + np);
      s.u[m] += dx.segment(off, nu);
      s.phi[m] += dx.segment(off + nu, np);
      Vec z = Vec::Zero(np);
      for (std::size_t k = 0; k < alist[m - 1].size(); ++k)
        z[alist[m - 1][k]] = dx[lam_off[m - 1] + static_cast<int>(k)];
      l.l2[m - 1] = z;
    }
    // converged when the frozen-set stationarity rows are tiny (same
    // weighting as the assembled joint residual)
    double res = 0.0;
    for (int m = 1; m <= M; ++m) {
      const double w = pb.time.weight(m);
      StepEval ev = eval_step(pb, s.u[m], s.phi[m], c.q[m]);
      const Vec rphi =
          w * ev.grad_phi + Mphi * (l.l2[m - 1] - (m < M ? l.l2[m] : Vec::Zero(np)));
      res += w * pb.fem.dual_norm_sq_vec(ev.grad_u) + pb.fem.dual_norm_sq_phi(rphi) / w;
    }
    if (std::sqrt(res) <= 0.5 * opts.tol) return {true};
  }
  return {false};
}

Vec recover_l1(const Problem& pb, const SpaceTimeState& s, const LowerMultiplier& l) {
  // phi^0 stationarity row defines l1: w_0 grad_phi E(u^0, phi^0) = M (l1 + l2^1)
  const auto& fem = pb.fem;
  const auto& p = pb.phys;
  const Vec ones = Vec::Ones(fem.n_scalar());
  const SpMat W = fem.elastic_phi_mass(s.u[0], p);
  const Vec g0 = W * s.phi[0] - (p.g_c / p.eps) * (fem.mass_phi() * (ones - s.phi[0])) +
                 p.g_c * p.eps * (fem.stiffness_phi() * s.phi[0]);
  return fem.solve_mass_phi(pb.time.weight(0) * g0) - l.l2[0];
}

}  // namespace

PdasResult pdas_forward_solve(const Problem& pb, const Vec& phi0, const Control& c,
                              const PdasOptions& opts) {
  c.check_shape(pb.fem, pb.time);
  if (phi0.size() != pb.fem.n_scalar())
    throw std::invalid_argument("pdas_forward_solve: phi0 size mismatch");
  for (int i = 0; i < phi0.size(); ++i)
    if (!(phi0[i] >= 0.0 && phi0[i] <= 1.0))
      throw std::invalid_argument("pdas_forward_solve: phi0 must lie in [0,1] nodally");

  const int M = pb.time.steps, np = pb.fem.n_scalar();
  const double c_active = opts.c_active > 0.0 ? opts.c_active : 1e2 * pb.phys.g_c / pb.phys.eps;

  PdasResult out;
  out.state = SpaceTimeState::zero(pb.fem, pb.time);
  out.state.phi[0] = phi0;

  // u^0 equilibrates against the initial control; it is a by-product.
  {
    Eigen::SimplicialLDLT<SpMat> ldlt(pb.fem.degraded_elastic(phi0, pb.phys));
    if (ldlt.info() != Eigen::Success)
      throw SolverFailure("initial elastic solve failed", 0.0);
    out.state.u[0] = ldlt.solve(pb.fem.neumann_load(c.q[0]));
  }

  std::vector<Vec> lambda(M);
  out.active.assign(M, std::vector<char>(np, 0));
  std::vector<char> act(np, 0);
  Vec u_prev = out.state.u[0];
  for (int m = 1; m <= M; ++m) {
    StepSolution sol = solve_step(pb, out.state.phi[m - 1], c.q[m], u_prev,
                                  out.state.phi[m - 1], act, c_active, opts, m, out.log);
    out.state.u[m] = sol.u;
    out.state.phi[m] = sol.phi;
    lambda[m - 1] = sol.lambda;
    out.active[m - 1] = sol.active;
    act = sol.active;
    u_prev = sol.u;
  }

  // joint multiplier by backward accumulation of the weighted step multipliers
  out.mult = LowerMultiplier::zero(pb.fem, pb.time);
  Vec accum = Vec::Zero(np);
  for (int m = M; m >= 1; --m) {
    accum += pb.time.weight(m) * lambda[m - 1];
    out.mult.l2[m - 1] = accum;
  }
  out.mult.l1 = recover_l1(pb, out.state, out.mult);

  out.residual_sequential = kkt_residual_lower(pb, out.state, c, phi0, out.mult);
  out.residual = out.residual_sequential;
  out.converged = out.residual.max_component() <= opts.tol &&
                  out.residual.comp_nodal <= opts.tol;

  if (!out.converged && opts.monolithic_polish) {
    // The sequential sweep is not a KKT point of the joint space-time
    // system (a node moved and was later held). Correct monolithically.
    double shift = 0.0;
    for (int it = 1; it <= opts.max_monolithic; ++it) {
      out.monolithic_iters = it;
      for (int m = 1; m <= M; ++m)
        for (int i = 0; i < np; ++i)
          out.active[m - 1][i] =
              (out.mult.l2[m - 1][i] + c_active * (out.state.phi[m][i] - out.state.phi[m - 1][i]) >
               0.0)
                  ? 1
                  : 0;
      MonoResult mr = monolithic_newton(pb, phi0, c, out.state, out.mult, out.active, shift, opts);
      if (!mr.solved) {
        shift = std::max(2.0 * shift, opts.levenberg0);
        continue;
      }
      out.mult.l1 = recover_l1(pb, out.state, out.mult);
      out.residual = kkt_residual_lower(pb, out.state, c, phi0, out.mult);
      // sets stable?
      bool stable = true;
      for (int m = 1; m <= M && stable; ++m)
        for (int i = 0; i < np; ++i) {
          const char a = (out.mult.l2[m - 1][i] +
                          c_active * (out.state.phi[m][i] - out.state.phi[m - 1][i])) > 0.0;
          if (a != out.active[m - 1][i]) {
            stable = false;
            break;
          }
        }
      if (stable && out.residual.max_component() <= opts.tol &&
          out.residual.comp_nodal <= opts.tol) {
        out.converged = true;
        out.monolithic_applied = true;
        break;
      }
    }
    if (!out.converged)
      throw SolverFailure("space-time corrector did not converge",
                          out.residual.max_component());
  }
  return out;
}

}  // namespace fraktur
