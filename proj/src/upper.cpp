#include <cmath>

#include <Eigen/SparseCholesky>

#include "fraktur/upper.hpp"

namespace fraktur {

void ControlProblemSpec::check_shape(const FemSystem& fem) const {
  if (!(alpha > 0.0)) throw std::invalid_argument("ControlProblemSpec: alpha must be > 0");
  if (phi_d.size() != fem.n_scalar())
    throw std::invalid_argument("ControlProblemSpec: phi_d size mismatch");
  if (q_r.size() != fem.n_gamma())
    throw std::invalid_argument("ControlProblemSpec: q_r size mismatch");
}

double cost_J(const Problem& pb, const Control& c, const SpaceTimeState& s,
              const ControlProblemSpec& spec) {
  s.check_shape(pb.fem, pb.time);
  c.check_shape(pb.fem, pb.time);
  spec.check_shape(pb.fem);
  double J = 0.0;
  for (int m = 0; m <= pb.time.steps; ++m) {
    const Vec dphi = s.phi[m] - spec.phi_d;
    const Vec dq = c.q[m] - spec.q_r;
    J += 0.5 * pb.time.weight(m) *
         (dphi.dot(pb.fem.mass_phi() * dphi) +
          spec.alpha * dq.dot(pb.fem.mass_gamma() * dq));
  }
  return J;
}

DualVector semilinear_a(const Problem& pb, const Control& c, const SpaceTimeState& s,
                        const LowerMultiplier& l) {
  return kkt_stationarity(pb, s, c, l);
}

YDirection YDirection::zero(const FemSystem& fem, const TimeGrid& tg) {
  YDirection d;
  d.dq = Control::zero(fem, tg);
  d.du = Direction::zero(fem, tg);
  d.dl = LowerMultiplier::zero(fem, tg);
  return d;
}

YFunctional YFunctional::zero(const FemSystem& fem, const TimeGrid& tg) {
  YFunctional r;
  r.rq.assign(tg.steps + 1, Vec::Zero(fem.n_gamma()));
  r.rstate = DualVector::zero(fem, tg);
  r.rl1 = Vec::Zero(fem.n_scalar());
  r.rl2.assign(tg.steps, Vec::Zero(fem.n_scalar()));
  return r;
}

double YFunctional::apply(const YDirection& d) const {
  double v = 0.0;
  for (std::size_t m = 0; m < rq.size(); ++m) v += rq[m].dot(d.dq.q[m]);
  v += rstate.apply(d.du);
  v += rl1.dot(d.dl.l1);
  for (std::size_t m = 0; m < rl2.size(); ++m) v += rl2[m].dot(d.dl.l2[m]);
  return v;
}

DualVector a_prime_action(const Problem& pb, const Control& c, const SpaceTimeState& s,
                          const YDirection& d) {
  s.check_shape(pb.fem, pb.time);
  c.check_shape(pb.fem, pb.time);
  const auto& fem = pb.fem;
  const auto& p = pb.phys;
  const int M = pb.time.steps;
  DualVector r = DualVector::zero(fem, pb.time);
  for (int m = 0; m <= M; ++m) {
    const double w = pb.time.weight(m);
    const SpMat A = fem.degraded_elastic(s.phi[m], p);
    const SpMat G = fem.elastic_cross(s.u[m], s.phi[m], p);
    const SpMat W = fem.elastic_phi_mass(s.u[m], p);
    r.ru[m] = w * (A * d.du.u[m] + G * d.du.phi[m] - fem.neumann_load(d.dq.q[m]));
    r.rphi[m] = w * (G.transpose() * d.du.u[m] + W * d.du.phi[m] +
                     (p.g_c / p.eps) * (fem.mass_phi() * d.du.phi[m]) +
                     p.g_c * p.eps * (fem.stiffness_phi() * d.du.phi[m]));
  }
  // multiplier-direction pairings, telescoped exactly like the base map
  const SpMat& Mp = fem.mass_phi();
  r.rphi[0] -= Mp * (d.dl.l1 + d.dl.l2[0]);
  for (int m = 1; m < M; ++m) r.rphi[m] += Mp * (d.dl.l2[m - 1] - d.dl.l2[m]);
  r.rphi[M] += Mp * d.dl.l2[M - 1];
  return r;
}

YFunctional a_prime_adjoint(const Problem& pb, const Control& c, const SpaceTimeState& s,
                            const Direction& pi2) {
  s.check_shape(pb.fem, pb.time);
  pi2.check_shape(pb.fem, pb.time);
  const auto& fem = pb.fem;
  const auto& p = pb.phys;
  const int M = pb.time.steps;
  (void)c;  // the form is evaluated at (q, u, l) but only u enters the blocks
  YFunctional r = YFunctional::zero(fem, pb.time);
  const SpMat& Mp = fem.mass_phi();
  for (int m = 0; m <= M; ++m) {
    const double w = pb.time.weight(m);
    const SpMat A = fem.degraded_elastic(s.phi[m], p);
    const SpMat G = fem.elastic_cross(s.u[m], s.phi[m], p);
    const SpMat W = fem.elastic_phi_mass(s.u[m], p);
    r.rq[m] = -w * (fem.neumann_matrix().transpose() * pi2.u[m]);
    r.rstate.ru[m] = w * (A * pi2.u[m] + G * pi2.phi[m]);
    r.rstate.rphi[m] = w * (G.transpose() * pi2.u[m] + W * pi2.phi[m] +
                            (p.g_c / p.eps) * (Mp * pi2.phi[m]) +
                            p.g_c * p.eps * (fem.stiffness_phi() * pi2.phi[m]));
  }
  r.rl1 = -(Mp * pi2.phi[0]);
  for (int m = 1; m <= M; ++m) r.rl2[m - 1] = Mp * (pi2.phi[m] - pi2.phi[m - 1]);
  return r;
}

UpperConstraint upper_constraint_G(const Problem& pb, const Control& c, const SpaceTimeState& s,
                                   const LowerMultiplier& l, const Vec& phi0) {
  UpperConstraint g;
  const ConstraintValue cv = constraint_g(pb, s, phi0);
  g.init_gap = cv.init_gap;
  g.stationarity = semilinear_a(pb, c, s, l);
  g.neg_rate = cv.neg_rate;
  g.l2 = l.l2;
  return g;
}

UpperMultiplier UpperMultiplier::zero(const FemSystem& fem, const TimeGrid& tg) {
  UpperMultiplier pi;
  pi.pi1 = Vec::Zero(fem.n_scalar());
  pi.pi2 = Direction::zero(fem, tg);
  pi.pi3.assign(tg.steps, Vec::Zero(fem.n_scalar()));
  pi.pi4.assign(tg.steps, Vec::Zero(fem.n_scalar()));
  return pi;
}

double UpperKKTResidual::max_feasibility() const {
  return std::max({kktn1, kktn2, kktn3, kktn4, kktn5, kktn6});
}

YFunctional upper_stationarity(const Problem& pb, const Control& c, const SpaceTimeState& s,
                               const UpperMultiplier& pi, const ControlProblemSpec& spec) {
  const auto& fem = pb.fem;
  const int M = pb.time.steps;
  const SpMat& Mp = fem.mass_phi();

  // J' part
  YFunctional r = YFunctional::zero(fem, pb.time);
  for (int m = 0; m <= M; ++m) {
    const double w = pb.time.weight(m);
    r.rq[m] = w * spec.alpha * (fem.mass_gamma() * (c.q[m] - spec.q_r));
    r.rstate.rphi[m] = w * (Mp * (s.phi[m] - spec.phi_d));
  }

  // minus pi o G': pi1 and pi3 touch the phi blocks, pi4 the l2 blocks,
  // pi2 acts through the adjoint of a'.
  const YFunctional ad = a_prime_adjoint(pb, c, s, pi.pi2);
  for (int m = 0; m <= M; ++m) {
    r.rq[m] -= ad.rq[m];
    r.rstate.ru[m] -= ad.rstate.ru[m];
    r.rstate.rphi[m] -= ad.rstate.rphi[m];
  }
  r.rl1 -= ad.rl1;
  for (int m = 0; m < M; ++m) r.rl2[m] -= ad.rl2[m];

  r.rstate.rphi[0] -= Mp * (pi.pi1 + pi.pi3[0]);
  for (int m = 1; m < M; ++m) r.rstate.rphi[m] += Mp * (pi.pi3[m - 1] - pi.pi3[m]);
  r.rstate.rphi[M] += Mp * pi.pi3[M - 1];

  for (int m = 0; m < M; ++m) r.rl2[m] -= pb.time.dt() * (Mp * pi.pi4[m]);
  return r;
}

double upper_stationarity_dual_norm(const Problem& pb, const YFunctional& r) {
  const auto& fem = pb.fem;
  const int M = pb.time.steps;
  Eigen::SimplicialLDLT<SpMat> mg(fem.mass_gamma());
  double acc = 0.0;
  for (int m = 0; m <= M; ++m) {
    const double w = pb.time.weight(m);
    acc += r.rq[m].dot(mg.solve(r.rq[m])) / w;
    acc += (fem.dual_norm_sq_vec(r.rstate.ru[m]) + fem.dual_norm_sq_phi(r.rstate.rphi[m])) / w;
  }
  acc += fem.dual_norm_sq_phi(r.rl1);
  for (int m = 0; m < M; ++m) acc += fem.dual_norm_sq_phi(r.rl2[m]) / pb.time.dt();
  return std::sqrt(acc);
}

UpperKKTResidual upper_kkt_residual(const Problem& pb, const Control& c, const SpaceTimeState& s,
                                    const LowerMultiplier& l, const UpperMultiplier& pi,
                                    const ControlProblemSpec& spec, const Vec& phi0) {
  const auto& fem = pb.fem;
  const int M = pb.time.steps;
  const SpMat& Mp = fem.mass_phi();
  UpperKKTResidual out;

  const UpperConstraint g = upper_constraint_G(pb, c, s, l, phi0);
  out.kktn1 = std::sqrt(g.init_gap.dot(Mp * g.init_gap));
  for (int m = 0; m < M; ++m) {
    // neg_rate >= 0 is irreversibility; its violation is the negative part
    out.kktn2 = std::max(out.kktn2, std::max(0.0, -g.neg_rate[m].minCoeff()));
    out.kktn4 = std::max(out.kktn4, std::max(0.0, -g.l2[m].minCoeff()));
    out.kktn5 = std::max(out.kktn5, std::max(0.0, -pi.pi3[m].minCoeff()));
    out.kktn6 = std::max(out.kktn6, std::max(0.0, -pi.pi4[m].minCoeff()));
  }
  out.kktn3 = stationarity_dual_norm(pb, g.stationarity);
  out.kktn7 = upper_stationarity_dual_norm(pb, upper_stationarity(pb, c, s, pi, spec));

  // complementarity pairings against the inequality blocks use the lumped
  // mass, matching the nodal constraint representation of the lower level
  const Vec mlump = Mp * Vec::Ones(fem.n_scalar());
  double comp = (pi.pi1.array() * mlump.array() * g.init_gap.array()).sum() +
                g.stationarity.apply(pi.pi2);
  double pi_sq = pi.pi1.dot(Mp * pi.pi1) + norm_Y(pb, pi.pi2) * norm_Y(pb, pi.pi2);
  for (int m = 1; m <= M; ++m) {
    comp -= (pi.pi3[m - 1].array() * mlump.array() *
             (s.phi[m] - s.phi[m - 1]).array()).sum();
    comp += pb.time.dt() * (pi.pi4[m - 1].array() * mlump.array() *
                            l.l2[m - 1].array()).sum();
    pi_sq += pb.time.dt() * (pi.pi3[m - 1].dot(Mp * pi.pi3[m - 1]) +
                             pi.pi4[m - 1].dot(Mp * pi.pi4[m - 1]));
  }
  out.kktn8 = std::abs(comp);
  out.kktn8_rel = out.kktn8 / std::max(1.0, std::sqrt(pi_sq));
  return out;
}

}  // namespace fraktur
