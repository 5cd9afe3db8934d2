#include "fraktur/lower_kkt.hpp"

#include <algorithm>
#include <cmath>

namespace fraktur {

ConstraintValue constraint_g(const Problem& pb, const SpaceTimeState& s, const Vec& phi0) {
  s.check_shape(pb.fem, pb.time);
  if (phi0.size() != pb.fem.n_scalar()) throw std::invalid_argument("constraint_g: phi0 size");
  ConstraintValue g;
  g.init_gap = s.phi[0] - phi0;
  const double dt = pb.time.dt();
  for (int m = 1; m <= pb.time.steps; ++m)
    g.neg_rate.push_back(-(s.phi[m] - s.phi[m - 1]) / dt);
  return g;
}

ConeReport cone_membership_K2(const std::vector<Vec>& z, double tol) {
  ConeReport r;
  double worst = 0.0;
  for (const auto& v : z)
    for (int i = 0; i < v.size(); ++i) worst = std::max(worst, -v[i]);
  r.worst_violation = std::max(0.0, worst);
  r.member = worst <= tol;
  return r;
}

double LowerKKTResidual::max_component() const {
  return std::max({r_stat, r_feas_init, r_feas_irr, r_dual, r_comp});
}

DualVector kkt_stationarity(const Problem& pb, const SpaceTimeState& s, const Control& c,
                            const LowerMultiplier& l) {
  DualVector r = gradient(pb, s, c);
  const SpMat& M = pb.fem.mass_phi();
  const int Msteps = pb.time.steps;
  if (l.intervals() != Msteps || l.l1.size() != pb.fem.n_scalar())
    throw std::invalid_argument("kkt_stationarity: multiplier shape mismatch");
  // l g'(Phi) = <l1, Phi_phi(0)> - sum_m <l2^m, Phi^m - Phi^{m-1}>
  r.rphi[0] -= M * (l.l1 + l.l2[0]);
  for (int m = 1; m < Msteps; ++m) r.rphi[m] += M * (l.l2[m - 1] - l.l2[m]);
  r.rphi[Msteps] += M * l.l2[Msteps - 1];
  return r;
}

double stationarity_dual_norm(const Problem& pb, const DualVector& r) {
  double acc = 0.0;
  for (int m = 0; m <= pb.time.steps; ++m) {
    const double inv_w = 1.0 / pb.time.weight(m);
    acc += inv_w * (pb.fem.dual_norm_sq_vec(r.ru[m]) + pb.fem.dual_norm_sq_phi(r.rphi[m]));
  }
  return std::sqrt(acc);
}

LowerKKTResidual kkt_residual_lower(const Problem& pb, const SpaceTimeState& s, const Control& c,
                                    const Vec& phi0, const LowerMultiplier& l) {
  LowerKKTResidual res;
  const SpMat& M = pb.fem.mass_phi();

  res.r_stat = stationarity_dual_norm(pb, kkt_stationarity(pb, s, c, l));

  const Vec gap = s.phi[0] - phi0;
  res.r_feas_init = std::sqrt(gap.dot(M * gap));

  // Complementarity in the lumped-mass nodal pairing. The multipliers sit on
  // nodal constraints (they enter stationarity as P1 densities), so every
  // product l_i d_i vanishes separately at a complementary point; consistent
  // mass would leak through the overlapping supports of neighbouring hats.
  const Vec mlump = M * Vec::Ones(M.rows());
  double irr = 0.0, dual = 0.0, comp_nodal = 0.0;
  double comp = (l.l1.array() * mlump.array() * gap.array()).sum();
  for (int m = 1; m <= pb.time.steps; ++m) {
    const Vec dphi = s.phi[m] - s.phi[m - 1];
    const Vec& l2 = l.l2[m - 1];
    comp -= (l2.array() * mlump.array() * dphi.array()).sum();
    for (int i = 0; i < dphi.size(); ++i) {
      irr = std::max(irr, dphi[i]);
      dual = std::max(dual, -l2[i]);
      comp_nodal = std::max(comp_nodal, std::min(l2[i], -dphi[i]));
    }
  }
  res.r_feas_irr = std::max(0.0, irr);
  res.r_dual = std::max(0.0, dual);
  res.r_comp = std::abs(comp);
  res.comp_nodal = std::max(0.0, comp_nodal);
  return res;
}

double lagrangian_hessian_form(const Problem& pb, const SpaceTimeState& s,
                               const LowerMultiplier& l, const Direction& a, const Direction& b) {
  (void)l;  // constraints are affine in the state
  return hessian_form(pb, s, a, b);
}

}  // namespace fraktur
