#include "fraktur/model.hpp"

#include <cmath>

namespace fraktur {

double energy(const Problem& pb, const SpaceTimeState& s, const Control& c) {
  s.check_shape(pb.fem, pb.time);
  c.check_shape(pb.fem, pb.time);
  const auto& fem = pb.fem;
  const auto& p = pb.phys;
  const Vec ones = Vec::Ones(fem.n_scalar());
  double total = 0.0;
  for (int m = 0; m <= pb.time.steps; ++m) {
    const double w = pb.time.weight(m);
    const Vec miss = ones - s.phi[m];
    double slice = fem.elastic_energy(s.u[m], s.phi[m], p);
    slice += 0.5 * p.g_c / p.eps * miss.dot(fem.mass_phi() * miss);
    slice += 0.5 * p.g_c * p.eps * s.phi[m].dot(fem.stiffness_phi() * s.phi[m]);
    slice -= s.u[m].dot(fem.neumann_load(c.q[m]));
    total += w * slice;
  }
  return total;
}

DualVector gradient(const Problem& pb, const SpaceTimeState& s, const Control& c) {
  s.check_shape(pb.fem, pb.time);
  c.check_shape(pb.fem, pb.time);
  const auto& fem = pb.fem;
  const auto& p = pb.phys;
  const Vec ones = Vec::Ones(fem.n_scalar());
  DualVector g = DualVector::zero(fem, pb.time);
  for (int m = 0; m <= pb.time.steps; ++m) {
    const double w = pb.time.weight(m);
    const SpMat A = fem.degraded_elastic(s.phi[m], p);
    const SpMat W = fem.elastic_phi_mass(s.u[m], p);
    g.ru[m] = w * (A * s.u[m] - fem.neumann_load(c.q[m]));
    g.rphi[m] = w * (W * s.phi[m] - p.g_c / p.eps * (fem.mass_phi() * (ones - s.phi[m])) +
                     p.g_c * p.eps * (fem.stiffness_phi() * s.phi[m]));
  }
  return g;
}

double hessian_form(const Problem& pb, const SpaceTimeState& s, const Direction& a,
                    const Direction& b) {
  s.check_shape(pb.fem, pb.time);
  a.check_shape(pb.fem, pb.time);
  b.check_shape(pb.fem, pb.time);
  const auto& fem = pb.fem;
  const auto& p = pb.phys;
  double total = 0.0;
  for (int m = 0; m <= pb.time.steps; ++m) {
    const double w = pb.time.weight(m);
    const SpMat A = fem.degraded_elastic(s.phi[m], p);
    const SpMat W = fem.elastic_phi_mass(s.u[m], p);
    const SpMat G = fem.elastic_cross(s.u[m], s.phi[m], p);
    double slice = a.u[m].dot(A * b.u[m]);
    // mixed term 4(1-kappa)<phi dphi C e(u), e(du)> polarized 2 + 2
    slice += a.u[m].dot(G * b.phi[m]) + b.u[m].dot(G * a.phi[m]);
    slice += a.phi[m].dot(W * b.phi[m]);
    slice += p.g_c / p.eps * a.phi[m].dot(fem.mass_phi() * b.phi[m]);
    slice += p.g_c * p.eps * a.phi[m].dot(fem.stiffness_phi() * b.phi[m]);
    total += w * slice;
  }
  return total;
}

SpaceTimeNorms spacetime_norms(const Problem& pb, const SpaceTimeState& s) {
  s.check_shape(pb.fem, pb.time);
  const auto& fem = pb.fem;
  const double dt = pb.time.dt();
  double uu = 0.0, pp = 0.0;
  for (int m = 1; m <= pb.time.steps; ++m) {
    uu += pb.time.weight(m) * fem.h1_sq_vec(s.u[m]);  // u^0 is a by-product, not part of Y_u
  }
  for (int m = 0; m <= pb.time.steps; ++m) pp += pb.time.weight(m) * fem.h1_sq_phi(s.phi[m]);
  for (int m = 1; m <= pb.time.steps; ++m) {
    const Vec rate = (s.phi[m] - s.phi[m - 1]) / dt;
    pp += dt * fem.h1_sq_phi(rate);
  }
  SpaceTimeNorms n;
  n.norm_Yu = std::sqrt(uu);
  n.norm_Yphi = std::sqrt(pp);
  n.norm_Y = std::sqrt(uu + pp);
  return n;
}

double norm_Y(const Problem& pb, const SpaceTimeState& s) { return spacetime_norms(pb, s).norm_Y; }

double spacetime_l2_phi(const Problem& pb, const SpaceTimeState& s) {
  double v = 0.0;
  for (int m = 0; m <= pb.time.steps; ++m)
    v += pb.time.weight(m) * s.phi[m].dot(pb.fem.mass_phi() * s.phi[m]);
  return std::sqrt(v);
}

double spacetime_l2_grad_phi(const Problem& pb, const SpaceTimeState& s) {
  double v = 0.0;
  for (int m = 0; m <= pb.time.steps; ++m)
    v += pb.time.weight(m) * s.phi[m].dot(pb.fem.stiffness_phi() * s.phi[m]);
  return std::sqrt(v);
}

}  // namespace fraktur
