#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "fraktur/lower_kkt.hpp"

namespace fraktur {

namespace {

// Nodes where an inequality multiplier has mass: k2-type rates must vanish
// there for the multiplier pairing to drop out structurally.
std::vector<char> blocked_nodes(const FemSystem& fem, const Vec& l2m, double tol) {
  const Vec w = fem.mass_phi() * l2m;
  std::vector<char> blocked(fem.n_scalar(), 0);
  for (int i = 0; i < w.size(); ++i)
    if (std::abs(w[i]) > tol) blocked[i] = 1;
  return blocked;
}

double multiplier_rate_pairing(const Problem& pb, const LowerMultiplier& l, const Direction& d) {
  double pairing = 0.0;
  for (int m = 1; m <= pb.time.steps; ++m)
    pairing -= l.l2[m - 1].dot(pb.fem.mass_phi() * (d.phi[m] - d.phi[m - 1]));
  return pairing;
}

std::vector<int> interior_nodes(const Mesh2D& mesh) {
  std::set<int> bnd;
  for (const auto& e : mesh.boundary_edges) {
    bnd.insert(e.a);
    bnd.insert(e.b);
  }
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(mesh.nodes.size()); ++i)
    if (!bnd.count(i)) out.push_back(i);
  return out;
}

}  // namespace

std::vector<CriticalConeSample> sample_critical_cone(const Problem& pb, const SpaceTimeState& s,
                                                     const LowerMultiplier& l,
                                                     const CriticalConeOptions& opts) {
  s.check_shape(pb.fem, pb.time);
  const int M = pb.time.steps, np = pb.fem.n_scalar();
  std::vector<std::vector<char>> blocked(M);
  for (int m = 0; m < M; ++m) blocked[m] = blocked_nodes(pb.fem, l.l2[m], opts.support_tol);

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0), sym(-1.0, 1.0);

  std::vector<CriticalConeSample> out;
  out.reserve(opts.count + 1);
  for (int k = 0; k <= opts.count; ++k) {
    CriticalConeSample smp;
    smp.dir = Direction::zero(pb.fem, pb.time);
    if (k == 0) {
      // the direction along the solved path itself: phi^m - phi^0
      smp.alpha = 1.0;
      for (int m = 1; m <= M; ++m) smp.dir.phi[m] = s.phi[m] - s.phi[0];
    } else {
      smp.alpha = sym(rng);
      for (int m = 0; m <= M; ++m) smp.dir.u[m] = Vec::NullaryExpr(
          pb.fem.n_vector(), [&](Eigen::Index) { return sym(rng); });
      for (int m = 1; m <= M; ++m) {
        Vec k2 = Vec::NullaryExpr(np, [&](Eigen::Index) { return unit(rng); });
        for (int i = 0; i < np; ++i)
          if (blocked[m - 1][i]) k2[i] = 0.0;
        // integrate -dphi/dt = k2 + alpha * (-(phi_bar rate))
        smp.dir.phi[m] = smp.dir.phi[m - 1] - pb.time.dt() * k2 +
                         smp.alpha * (s.phi[m] - s.phi[m - 1]);
      }
    }
    smp.pairing = multiplier_rate_pairing(pb, l, smp.dir);
    smp.norm_Y = norm_Y(pb, smp.dir);
    out.push_back(std::move(smp));
  }
  return out;
}

SecondOrderReport second_order_necessary_check(const Problem& pb, const SpaceTimeState& s,
                                               const LowerMultiplier& l,
                                               const CriticalConeOptions& opts, double tol) {
  const auto samples = sample_critical_cone(pb, s, l, opts);
  SecondOrderReport rep;
  rep.sample_count = static_cast<int>(samples.size());
  double min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& smp : samples) {
    const double n2 = smp.norm_Y * smp.norm_Y;
    if (n2 <= tol * tol) continue;  // degenerate draw (no growth anywhere)
    const double curv = lagrangian_hessian_form(pb, s, l, smp.dir, smp.dir);
    const double ratio = curv / n2;
    min_ratio = std::min(min_ratio, ratio);
    if (ratio < -tol) ++rep.negative_count;
  }
  rep.min_ratio = min_ratio;
  rep.pass = rep.negative_count == 0;
  return rep;
}

Suff1Report suff1_counterexample(const Problem& pb, const SpaceTimeState& s, const Control& c,
                                 const Vec& phi0, const LowerMultiplier& l) {
  s.check_shape(pb.fem, pb.time);
  const int M = pb.time.steps;
  Suff1Report rep;
  rep.dir = Direction::zero(pb.fem, pb.time);
  for (int m = 0; m <= M; ++m) rep.dir.phi[m] = s.phi[m] - phi0;
  rep.fprime = gradient(pb, s, c).apply(rep.dir);
  rep.pairing = l.l1.dot(pb.fem.mass_phi() * rep.dir.phi[0]) +
                multiplier_rate_pairing(pb, l, rep.dir);
  rep.norm_Y = norm_Y(pb, rep.dir);
  if (rep.norm_Y <= 1e-14)
    throw Inapplicable("suff1_counterexample: phase field never left its initial value");
  return rep;
}

BumpReport discrete_bump(const Problem& pb, const SpaceTimeState& s, double tol) {
  s.check_shape(pb.fem, pb.time);
  const int M = pb.time.steps;
  const std::vector<int> interior = interior_nodes(pb.fem.mesh());
  if (interior.empty()) throw Inapplicable("discrete_bump: mesh has no interior nodes");

  const double dt = pb.time.dt();
  BumpReport best;
  for (int i : interior) {
    double smax = 0.0;
    for (int m = 1; m <= M; ++m) smax = std::max(smax, (s.phi[m - 1][i] - s.phi[m][i]) / dt);
    if (smax <= tol) continue;
    const double thresh = std::max(tol, 0.5 * smax);
    std::vector<int> J;
    double height = smax;
    for (int m = 1; m <= M; ++m) {
      const double rate = (s.phi[m - 1][i] - s.phi[m][i]) / dt;
      if (rate >= thresh) {
        J.push_back(m);
        height = std::min(height, rate);
      }
    }
    if (!J.empty() && height > best.height) {
      best.J = std::move(J);
      best.node = i;
      best.height = height;
    }
  }
  if (best.node < 0)
    throw Inapplicable("discrete_bump: no interior node loses phase-field mass");
  best.psi = Vec::Zero(pb.fem.n_scalar());
  best.psi[best.node] = best.height;
  return best;
}

Suff2Report suff2_counterexample(const Problem& pb, const SpaceTimeState& s,
                                 const LowerMultiplier& l, std::vector<int> etas) {
  Suff2Report rep;
  rep.bump = discrete_bump(pb, s);
  rep.psi_h1_sq = pb.fem.h1_sq_phi(rep.bump.psi);
  const int M = pb.time.steps;
  const double dt = pb.time.dt();

  for (int eta : etas) {
    if (eta < 1 || eta > static_cast<int>(rep.bump.J.size()))
      throw Inapplicable("suff2_counterexample: eta exceeds the carrier interval set");
    // the last eta carrier intervals; the ramp finishes at final time
    std::vector<int> Jeta(rep.bump.J.end() - eta, rep.bump.J.end());

    Direction dir = Direction::zero(pb.fem, pb.time);
    double f = 0.0;
    std::size_t pos = 0;
    for (int m = 1; m <= M; ++m) {
      if (pos < Jeta.size() && Jeta[pos] == m) {
        f += 1.0 / eta;
        ++pos;
      }
      dir.phi[m] = -f * rep.bump.psi;
    }

    Suff2Row row;
    row.eta_intervals = eta;
    row.eta_measure = eta * dt;
    const SpaceTimeNorms nm = spacetime_norms(pb, dir);
    row.norm_sq = nm.norm_Y * nm.norm_Y;
    double rate = 0.0;
    for (int m = 1; m <= M; ++m)
      rate += dt * pb.fem.h1_sq_phi((dir.phi[m] - dir.phi[m - 1]) / dt);
    row.rate_part = rate;
    row.lower_bound = rep.psi_h1_sq / row.eta_measure;
    row.curvature = lagrangian_hessian_form(pb, s, l, dir, dir);
    row.ratio = row.curvature / row.norm_sq;
    row.pairing = multiplier_rate_pairing(pb, l, dir);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace fraktur
