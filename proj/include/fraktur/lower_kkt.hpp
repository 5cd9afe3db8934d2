#pragma once

#include <random>
#include <vector>

#include "fraktur/errors.hpp"
#include "fraktur/model.hpp"

namespace fraktur {

// Constraint map of the lower-level problem:
//   g_E = phi(0) - phi0            (must vanish)
//   g_I = -phi_dot                 (must lie in the nonnegative cone K2)
// with the rate discretized per interval m as -(phi^m - phi^{m-1}) / dt.
struct ConstraintValue {
  Vec init_gap;               // phi^0 - phi0
  std::vector<Vec> neg_rate;  // size M
};

ConstraintValue constraint_g(const Problem& pb, const SpaceTimeState& s, const Vec& phi0);

// Nodal membership of per-interval fields in K2 = { z >= 0 }.
struct ConeReport {
  bool member = false;
  double worst_violation = 0.0;  // max over nodes/intervals of (-z)_+
};

ConeReport cone_membership_K2(const std::vector<Vec>& z, double tol);

// Residuals of the first-order system. Stationarity and complementarity
// use the declared discrete pairings: co-vector blocks are measured in
// M^{-1}-weighted dual norms with inverse trapezoidal weights in time.
struct LowerKKTResidual {
  double r_stat = 0.0;       // dual norm of gradient - adjoint of g' applied to multiplier
  double r_feas_init = 0.0;  // |phi^0 - phi0| in L2
  double r_feas_irr = 0.0;   // max positive part of phi^m - phi^{m-1}
  double r_dual = 0.0;       // max negative part of l2
  double r_comp = 0.0;       // |<l1, phi0 gap> - sum_m <l2^m, dphi^m>|
  double comp_nodal = 0.0;   // max over nodes of min(l2, -dphi), floored at 0

  double max_component() const;
};

// Stationarity functional: gradient minus the multiplier pairing. Also
// the semilinear map of the upper-level problem.
DualVector kkt_stationarity(const Problem& pb, const SpaceTimeState& s, const Control& c,
                            const LowerMultiplier& l);

double stationarity_dual_norm(const Problem& pb, const DualVector& r);

LowerKKTResidual kkt_residual_lower(const Problem& pb, const SpaceTimeState& s, const Control& c,
                                    const Vec& phi0, const LowerMultiplier& l);

// Hessian of the Lagrangian in the state variables; the constraints are
// affine, so the multiplier block drops and this is the energy Hessian.
double lagrangian_hessian_form(const Problem& pb, const SpaceTimeState& s,
                               const LowerMultiplier& l, const Direction& a, const Direction& b);

// ---------------------------------------------------------------------------
// Primal-dual active set forward solver.

struct PdasOptions {
  double tol = 1e-10;      // residual target (step and joint system)
  int max_newton = 60;     // Newton iterations per active-set
  int max_outer = 40;      // active-set updates per time step
  int max_monolithic = 30; // space-time corrector iterations
  double c_active = -1.0;  // active-set weight; < 0 picks 1e2 g_c / eps
  double levenberg0 = 1e-8;
  bool monolithic_polish = true;  // enforce the joint space-time system
};

struct StepLogEntry {
  int step = 0;
  int outer = 0;
  int newton_iters = 0;
  int active_count = 0;
  double residual = 0.0;
  double energy = 0.0;  // step objective at the (feasibility-clipped) iterate
  double shift = 0.0;   // Levenberg shift used
};

struct PdasResult {
  SpaceTimeState state;
  LowerMultiplier mult;
  std::vector<std::vector<char>> active;  // per interval, per node
  LowerKKTResidual residual;
  std::vector<StepLogEntry> log;
  bool converged = false;
  bool monolithic_applied = false;
  int monolithic_iters = 0;
  LowerKKTResidual residual_sequential;  // before the space-time corrector
};

// Time-sequential semismooth Newton with nodal active sets, followed by a
// residual check of the joint space-time system; when the sequential sweep
// is not a joint KKT point (a node moved earlier and is held later), a
// monolithic space-time corrector runs until the joint residuals pass.
PdasResult pdas_forward_solve(const Problem& pb, const Vec& phi0, const Control& c,
                              const PdasOptions& opts = {});

// ---------------------------------------------------------------------------
// Critical cone machinery at a solved point.

struct CriticalConeOptions {
  int count = 100;
  std::uint64_t seed = 0;
  double support_tol = 1e-10;  // l2 entries above this block nearby k2 mass
};

struct CriticalConeSample {
  Direction dir;
  double alpha = 0.0;       // coefficient of the rate span term
  double pairing = 0.0;     // multiplier pairing, ~0 by construction
  double norm_Y = 0.0;
};

// Directions Phi with Phi_phi(0) = 0 and -Phi_phi_dot = k2 + alpha phi_dot,
// k2 >= 0 supported where the multiplier vanishes (mass neighborhood).
std::vector<CriticalConeSample> sample_critical_cone(const Problem& pb, const SpaceTimeState& s,
                                                     const LowerMultiplier& l,
                                                     const CriticalConeOptions& opts);

struct SecondOrderReport {
  double min_ratio = 0.0;  // min of L''(Phi,Phi)/|Phi|_Y^2 over the samples
  int negative_count = 0;
  int sample_count = 0;
  bool pass = false;
};

SecondOrderReport second_order_necessary_check(const Problem& pb, const SpaceTimeState& s,
                                               const LowerMultiplier& l,
                                               const CriticalConeOptions& opts,
                                               double tol = 1e-8);

// ---------------------------------------------------------------------------
// Counterexample constructors for the two classical sufficiency conditions.

// Phi = (0, phi_bar - phi0): feasible critical direction with f'(Phi) = 0,
// refuting first-order growth whenever the crack moved at all.
struct Suff1Report {
  Direction dir;
  double fprime = 0.0;     // f'(u_bar)(Phi)
  double pairing = 0.0;    // l g'(u_bar)(Phi); equals fprime at a KKT point
  double norm_Y = 0.0;
};

Suff1Report suff1_counterexample(const Problem& pb, const SpaceTimeState& s, const Control& c,
                                 const Vec& phi0, const LowerMultiplier& l);

// Nodal analogue of the measurable-selection bump: a single-node hat
// Psi >= 0 sandwiched under the crack rate on a set J of intervals.
struct BumpReport {
  std::vector<int> J;   // interval indices (1-based in time, stored 1..M)
  int node = -1;        // interior node carrying the hat
  double height = 0.0;
  Vec psi;              // nodal field, zero outside `node`
};

BumpReport discrete_bump(const Problem& pb, const SpaceTimeState& s, double tol = 1e-12);

// The scaled ramp family Phi_eta = (0, -f_eta(t) Psi): members of the
// extended critical cone whose curvature-to-norm ratio collapses like eta.
struct Suff2Row {
  int eta_intervals = 0;
  double eta_measure = 0.0;   // eta * dt
  double norm_sq = 0.0;       // |Phi_eta|_Y^2
  double rate_part = 0.0;     // backward-difference part, = |Psi|_{V_phi}^2 / eta exactly
  double lower_bound = 0.0;   // |Psi|_{V_phi}^2 / eta_measure
  double curvature = 0.0;     // L''(Phi_eta, Phi_eta)
  double ratio = 0.0;         // curvature / norm_sq
  double pairing = 0.0;       // multiplier pairing of the induced rate, <= tol
};

struct Suff2Report {
  BumpReport bump;
  double psi_h1_sq = 0.0;
  std::vector<Suff2Row> rows;  // decreasing eta
};

Suff2Report suff2_counterexample(const Problem& pb, const SpaceTimeState& s,
                                 const LowerMultiplier& l, std::vector<int> etas = {4, 2, 1});

}  // namespace fraktur
