#pragma once

#include "fraktur/lower_kkt.hpp"

namespace fraktur {

// Data of the tracking-type control problem: a single desired spatial
// phase-field phi_d, a nominal control profile q_r on Gamma_N, and the
// Tikhonov weight alpha.
struct ControlProblemSpec {
  double alpha = 1e-4;
  Vec phi_d;
  Vec q_r;

  void check_shape(const FemSystem& fem) const;
};

// J(q, u) = 1/2 int_I ( |phi - phi_d|_Omega^2 + alpha |q - q_r|_Gamma_N^2 ),
// trapezoidal in time.
double cost_J(const Problem& pb, const Control& c, const SpaceTimeState& s,
              const ControlProblemSpec& spec);

// Stationarity functional of the lower problem viewed as a map of
// (q, u, l); nonlinear in u, linear in q and l. Equality block 2 of the
// upper constraints.
DualVector semilinear_a(const Problem& pb, const Control& c, const SpaceTimeState& s,
                        const LowerMultiplier& l);

// A direction in the full control-state-multiplier space.
struct YDirection {
  Control dq;
  Direction du;
  LowerMultiplier dl;

  static YDirection zero(const FemSystem& fem, const TimeGrid& tg);
};

// A linear functional on YDirection, stored blockwise.
struct YFunctional {
  std::vector<Vec> rq;  // per time node, Gamma_N dofs
  DualVector rstate;
  Vec rl1;
  std::vector<Vec> rl2;  // per interval

  static YFunctional zero(const FemSystem& fem, const TimeGrid& tg);
  double apply(const YDirection& d) const;
};

// Derivative of the semilinear map at (q, u, l) applied to a direction:
// a functional on Y. Independent of the base multiplier.
DualVector a_prime_action(const Problem& pb, const Control& c, const SpaceTimeState& s,
                          const YDirection& d);

// Adjoint slicing of the same form: fix the Y-element pi2 and view
// pi2 . a'(q,u,l)(.) as a functional on directions.
YFunctional a_prime_adjoint(const Problem& pb, const Control& c, const SpaceTimeState& s,
                            const Direction& pi2);

// Constraint operator of the upper problem. Blocks 1-2 are equalities,
// 3-4 must lie in the nonnegative cones.
struct UpperConstraint {
  Vec init_gap;             // phi(0) - phi0
  DualVector stationarity;  // a(q, u, l)
  std::vector<Vec> neg_rate;
  std::vector<Vec> l2;
};

UpperConstraint upper_constraint_G(const Problem& pb, const Control& c, const SpaceTimeState& s,
                                   const LowerMultiplier& l, const Vec& phi0);

struct UpperMultiplier {
  Vec pi1;                // pairs with the initial gap
  Direction pi2;          // reflexive representative pairing with block 2
  std::vector<Vec> pi3;   // per interval, >= 0 when feasible
  std::vector<Vec> pi4;   // per interval, >= 0 when feasible

  static UpperMultiplier zero(const FemSystem& fem, const TimeGrid& tg);
};

struct UpperKKTResidual {
  double kktn1 = 0.0;     // initial-value gap, L2
  double kktn2 = 0.0;     // irreversibility violation
  double kktn3 = 0.0;     // dual norm of the stationarity block
  double kktn4 = 0.0;     // negative part of l2
  double kktn5 = 0.0;     // negative part of pi3
  double kktn6 = 0.0;     // negative part of pi4
  double kktn7 = 0.0;     // dual norm of J' - pi o G'
  double kktn8 = 0.0;     // |pi G|, unnormalized
  double kktn8_rel = 0.0; // |pi G| / max(1, |pi|)

  double max_feasibility() const;  // components 1-6
};

// The full stationarity functional J' - pi o G' on directions; exposed
// for the least-squares multiplier recovery.
YFunctional upper_stationarity(const Problem& pb, const Control& c, const SpaceTimeState& s,
                               const UpperMultiplier& pi, const ControlProblemSpec& spec);

double upper_stationarity_dual_norm(const Problem& pb, const YFunctional& r);

UpperKKTResidual upper_kkt_residual(const Problem& pb, const Control& c, const SpaceTimeState& s,
                                    const LowerMultiplier& l, const UpperMultiplier& pi,
                                    const ControlProblemSpec& spec, const Vec& phi0);

}  // namespace fraktur
