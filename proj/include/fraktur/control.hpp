#pragma once

#include "fraktur/upper.hpp"

namespace fraktur {

// Gradient of the reduced cost q -> J(q, u(q)) where u(q) is the forward
// solve with its converged active sets frozen. Adjoint of the step (or
// joint space-time) Newton systems; exact under strict complementarity.
struct ReducedGradientResult {
  std::vector<Vec> g;       // per time node, Gamma_N dofs
  int nonsmooth_nodes = 0;  // nodes with both |multiplier| and |rate| tiny

  double norm() const;
};

ReducedGradientResult reduced_gradient(const Problem& pb, const Control& c,
                                       const PdasResult& fwd, const ControlProblemSpec& spec);

struct SolveControlOptions {
  double gtol = 1e-8;
  int max_iter = 200;
  double armijo_c = 1e-4;
  int max_linesearch = 40;
  double ridge = 1e-12;  // multiplier recovery regularization
  PdasOptions pdas;
};

struct ControlHistoryRow {
  int iter = 0;
  double J = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  bool comp_held = false;
};

struct SolveControlResult {
  Control q;
  PdasResult forward;
  UpperMultiplier pi;
  UpperKKTResidual kkt;
  std::vector<ControlHistoryRow> history;
  bool converged = false;
  bool line_search_failed = false;
  bool complementarity_held = false;
};

SolveControlResult solve_control(const Problem& pb, const Vec& phi0,
                                 const ControlProblemSpec& spec,
                                 const SolveControlOptions& opts = {});

// Least-squares recovery of the upper multiplier from the stationarity
// rows, ridge-regularized, with the sign constraints enforced by
// projection afterwards.
UpperMultiplier recover_pi(const Problem& pb, const Control& c, const SpaceTimeState& s,
                           const ControlProblemSpec& spec, double ridge = 1e-12);

}  // namespace fraktur
