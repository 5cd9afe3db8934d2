#pragma once

#include "fraktur/model.hpp"

namespace fraktur {

// Discrete regularity check at a feasible point, built on the coupling form
//   b((du, dl1), w) = <g_k(phi) C e(du), e(w_u)> + 2(1-k)<phi w_phi C e(du), e(u)>
//                     - <dl1, w_phi(0)>.
// infsup_A is the smallest scaled singular value over the solution factor
// (du, dl1). Over the test factor a direction registers through one of two
// channels: its initial trace w_phi(0) against dl1, or -- when that trace
// vanishes -- the cross coupling with du. infsup_B is the strength of the
// weaker channel, the coupling one measured by its magnitude over
// pure-phase directions; it vanishes precisely in the degenerate states
// e(u) = 0 or phi = 0 reported by the two flags.
struct ProbeReport {
  bool north_ok = false;
  double infsup_A = 0.0;
  double infsup_B = 0.0;
  double infsup_A_u = 0.0;        // pure-displacement sub-block of infsup_A
  double korn_kappa_bound = 0.0;  // kappa-degraded elastic vs H1 eigenvalue
  double sigma_max = 0.0;
  double tol_rel = 0.0;
  bool degenerate_zero_strain = false;  // e(u) = 0 identically
  bool degenerate_zero_phase = false;   // phi = 0 identically
};

ProbeReport regularity_probe(const Problem& pb, const SpaceTimeState& s, double tol_rel = 1e-8);

}  // namespace fraktur
