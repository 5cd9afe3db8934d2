#pragma once

#include "fraktur/assembly.hpp"
#include "fraktur/params.hpp"
#include "fraktur/state.hpp"

namespace fraktur {

// One problem instance: discretization plus model constants. The crack
// energy of a state (u, phi) under the control q is
//   f = 1/2 <g_kappa(phi) C e(u), e(u)>  + G_c/(2 eps) |1 - phi|^2
//     + G_c eps / 2 |grad phi|^2 - <q, u . d>_{Gamma_N},
// all integrated over I x Omega with the trapezoidal rule in time.
struct Problem {
  FemSystem fem;
  TimeGrid time;
  PhysParams phys;

  Problem(Mesh2D mesh, NeumannForce force, TimeGrid tg, PhysParams pp)
      : fem(std::move(mesh), force), time(tg), phys(pp) {
    phys.validate();
  }
  Problem(const Problem&) = delete;
  Problem& operator=(const Problem&) = delete;
};

double energy(const Problem& pb, const SpaceTimeState& s, const Control& c);

// First derivative as a functional on directions.
DualVector gradient(const Problem& pb, const SpaceTimeState& s, const Control& c);

// Second derivative, the symmetric bilinear extension of the quadratic
// form: the mixed elastic term splits evenly over the two slots.
double hessian_form(const Problem& pb, const SpaceTimeState& s, const Direction& a,
                    const Direction& b);

struct SpaceTimeNorms {
  double norm_Yu = 0.0;   // sqrt( sum_{m>=1} w_m |u^m|_{H1}^2 )
  double norm_Yphi = 0.0; // values by trapezoid + backward-difference rates
  double norm_Y = 0.0;    // sqrt(norm_Yu^2 + norm_Yphi^2)
};

SpaceTimeNorms spacetime_norms(const Problem& pb, const SpaceTimeState& s);

double norm_Y(const Problem& pb, const SpaceTimeState& s);

// L2(I x Omega) norms of phi and grad phi (third estimate checks).
double spacetime_l2_phi(const Problem& pb, const SpaceTimeState& s);
double spacetime_l2_grad_phi(const Problem& pb, const SpaceTimeState& s);

}  // namespace fraktur
