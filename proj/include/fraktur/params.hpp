#pragma once

#include <stdexcept>
#include <vector>

namespace fraktur {

// Material and model constants. The degradation is
//   g_kappa(phi) = (1 - kappa) phi^2 + kappa,
// the elasticity tensor C e = 2 mu e + lambda tr(e) I.
struct PhysParams {
  double eps = 0.1;     // phase-field length scale, > 0
  double kappa = 0.1;   // residual stiffness, in (0, 1)
  double mu = 1.0;      // shear modulus, > 0
  double lambda = 1.0;  // Lame parameter, > -2 mu / 3
  double g_c = 1.0;     // fracture toughness, > 0

  PhysParams() = default;
  PhysParams(double eps_, double kappa_, double mu_, double lambda_, double g_c_)
      : eps(eps_), kappa(kappa_), mu(mu_), lambda(lambda_), g_c(g_c_) {
    validate();
  }

  void validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("params: eps must be > 0");
    if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("params: kappa must be in (0,1)");
    if (!(mu > 0.0)) throw std::invalid_argument("params: mu must be > 0");
    if (!(lambda > -2.0 * mu / 3.0)) throw std::invalid_argument("params: lambda must be > -2 mu / 3");
    if (!(g_c > 0.0)) throw std::invalid_argument("params: g_c must be > 0");
  }

  double degradation(double phi) const { return (1.0 - kappa) * phi * phi + kappa; }
};

// Uniform grid on [0, T]: nodes t_m = m dt, m = 0..M. Time integrals of
// nodal quantities use the composite trapezoidal rule; rates use backward
// differences attributed to the interval (t_{m-1}, t_m].
struct TimeGrid {
  double t_final = 1.0;
  int steps = 1;  // M

  TimeGrid() = default;
  TimeGrid(double T, int M) : t_final(T), steps(M) {
    if (!(T > 0.0)) throw std::invalid_argument("time grid: t_final must be > 0");
    if (M < 1) throw std::invalid_argument("time grid: steps must be >= 1");
  }

  double dt() const { return t_final / steps; }
  double node(int m) const { return m * dt(); }
  // trapezoidal weight of node m
  double weight(int m) const { return (m == 0 || m == steps) ? 0.5 * dt() : dt(); }
};

}  // namespace fraktur
