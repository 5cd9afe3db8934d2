#pragma once

#include <random>
#include <vector>

#include "fraktur/assembly.hpp"
#include "fraktur/params.hpp"

namespace fraktur {

// Nodal trajectories over the time grid: u[m] (vector dofs) and phi[m]
// (scalar dofs) for m = 0..M. u[0] is an equilibrium by-product of the
// forward solve and is excluded from the Y_u part of the space-time norm.
struct SpaceTimeState {
  std::vector<Vec> u;
  std::vector<Vec> phi;

  static SpaceTimeState zero(const FemSystem& fem, const TimeGrid& tg);
  void check_shape(const FemSystem& fem, const TimeGrid& tg) const;
  bool all_finite() const;
  int steps() const { return static_cast<int>(phi.size()) - 1; }
};

// Directions in the state space share the storage layout.
using Direction = SpaceTimeState;

// Boundary control trajectory: q[m] on the Gamma_N nodes, m = 0..M.
struct Control {
  std::vector<Vec> q;

  static Control zero(const FemSystem& fem, const TimeGrid& tg);
  static Control constant_in_time(const FemSystem& fem, const TimeGrid& tg, const Vec& profile);
  void check_shape(const FemSystem& fem, const TimeGrid& tg) const;
  int steps() const { return static_cast<int>(q.size()) - 1; }
};

// A linear functional on directions, stored as co-vector blocks per time
// node. apply() is the duality pairing.
struct DualVector {
  std::vector<Vec> ru;
  std::vector<Vec> rphi;

  static DualVector zero(const FemSystem& fem, const TimeGrid& tg);
  double apply(const Direction& d) const;
};

// Multiplier of the lower-level problem: l1 pairs with phi(0), l2[m-1]
// with the rate on the interval (t_{m-1}, t_m]. Both are stored as nodal
// Riesz representatives against the scalar mass matrix, so the pairing of
// l2 with a field z is l2^T M z.
struct LowerMultiplier {
  Vec l1;
  std::vector<Vec> l2;  // size M

  static LowerMultiplier zero(const FemSystem& fem, const TimeGrid& tg);
  int intervals() const { return static_cast<int>(l2.size()); }
};

SpaceTimeState add_scaled(const SpaceTimeState& s, const Direction& d, double h);

// Deterministic helpers used by checks and tests.
SpaceTimeState random_state(const FemSystem& fem, const TimeGrid& tg, std::mt19937_64& rng,
                            double amplitude = 0.5);
Direction random_direction(const FemSystem& fem, const TimeGrid& tg, std::mt19937_64& rng,
                           double amplitude = 1.0);
Control random_control(const FemSystem& fem, const TimeGrid& tg, std::mt19937_64& rng,
                       double amplitude = 1.0);

}  // namespace fraktur
