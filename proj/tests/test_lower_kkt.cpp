#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fraktur/lower_kkt.hpp"
#include "test_support.hpp"

using namespace fraktur;

TEST_CASE("constraint map on a linearly decaying phase field") {
  auto pb = testsup::make_problem(2, 4);
  const int np = pb->fem.n_scalar();
  const int M = pb->time.steps;
  std::mt19937_64 rng(1);
  Vec psi(np);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < np; ++i) psi[i] = 0.5 * u01(rng);

  const Vec phi0 = Vec::Ones(np);
  SpaceTimeState s = SpaceTimeState::zero(pb->fem, pb->time);
  for (int m = 0; m <= M; ++m) s.phi[m] = phi0 - (static_cast<double>(m) / M) * psi;

  const ConstraintValue g = constraint_g(*pb, s, phi0);
  CHECK(g.init_gap.norm() == 0.0);
  REQUIRE(static_cast<int>(g.neg_rate.size()) == M);
  // -phi_dot = psi / T on every interval
  for (int m = 0; m < M; ++m)
    CHECK((g.neg_rate[m] - psi / pb->time.t_final).norm() <= 1e-13 * psi.norm());
  CHECK(cone_membership_K2(g.neg_rate, 1e-12).member);

  // healing on one interval breaks membership by exactly its magnitude
  SpaceTimeState bad = s;
  bad.phi[2][0] = bad.phi[1][0] + 0.3 * pb->time.dt();
  const ConstraintValue gb = constraint_g(*pb, bad, phi0);
  const ConeReport rep = cone_membership_K2(gb.neg_rate, 1e-12);
  CHECK_FALSE(rep.member);
  CHECK(rep.worst_violation == doctest::Approx(0.3).epsilon(1e-10));
}

TEST_CASE("first-order residuals vanish at the intact stationary point") {
  auto pb = testsup::make_problem(3, 3);
  SpaceTimeState s = SpaceTimeState::zero(pb->fem, pb->time);
  const Vec phi0 = Vec::Ones(pb->fem.n_scalar());
  for (auto& phi : s.phi) phi = phi0;
  const Control c = Control::zero(pb->fem, pb->time);
  const LowerMultiplier l = LowerMultiplier::zero(pb->fem, pb->time);

  const LowerKKTResidual r = kkt_residual_lower(*pb, s, c, phi0, l);
  CHECK(r.r_stat <= 1e-13);
  CHECK(r.r_feas_init == 0.0);
  CHECK(r.r_feas_irr == 0.0);
  CHECK(r.r_dual == 0.0);
  CHECK(r.r_comp == 0.0);
  CHECK(r.comp_nodal == 0.0);
  CHECK(r.max_component() <= 1e-13);
}

TEST_CASE("stationarity functional: multiplier pairing enters with the declared signs") {
  auto pb = testsup::make_problem(2, 3);
  std::mt19937_64 rng(17);
  const SpaceTimeState s = random_state(pb->fem, pb->time, rng);
  const Control c = random_control(pb->fem, pb->time, rng);
  LowerMultiplier l = LowerMultiplier::zero(pb->fem, pb->time);
  l.l1 = Vec::Random(pb->fem.n_scalar());
  for (auto& v : l.l2) v = Vec::Random(pb->fem.n_scalar()).cwiseAbs();

  const DualVector grad = gradient(*pb, s, c);
  const DualVector stat = kkt_stationarity(*pb, s, c, l);
  const SpMat& M = pb->fem.mass_phi();
  for (int trial = 0; trial < 5; ++trial) {
    const Direction d = random_direction(pb->fem, pb->time, rng);
    double pairing = l.l1.dot(M * d.phi[0]);
    for (int m = 1; m <= pb->time.steps; ++m)
      pairing -= l.l2[m - 1].dot(M * (d.phi[m] - d.phi[m - 1]));
    CHECK(stat.apply(d) ==
          doctest::Approx(grad.apply(d) - pairing).epsilon(1e-12));
  }
}

TEST_CASE("dual norm of a residual functional uses inverse mass and time weights") {
  auto pb = testsup::make_problem(2, 3);
  std::mt19937_64 rng(23);
  DualVector r = DualVector::zero(pb->fem, pb->time);
  for (int m = 0; m <= pb->time.steps; ++m) {
    r.ru[m] = Vec::Random(pb->fem.n_vector());
    r.rphi[m] = Vec::Random(pb->fem.n_scalar());
  }
  double expect = 0.0;
  for (int m = 0; m <= pb->time.steps; ++m) {
    const double w = pb->time.weight(m);
    expect += (r.ru[m].dot(pb->fem.solve_mass_vec(r.ru[m])) +
               r.rphi[m].dot(pb->fem.solve_mass_phi(r.rphi[m]))) /
              w;
  }
  CHECK(stationarity_dual_norm(*pb, r) == doctest::Approx(std::sqrt(expect)).epsilon(1e-12));
}

TEST_CASE("complementarity residual matches its definition") {
  auto pb = testsup::make_problem(2, 2);
  std::mt19937_64 rng(31);
  const SpaceTimeState s = random_state(pb->fem, pb->time, rng);
  const Control c = random_control(pb->fem, pb->time, rng);
  const Vec phi0 = s.phi[0] + 0.01 * Vec::Random(pb->fem.n_scalar());
  LowerMultiplier l = LowerMultiplier::zero(pb->fem, pb->time);
  l.l1 = Vec::Random(pb->fem.n_scalar());
  for (auto& v : l.l2) v = Vec::Random(pb->fem.n_scalar()).cwiseAbs();

  // nodal pairing under the lumped mass
  const Vec mlump = pb->fem.mass_phi() * Vec::Ones(pb->fem.n_scalar());
  double comp = (l.l1.array() * mlump.array() * (s.phi[0] - phi0).array()).sum();
  for (int m = 1; m <= pb->time.steps; ++m)
    comp -= (l.l2[m - 1].array() * mlump.array() *
             (s.phi[m] - s.phi[m - 1]).array()).sum();
  const LowerKKTResidual r = kkt_residual_lower(*pb, s, c, phi0, l);
  CHECK(r.r_comp == doctest::Approx(std::abs(comp)).epsilon(1e-12));
}

TEST_CASE("constraints are affine: the Lagrangian Hessian is the energy Hessian") {
  auto pb = testsup::make_problem(2, 3);
  std::mt19937_64 rng(37);
  const SpaceTimeState s = random_state(pb->fem, pb->time, rng);
  LowerMultiplier l = LowerMultiplier::zero(pb->fem, pb->time);
  l.l1 = Vec::Random(pb->fem.n_scalar());
  for (auto& v : l.l2) v = Vec::Random(pb->fem.n_scalar()).cwiseAbs();
  for (int trial = 0; trial < 5; ++trial) {
    const Direction a = random_direction(pb->fem, pb->time, rng);
    const Direction b = random_direction(pb->fem, pb->time, rng);
    CHECK(lagrangian_hessian_form(*pb, s, l, a, b) ==
          doctest::Approx(hessian_form(*pb, s, a, b)).epsilon(1e-12));
  }
}
