#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <optional>
#include <random>

#include "fraktur/lower_kkt.hpp"
#include "fraktur/scenario.hpp"
#include "test_support.hpp"

using namespace fraktur;

namespace {

// Residual of a frozen-active-set stationarity system, assembled from the
// verified operator blocks; the enumeration oracle below drives it with a
// finite-difference Jacobian so its Newton path shares no code with the
// production solver.
struct FrozenSeqSystem {
  const Problem& pb;
  Vec q;        // control at this step
  Vec bound;    // previous phase field
  std::vector<int> active;

  int dim() const {
    return pb.fem.n_vector() + pb.fem.n_scalar() + static_cast<int>(active.size());
  }

  Vec residual(const Vec& x) const {
    const int nu = pb.fem.n_vector(), np = pb.fem.n_scalar();
    const Vec u = x.segment(0, nu);
    const Vec phi = x.segment(nu, np);
    const Vec lam = x.segment(nu + np, active.size());
    Vec r(dim());
    r.segment(0, nu) = pb.fem.degraded_elastic(phi, pb.phys) * u - pb.fem.neumann_load(q);
    Vec rphi = pb.fem.elastic_phi_mass(u, pb.phys) * phi -
               (pb.phys.g_c / pb.phys.eps) * (pb.fem.mass_phi() * (Vec::Ones(np) - phi)) +
               pb.phys.g_c * pb.phys.eps * (pb.fem.stiffness_phi() * phi);
    for (std::size_t k = 0; k < active.size(); ++k)
      rphi += lam[k] * Vec(pb.fem.mass_phi().col(active[k]));
    r.segment(nu, np) = rphi;
    for (std::size_t k = 0; k < active.size(); ++k)
      r[nu + np + static_cast<int>(k)] = phi[active[k]] - bound[active[k]];
    return r;
  }
};

template <class Sys>
std::optional<Vec> newton_fd(const Sys& sys, Vec x, int maxit = 60, double tol = 1e-12) {
  const int n = sys.dim();
  for (int it = 0; it < maxit; ++it) {
    const Vec r = sys.residual(x);
    if (r.norm() <= tol) return x;
    Eigen::MatrixXd J(n, n);
    for (int j = 0; j < n; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[j]));
      Vec xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      J.col(j) = (sys.residual(xp) - sys.residual(xm)) / (2.0 * h);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) return std::nullopt;
    const Vec dx = lu.solve(-r);
    x += dx;
    if (!x.allFinite()) return std::nullopt;
  }
  return sys.residual(x).norm() <= 1e-10 ? std::optional<Vec>(x) : std::nullopt;
}

double step_objective(const Problem& pb, const Vec& u, const Vec& phi, const Vec& q) {
  const int np = pb.fem.n_scalar();
  const Vec omp = Vec::Ones(np) - phi;
  return pb.fem.elastic_energy(u, phi, pb.phys) +
         pb.phys.g_c / (2.0 * pb.phys.eps) * omp.dot(pb.fem.mass_phi() * omp) +
         pb.phys.g_c * pb.phys.eps / 2.0 * phi.dot(pb.fem.stiffness_phi() * phi) -
         u.dot(pb.fem.neumann_load(q));
}

// All subsets of {0..np-1} as index lists.
std::vector<std::vector<int>> all_subsets(int np) {
  std::vector<std::vector<int>> out;
  for (int mask = 0; mask < (1 << np); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < np; ++i)
      if (mask & (1 << i)) s.push_back(i);
    out.push_back(std::move(s));
  }
  return out;
}

// Sequential exhaustive enumeration: per step, solve the frozen system for
// every active set, keep feasible first-order points, take the one with the
// lowest step objective.
struct SeqOracle {
  std::vector<Vec> u, phi, lam;  // lam: full nodal, zero off the winning set
};

SeqOracle enumerate_sequential(const Problem& pb, const Vec& phi0, const Control& c) {
  const int nu = pb.fem.n_vector(), np = pb.fem.n_scalar();
  SeqOracle out;
  // initial displacement: equilibrium at the initial phase field, obtained
  // by freezing phi at phi0 through a full active set
  FrozenSeqSystem init_full{pb, c.q[0], phi0, {}};
  init_full.active.resize(np);
  for (int i = 0; i < np; ++i) init_full.active[i] = i;
  Vec xf(nu + np + np);
  xf.setZero();
  xf.segment(nu, np) = phi0;
  auto sol0 = newton_fd(init_full, xf);
  REQUIRE(sol0.has_value());
  out.u.push_back(sol0->segment(0, nu));
  out.phi.push_back(phi0);
  out.lam.push_back(Vec::Zero(np));

  for (int m = 1; m <= pb.time.steps; ++m) {
    const Vec bound = out.phi.back();
    double best_e = std::numeric_limits<double>::infinity();
    Vec best_u, best_phi, best_lam;
    bool found = false;
    for (const auto& A : all_subsets(np)) {
      FrozenSeqSystem sys{pb, c.q[m], bound, A};
      Vec x(sys.dim());
      x.segment(0, nu) = out.u.back();
      x.segment(nu, np) = bound;
      x.segment(nu + np, A.size()).setZero();
      auto sol = newton_fd(sys, x);
      if (!sol) continue;
      const Vec u = sol->segment(0, nu);
      const Vec phi = sol->segment(nu, np);
      const Vec lamA = sol->segment(nu + np, A.size());
      if ((phi - bound).maxCoeff() > 1e-9) continue;   // feasibility
      if (!A.empty() && lamA.minCoeff() < -1e-9) continue;  // dual sign
      const double e = step_objective(pb, u, phi, c.q[m]);
      if (e < best_e - 1e-14) {
        best_e = e;
        best_u = u;
        best_phi = phi;
        best_lam = Vec::Zero(np);
        for (std::size_t k = 0; k < A.size(); ++k) best_lam[A[k]] = lamA[k];
        found = true;
      }
    }
    REQUIRE(found);
    out.u.push_back(best_u);
    out.phi.push_back(best_phi);
    out.lam.push_back(best_lam);
  }
  return out;
}

// Joint space-time system over frozen per-interval active sets (two steps).
struct FrozenJointSystem {
  const Problem& pb;
  Vec phi0;
  std::vector<Vec> q;            // q[1], q[2]
  std::vector<std::vector<int>> A;  // A[0], A[1]

  int dim() const {
    return 2 * (pb.fem.n_vector() + pb.fem.n_scalar()) +
           static_cast<int>(A[0].size() + A[1].size());
  }

  Vec residual(const Vec& x) const {
    const int nu = pb.fem.n_vector(), np = pb.fem.n_scalar();
    const Vec u1 = x.segment(0, nu), phi1 = x.segment(nu, np);
    const Vec u2 = x.segment(nu + np, nu), phi2 = x.segment(2 * nu + np, np);
    const int base = 2 * (nu + np);
    const Vec l21 = x.segment(base, A[0].size());
    const Vec l22 = x.segment(base + A[0].size(), A[1].size());
    const double w1 = pb.time.weight(1), w2 = pb.time.weight(2);

    auto grad_u = [&](const Vec& u, const Vec& phi, const Vec& qm) {
      return Vec(pb.fem.degraded_elastic(phi, pb.phys) * u - pb.fem.neumann_load(qm));
    };
    auto grad_phi = [&](const Vec& u, const Vec& phi) {
      return Vec(pb.fem.elastic_phi_mass(u, pb.phys) * phi -
                 (pb.phys.g_c / pb.phys.eps) * (pb.fem.mass_phi() * (Vec::Ones(np) - phi)) +
                 pb.phys.g_c * pb.phys.eps * (pb.fem.stiffness_phi() * phi));
    };

    Vec r(dim());
    r.segment(0, nu) = w1 * grad_u(u1, phi1, q[0]);
    Vec rphi1 = w1 * grad_phi(u1, phi1);
    for (std::size_t k = 0; k < A[0].size(); ++k)
      rphi1 += l21[k] * Vec(pb.fem.mass_phi().col(A[0][k]));
    for (std::size_t k = 0; k < A[1].size(); ++k)
      rphi1 -= l22[k] * Vec(pb.fem.mass_phi().col(A[1][k]));
    r.segment(nu, np) = rphi1;
    r.segment(nu + np, nu) = w2 * grad_u(u2, phi2, q[1]);
    Vec rphi2 = w2 * grad_phi(u2, phi2);
    for (std::size_t k = 0; k < A[1].size(); ++k)
      rphi2 += l22[k] * Vec(pb.fem.mass_phi().col(A[1][k]));
    r.segment(2 * nu + np, np) = rphi2;
    int row = base;
    for (int i : A[0]) r[row++] = phi1[i] - phi0[i];
    for (int i : A[1]) r[row++] = phi2[i] - phi1[i];
    return r;
  }
};

}  // namespace

TEST_CASE("no load, intact field: the solve is a fixed point with empty sets") {
  auto pb = testsup::make_problem(3, 4);
  const Vec phi0 = Vec::Ones(pb->fem.n_scalar());
  const Control c = Control::zero(pb->fem, pb->time);
  const PdasResult res = pdas_forward_solve(*pb, phi0, c);
  CHECK(res.converged);
  CHECK_FALSE(res.monolithic_applied);
  for (int m = 0; m <= pb->time.steps; ++m) {
    CHECK(res.state.u[m].norm() == 0.0);
    CHECK((res.state.phi[m] - phi0).norm() == 0.0);
  }
  for (const auto& act : res.active)
    for (char a : act) CHECK(a == 0);
  CHECK(res.residual.max_component() <= 1e-12);
  CHECK(res.mult.l1.norm() <= 1e-12);
}

TEST_CASE("input validation") {
  auto pb = testsup::make_problem(2, 2);
  const Control c = Control::zero(pb->fem, pb->time);
  Vec bad = Vec::Ones(pb->fem.n_scalar());
  bad[0] = 1.5;
  CHECK_THROWS_AS(pdas_forward_solve(*pb, bad, c), std::invalid_argument);
  bad[0] = -0.2;
  CHECK_THROWS_AS(pdas_forward_solve(*pb, bad, c), std::invalid_argument);
}

TEST_CASE("shipped scenarios: joint first-order system satisfied tightly") {
  for (auto make : {preset_zero_force, preset_pull, preset_precracked}) {
    const ScenarioInstance inst(make());
    CAPTURE(inst.cfg.name);
    const PdasResult res = pdas_forward_solve(inst.problem, inst.phi0, inst.control,
                                              inst.cfg.pdas);
    CHECK(res.converged);
    CHECK(res.residual.max_component() <= 1e-8);
    CHECK(res.residual.comp_nodal <= 1e-10);

    // irreversibility holds nodally
    for (int m = 1; m <= inst.problem.time.steps; ++m)
      CHECK((res.state.phi[m] - res.state.phi[m - 1]).maxCoeff() <= 1e-12);

    // the logged step objective never increases along the active-set loop
    for (std::size_t i = 0; i + 1 < res.log.size(); ++i) {
      if (res.log[i + 1].step != res.log[i].step) continue;
      CHECK(res.log[i + 1].energy <=
            res.log[i].energy + 1e-12 * std::max(1.0, std::abs(res.log[i].energy)));
    }
  }
}

TEST_CASE("two-triangle, two-step solve equals sequential exhaustive enumeration") {
  auto pb = testsup::make_problem(1, 2);
  ScenarioConfig sc;
  sc.mesh_n = 1;
  sc.steps = 2;
  sc.load_kind = "ramp";
  sc.load_magnitude = 0.6;
  const Control c = build_control(sc, pb->fem, pb->time);
  const Vec phi0 = Vec::Ones(pb->fem.n_scalar());

  const SeqOracle oracle = enumerate_sequential(*pb, phi0, c);
  const PdasResult res = pdas_forward_solve(*pb, phi0, c);
  REQUIRE(res.converged);

  double worst = 0.0;
  for (int m = 0; m <= 2; ++m) {
    worst = std::max(worst, (res.state.u[m] - oracle.u[m]).cwiseAbs().maxCoeff());
    worst = std::max(worst, (res.state.phi[m] - oracle.phi[m]).cwiseAbs().maxCoeff());
  }
  // multiplier accumulated backward from the per-step duals
  Vec accum = Vec::Zero(pb->fem.n_scalar());
  for (int m = 2; m >= 1; --m) {
    accum += pb->time.weight(m) * oracle.lam[m];
    worst = std::max(worst, (res.mult.l2[m - 1] - accum).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("load reversal: greedy marching violates joint complementarity, corrector repairs it") {
  auto pb = testsup::make_problem(1, 2);
  ScenarioConfig sc;
  sc.mesh_n = 1;
  sc.steps = 2;
  sc.load_kind = "updown";
  sc.load_magnitude = 0.6;
  const Control c = build_control(sc, pb->fem, pb->time);
  const Vec phi0 = Vec::Ones(pb->fem.n_scalar());

  const PdasResult res = pdas_forward_solve(*pb, phi0, c);
  REQUIRE(res.converged);
  CHECK(res.monolithic_applied);
  CHECK(res.residual_sequential.r_comp > 1e-6);
  CHECK(res.residual.max_component() <= 1e-8);
  CHECK(res.residual.comp_nodal <= 1e-10);

  // joint exhaustive enumeration over per-interval active sets
  const int nu = pb->fem.n_vector(), np = pb->fem.n_scalar();
  bool matched = false;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& A1 : all_subsets(np)) {
    for (const auto& A2 : all_subsets(np)) {
      FrozenJointSystem sys{*pb, phi0, {c.q[1], c.q[2]}, {A1, A2}};
      Vec x(sys.dim());
      x.setZero();
      x.segment(nu, np) = phi0;
      x.segment(2 * nu + np, np) = phi0;
      auto sol = newton_fd(sys, x);
      if (!sol) continue;
      const Vec phi1 = sol->segment(nu, np), phi2 = sol->segment(2 * nu + np, np);
      if ((phi1 - phi0).maxCoeff() > 1e-9) continue;
      if ((phi2 - phi1).maxCoeff() > 1e-9) continue;
      const int base = 2 * (nu + np);
      const Vec l21 = sol->segment(base, A1.size());
      const Vec l22 = sol->segment(base + A1.size(), A2.size());
      if ((A1.size() && l21.minCoeff() < -1e-9) || (A2.size() && l22.minCoeff() < -1e-9))
        continue;
      // nodal complementarity of the candidate
      bool comp_ok = true;
      Vec l21full = Vec::Zero(np), l22full = Vec::Zero(np);
      for (std::size_t k = 0; k < A1.size(); ++k) l21full[A1[k]] = l21[k];
      for (std::size_t k = 0; k < A2.size(); ++k) l22full[A2[k]] = l22[k];
      for (int i = 0; i < np; ++i) {
        if (std::min(l21full[i], phi0[i] - phi1[i]) > 1e-9) comp_ok = false;
        if (std::min(l22full[i], phi1[i] - phi2[i]) > 1e-9) comp_ok = false;
      }
      if (!comp_ok) continue;

      double dist = std::max((res.state.phi[1] - phi1).cwiseAbs().maxCoeff(),
                             (res.state.phi[2] - phi2).cwiseAbs().maxCoeff());
      dist = std::max(dist, (res.state.u[1] - sol->segment(0, nu)).cwiseAbs().maxCoeff());
      dist = std::max(dist, (res.state.u[2] - sol->segment(nu + np, nu)).cwiseAbs().maxCoeff());
      dist = std::max(dist, (res.mult.l2[0] - l21full).cwiseAbs().maxCoeff());
      dist = std::max(dist, (res.mult.l2[1] - l22full).cwiseAbs().maxCoeff());
      best_dist = std::min(best_dist, dist);
      if (dist <= 1e-9) matched = true;
    }
  }
  CAPTURE(best_dist);
  CHECK(matched);
}
