#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fraktur/model.hpp"
#include "test_support.hpp"

using namespace fraktur;

namespace {

// Independent energy evaluation, straight from the definition with its own
// geometry handling: P1 gradients from the vertex coordinates, 3-point
// edge-midpoint rule in the bulk, Simpson on boundary edges.
double naive_energy(const Problem& pb, const SpaceTimeState& s, const Control& c) {
  const Mesh2D& mesh = pb.fem.mesh();
  const DofMap& dofs = pb.fem.dofs();
  const PhysParams& p = pb.phys;
  const int M = pb.time.steps;

  // gamma node id -> q index
  std::vector<int> qidx(mesh.num_nodes(), -1);
  for (std::size_t k = 0; k < pb.fem.gamma_nodes().size(); ++k)
    qidx[pb.fem.gamma_nodes()[k]] = static_cast<int>(k);

  auto node_disp = [&](int node, const Vec& u) -> Eigen::Vector2d {
    const int d = dofs.vec_of_node[node];
    return d >= 0 ? Eigen::Vector2d(u[d], u[d + 1]) : Eigen::Vector2d::Zero();
  };

  double total = 0.0;
  for (int m = 0; m <= M; ++m) {
    const double w = pb.time.weight(m);
    const Vec& u = s.u[m];
    const Vec& phi = s.phi[m];

    double bulk = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const auto& tri = mesh.elements[e];
      const Eigen::Vector2d A = mesh.nodes[tri[0]], B = mesh.nodes[tri[1]],
                            C = mesh.nodes[tri[2]];
      Eigen::Matrix2d J;
      J.col(0) = B - A;
      J.col(1) = C - A;
      const double area = 0.5 * J.determinant();
      const Eigen::Matrix2d Jinv = J.inverse();
      // gradients of the three barycentric basis functions
      Eigen::Matrix<double, 2, 3> g;
      g.col(1) = Jinv.transpose() * Eigen::Vector2d(1.0, 0.0);
      g.col(2) = Jinv.transpose() * Eigen::Vector2d(0.0, 1.0);
      g.col(0) = -g.col(1) - g.col(2);

      Eigen::Matrix2d gu = Eigen::Matrix2d::Zero();
      Eigen::Vector2d gphi = Eigen::Vector2d::Zero();
      for (int v = 0; v < 3; ++v) {
        gu += node_disp(tri[v], u) * g.col(v).transpose();
        gphi += phi[tri[v]] * g.col(v);
      }
      const Eigen::Matrix2d eps = 0.5 * (gu + gu.transpose());
      const double cee = 2.0 * p.mu * eps.squaredNorm() +
                         p.lambda * eps.trace() * eps.trace();

      // one value of phi per edge midpoint
      double gsum = 0.0, omp_sum = 0.0;
      const int mid[3][2] = {{0, 1}, {1, 2}, {2, 0}};
      for (auto& e2 : mid) {
        const double phim = 0.5 * (phi[tri[e2[0]]] + phi[tri[e2[1]]]);
        gsum += p.degradation(phim) / 3.0;
        omp_sum += (1.0 - phim) * (1.0 - phim) / 3.0;
      }
      bulk += area * (0.5 * gsum * cee + p.g_c / (2.0 * p.eps) * omp_sum +
                      p.g_c * p.eps / 2.0 * gphi.squaredNorm());
    }

    double load = 0.0;
    for (const auto& edge : mesh.boundary_edges) {
      if (edge.tag != BoundaryTag::Neumann) continue;
      const Eigen::Vector2d A = mesh.nodes[edge.a], B = mesh.nodes[edge.b];
      const double len = (B - A).norm();
      Eigen::Vector2d d;
      if (pb.fem.force().mode == NeumannForce::Mode::ConstantDir) {
        d = pb.fem.force().dir;
      } else {
        const Eigen::Vector2d t = (B - A) / len;
        d = Eigen::Vector2d(t[1], -t[0]);  // outward for counterclockwise boundary
      }
      const double qa = c.q[m][qidx[edge.a]], qb = c.q[m][qidx[edge.b]];
      const double fa = qa * node_disp(edge.a, u).dot(d);
      const double fb = qb * node_disp(edge.b, u).dot(d);
      const double fm = 0.5 * (qa + qb) * (0.5 * (node_disp(edge.a, u) + node_disp(edge.b, u))).dot(d);
      load += len / 6.0 * (fa + 4.0 * fm + fb);
    }

    total += w * (bulk - load);
  }
  return total;
}

}  // namespace

TEST_CASE("energy spot value: undamaged-field penalty only") {
  auto pb = testsup::make_problem(4, 5);
  SpaceTimeState s = SpaceTimeState::zero(pb->fem, pb->time);
  Control c = Control::zero(pb->fem, pb->time);
  // u = 0, phi = 0: E = G_c T |Omega| / (2 eps) = 5.0 exactly
  const double e = energy(*pb, s, c);
  CHECK(std::abs(e - 5.0) <= 1e-10 * 5.0);
}

TEST_CASE("energy equals the naive quadrature loop at random states") {
  auto pb = testsup::make_problem(3, 4);
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const SpaceTimeState s = random_state(pb->fem, pb->time, rng);
    const Control c = random_control(pb->fem, pb->time, rng);
    const double a = energy(*pb, s, c);
    const double b = naive_energy(*pb, s, c);
    CHECK(std::abs(a - b) <= 1e-11 * std::max(1.0, std::abs(b)));
  }
}

TEST_CASE("gradient spot value and quadratic-term diagonal") {
  auto pb = testsup::make_problem(4, 5);
  SpaceTimeState s = SpaceTimeState::zero(pb->fem, pb->time);
  Control c = Control::zero(pb->fem, pb->time);
  Direction d = Direction::zero(pb->fem, pb->time);
  for (int m = 0; m <= pb->time.steps; ++m) d.phi[m] = Vec::Ones(pb->fem.n_scalar());
  // f'((0,0))(0, 1) = -G_c/eps <1, 1> = -10; f''((0,1),(0,1)) = +10
  CHECK(gradient(*pb, s, c).apply(d) == doctest::Approx(-10.0).epsilon(1e-12));
  CHECK(hessian_form(*pb, s, d, d) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("gradient: finite-difference order at 20 random points") {
  auto pb = testsup::make_problem(3, 3);
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const SpaceTimeState s = random_state(pb->fem, pb->time, rng);
    const Control c = random_control(pb->fem, pb->time, rng);
    const Direction d = random_direction(pb->fem, pb->time, rng);
    const double deriv = gradient(*pb, s, c).apply(d);
    auto rep = testsup::fd_order(
        [&](double h) { return energy(*pb, add_scaled(s, d, h), c); }, deriv);
    CHECK((rep.exact || rep.order >= 1.9));
  }
}

TEST_CASE("hessian: symmetry is exact and matches gradient differences") {
  auto pb = testsup::make_problem(3, 3);
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const SpaceTimeState s = random_state(pb->fem, pb->time, rng);
    const Control c = random_control(pb->fem, pb->time, rng);
    const Direction a = random_direction(pb->fem, pb->time, rng);
    const Direction b = random_direction(pb->fem, pb->time, rng);
    const double hab = hessian_form(*pb, s, a, b);
    const double hba = hessian_form(*pb, s, b, a);
    CHECK(hab == doctest::Approx(hba).epsilon(1e-12));
    auto rep = testsup::fd_order(
        [&](double h) { return gradient(*pb, add_scaled(s, a, h), c).apply(b); }, hab);
    CHECK((rep.exact || rep.order >= 1.9));
  }
}

TEST_CASE("space-time norm: parts and bounds") {
  auto pb = testsup::make_problem(3, 4);
  std::mt19937_64 rng(13);
  const int M = pb->time.steps;
  const double dt = pb->time.dt();

  for (int trial = 0; trial < 20; ++trial) {
    const SpaceTimeState s = random_state(pb->fem, pb->time, rng);
    const SpaceTimeNorms nm = spacetime_norms(*pb, s);

    // manual recomputation
    double yu = 0.0, yphi = 0.0;
    for (int m = 1; m <= M; ++m) yu += pb->time.weight(m) * pb->fem.h1_sq_vec(s.u[m]);
    for (int m = 0; m <= M; ++m) yphi += pb->time.weight(m) * pb->fem.h1_sq_phi(s.phi[m]);
    for (int m = 1; m <= M; ++m)
      yphi += dt * pb->fem.h1_sq_phi((s.phi[m] - s.phi[m - 1]) / dt);
    CHECK(nm.norm_Yu * nm.norm_Yu == doctest::Approx(yu).epsilon(1e-12));
    CHECK(nm.norm_Yphi * nm.norm_Yphi == doctest::Approx(yphi).epsilon(1e-12));
    CHECK(nm.norm_Y == doctest::Approx(std::sqrt(yu + yphi)).epsilon(1e-12));

    // the constant-free space-time L2 bound holds verbatim
    const double l2phi = spacetime_l2_phi(*pb, s);
    const double l2grad = spacetime_l2_grad_phi(*pb, s);
    CHECK(std::max(l2phi, l2grad) <= nm.norm_Y + 1e-12);
  }

  // the two constant-carrying bounds are only reported as ratios
  const SpaceTimeState s = random_state(pb->fem, pb->time, rng);
  double linf = 0.0;
  for (int m = 0; m <= M; ++m) linf = std::max(linf, s.phi[m].cwiseAbs().maxCoeff());
  MESSAGE("phase Linf / Y-norm ratio: " << linf / norm_Y(*pb, s));
}

TEST_CASE("initial displacement does not enter the norm") {
  auto pb = testsup::make_problem(2, 3);
  SpaceTimeState s = SpaceTimeState::zero(pb->fem, pb->time);
  s.u[0] = Vec::Ones(pb->fem.n_vector());
  // u^0 is an equilibrium by-product of the forward solve, not a decision
  // variable; states differing only there are identified.
  CHECK(norm_Y(*pb, s) == 0.0);
}
