#include "fraktur/assembly.hpp"

#include <cmath>
#include <stdexcept>

namespace fraktur {

NeumannForce NeumannForce::constant(const Eigen::Vector2d& d) {
  const double n = d.norm();
  if (!(n > 0.0)) throw std::invalid_argument("neumann force: zero direction");
  return {Mode::ConstantDir, d / n};
}

FemSystem::FemSystem(Mesh2D mesh, NeumannForce force)
    : mesh_(std::move(mesh)), force_(force) {
  mesh_.check_valid();
  dofs_ = DofMap::build(mesh_);
  build_geometry();
  build_boundary();
  build_base_matrices();
  M_phi_solver_.compute(M_phi_);
  if (M_phi_solver_.info() != Eigen::Success)
    throw std::runtime_error("mass matrix factorization failed");
  if (dofs_.n_vector > 0) {
    M_vec_solver_.compute(M_vec_);
    if (M_vec_solver_.info() != Eigen::Success)
      throw std::runtime_error("vector mass factorization failed");
  }
}

void FemSystem::build_geometry() {
  elems_.resize(mesh_.num_elements());
  for (int e = 0; e < mesh_.num_elements(); ++e) {
    ElementGeom g;
    g.v = mesh_.elements[e];
    const Eigen::Vector2d p0 = mesh_.nodes[g.v[0]];
    const Eigen::Vector2d p1 = mesh_.nodes[g.v[1]];
    const Eigen::Vector2d p2 = mesh_.nodes[g.v[2]];
    g.area = mesh_.element_area(e);
    const double inv2A = 1.0 / (2.0 * g.area);
    // grad psi_i = perpendicular of opposite edge / (2 A)
    g.grad.col(0) = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) * inv2A;
    g.grad.col(1) = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) * inv2A;
    g.grad.col(2) = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) * inv2A;
    elems_[e] = g;
  }
}

void FemSystem::build_boundary() {
  gamma_index_of_node_.assign(mesh_.num_nodes(), -1);
  gamma_nodes_ = mesh_.tagged_nodes(BoundaryTag::Neumann);
  if (gamma_nodes_.empty())
    throw std::invalid_argument("mesh: no Neumann boundary present");
  for (std::size_t k = 0; k < gamma_nodes_.size(); ++k)
    gamma_index_of_node_[gamma_nodes_[k]] = static_cast<int>(k);
}

void FemSystem::build_base_matrices() {
  const int ns = dofs_.n_scalar, nv = dofs_.n_vector;
  std::vector<Eigen::Triplet<double>> tm, tk, tmv, tkv;
  for (const auto& g : elems_) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double m = g.area / 12.0 * (i == j ? 2.0 : 1.0);
        const double k = g.area * g.grad.col(i).dot(g.grad.col(j));
        tm.emplace_back(g.v[i], g.v[j], m);
        tk.emplace_back(g.v[i], g.v[j], k);
        const int di = dofs_.vec_of_node[g.v[i]], dj = dofs_.vec_of_node[g.v[j]];
        if (di >= 0 && dj >= 0)
          for (int c = 0; c < 2; ++c) {
            tmv.emplace_back(di + c, dj + c, m);
            tkv.emplace_back(di + c, dj + c, k);
          }
      }
  }
  M_phi_.resize(ns, ns);
  M_phi_.setFromTriplets(tm.begin(), tm.end());
  K_phi_.resize(ns, ns);
  K_phi_.setFromTriplets(tk.begin(), tk.end());
  M_vec_.resize(nv, nv);
  M_vec_.setFromTriplets(tmv.begin(), tmv.end());
  K_vec_.resize(nv, nv);
  K_vec_.setFromTriplets(tkv.begin(), tkv.end());

  // boundary coupling <q, u . d> and boundary mass on Gamma_N
  const int ng = n_gamma();
  std::vector<Eigen::Triplet<double>> tn, tg;
  for (const auto& be : mesh_.boundary_edges) {
    if (be.tag != BoundaryTag::Neumann) continue;
    const Eigen::Vector2d pa = mesh_.nodes[be.a], pb = mesh_.nodes[be.b];
    const Eigen::Vector2d t = pb - pa;
    const double L = t.norm();
    Eigen::Vector2d d = force_.dir;
    if (force_.mode == NeumannForce::Mode::OutwardNormal)
      d = Eigen::Vector2d(t.y(), -t.x()) / L;  // edges run CCW, outward is right of t
    const int ga = gamma_index_of_node_[be.a], gb = gamma_index_of_node_[be.b];
    const int nodes[2] = {be.a, be.b};
    const int gidx[2] = {ga, gb};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double w = L / 6.0 * (i == j ? 2.0 : 1.0);
        tg.emplace_back(gidx[i], gidx[j], w);
        const int dv = dofs_.vec_of_node[nodes[i]];
        if (dv >= 0)
          for (int c = 0; c < 2; ++c) tn.emplace_back(dv + c, gidx[j], w * d[c]);
      }
  }
  N_q_.resize(nv, ng);
  N_q_.setFromTriplets(tn.begin(), tn.end());
  M_gamma_.resize(ng, ng);
  M_gamma_.setFromTriplets(tg.begin(), tg.end());
}

Eigen::Matrix3d FemSystem::elasticity_voigt(const PhysParams& p) const {
  Eigen::Matrix3d D = Eigen::Matrix3d::Zero();
  D(0, 0) = D(1, 1) = 2.0 * p.mu + p.lambda;
  D(0, 1) = D(1, 0) = p.lambda;
  D(2, 2) = p.mu;  // shear row acts on 2 e12
  return D;
}

Eigen::Vector3d FemSystem::element_strain(int e, const Vec& u) const {
  const auto& g = elems_[e];
  Eigen::Vector3d eps = Eigen::Vector3d::Zero();
  for (int i = 0; i < 3; ++i) {
    const int dv = dofs_.vec_of_node[g.v[i]];
    if (dv < 0) continue;
    const double ux = u[dv], uy = u[dv + 1];
    const double bx = g.grad(0, i), by = g.grad(1, i);
    eps[0] += ux * bx;
    eps[1] += uy * by;
    eps[2] += ux * by + uy * bx;
  }
  return eps;
}

SpMat FemSystem::degraded_elastic(const Vec& phi, const PhysParams& p) const {
  if (phi.size() != n_scalar()) throw std::invalid_argument("degraded_elastic: phi size mismatch");
  p.validate();
  const Eigen::Matrix3d D = elasticity_voigt(p);
  const auto& qp = TriangleQuadrature::points();
  const auto& qw = TriangleQuadrature::weights();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(elems_.size() * 36);
  for (const auto& g : elems_) {
    double gbar = 0.0;
    for (int q = 0; q < TriangleQuadrature::npts; ++q) {
      double ph = 0.0;
      for (int i = 0; i < 3; ++i) ph += qp[q][i] * phi[g.v[i]];
      gbar += qw[q] * p.degradation(ph);
    }
    // B matrix, Voigt rows [e11, e22, 2 e12], columns (ux_i, uy_i)
    Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
    for (int i = 0; i < 3; ++i) {
      B(0, 2 * i) = g.grad(0, i);
      B(1, 2 * i + 1) = g.grad(1, i);
      B(2, 2 * i) = g.grad(1, i);
      B(2, 2 * i + 1) = g.grad(0, i);
    }
    const Eigen::Matrix<double, 6, 6> Ke = gbar * g.area * B.transpose() * D * B;
    for (int i = 0; i < 3; ++i) {
      const int di = dofs_.vec_of_node[g.v[i]];
      if (di < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int dj = dofs_.vec_of_node[g.v[j]];
        if (dj < 0) continue;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            trip.emplace_back(di + a, dj + b, Ke(2 * i + a, 2 * j + b));
      }
    }
  }
  SpMat A(n_vector(), n_vector());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

SpMat FemSystem::elastic_phi_mass(const Vec& u, const PhysParams& p) const {
  if (u.size() != n_vector()) throw std::invalid_argument("elastic_phi_mass: u size mismatch");
  const Eigen::Matrix3d D = elasticity_voigt(p);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(elems_.size() * 9);
  for (std::size_t e = 0; e < elems_.size(); ++e) {
    const auto& g = elems_[e];
    const Eigen::Vector3d eps = element_strain(static_cast<int>(e), u);
    const double s = (1.0 - p.kappa) * eps.dot(D * eps);
    if (s == 0.0) continue;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(g.v[i], g.v[j], s * g.area / 12.0 * (i == j ? 2.0 : 1.0));
  }
  SpMat W(n_scalar(), n_scalar());
  W.setFromTriplets(trip.begin(), trip.end());
  return W;
}

SpMat FemSystem::elastic_cross(const Vec& u, const Vec& phi, const PhysParams& p) const {
  if (u.size() != n_vector() || phi.size() != n_scalar())
    throw std::invalid_argument("elastic_cross: size mismatch");
  const Eigen::Matrix3d D = elasticity_voigt(p);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(elems_.size() * 18);
  for (std::size_t e = 0; e < elems_.size(); ++e) {
    const auto& g = elems_[e];
    const Eigen::Vector3d sig = D * element_strain(static_cast<int>(e), u);  // C e(u)
    const double phisum = phi[g.v[0]] + phi[g.v[1]] + phi[g.v[2]];
    for (int i = 0; i < 3; ++i) {
      const int di = dofs_.vec_of_node[g.v[i]];
      if (di < 0) continue;
      // C e(u) : e(V_i) for the two unit nodal displacements at vertex i
      const double taux = sig[0] * g.grad(0, i) + sig[2] * g.grad(1, i);
      const double tauy = sig[1] * g.grad(1, i) + sig[2] * g.grad(0, i);
      for (int j = 0; j < 3; ++j) {
        const double w = 2.0 * (1.0 - p.kappa) * g.area / 12.0 * (phisum + phi[g.v[j]]);
        trip.emplace_back(di, g.v[j], w * taux);
        trip.emplace_back(di + 1, g.v[j], w * tauy);
      }
    }
  }
  SpMat G(n_vector(), n_scalar());
  G.setFromTriplets(trip.begin(), trip.end());
  return G;
}

double FemSystem::elastic_energy(const Vec& u, const Vec& phi, const PhysParams& p) const {
  if (u.size() != n_vector() || phi.size() != n_scalar())
    throw std::invalid_argument("elastic_energy: size mismatch");
  const Eigen::Matrix3d D = elasticity_voigt(p);
  const auto& qp = TriangleQuadrature::points();
  const auto& qw = TriangleQuadrature::weights();
  double total = 0.0;
  for (std::size_t e = 0; e < elems_.size(); ++e) {
    const auto& g = elems_[e];
    const Eigen::Vector3d eps = element_strain(static_cast<int>(e), u);
    double gbar = 0.0;
    for (int q = 0; q < TriangleQuadrature::npts; ++q) {
      double ph = 0.0;
      for (int i = 0; i < 3; ++i) ph += qp[q][i] * phi[g.v[i]];
      gbar += qw[q] * p.degradation(ph);
    }
    total += 0.5 * gbar * g.area * eps.dot(D * eps);
  }
  return total;
}

Vec FemSystem::neumann_load(const Vec& q) const {
  if (q.size() != n_gamma()) throw std::invalid_argument("neumann_load: q size mismatch");
  return N_q_ * q;
}

Vec FemSystem::solve_mass_phi(const Vec& r) const { return M_phi_solver_.solve(r); }
Vec FemSystem::solve_mass_vec(const Vec& r) const { return M_vec_solver_.solve(r); }

double FemSystem::dual_norm_sq_phi(const Vec& r) const { return r.dot(M_phi_solver_.solve(r)); }
double FemSystem::dual_norm_sq_vec(const Vec& r) const {
  if (r.size() == 0) return 0.0;
  return r.dot(M_vec_solver_.solve(r));
}

double FemSystem::h1_sq_phi(const Vec& phi) const {
  return phi.dot(M_phi_ * phi) + phi.dot(K_phi_ * phi);
}
double FemSystem::h1_sq_vec(const Vec& u) const {
  if (u.size() == 0) return 0.0;
  return u.dot(M_vec_ * u) + u.dot(K_vec_ * u);
}

SpMat assemble_mass(const FemSystem& fem) { return fem.mass_phi(); }
SpMat assemble_scalar_stiffness(const FemSystem& fem) { return fem.stiffness_phi(); }
SpMat assemble_degraded_elastic(const FemSystem& fem, const Vec& phi, const PhysParams& p) {
  return fem.degraded_elastic(phi, p);
}
Vec assemble_neumann_load(const FemSystem& fem, const Vec& q) { return fem.neumann_load(q); }

}  // namespace fraktur
