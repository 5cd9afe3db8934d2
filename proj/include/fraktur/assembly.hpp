#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "fraktur/dofmap.hpp"
#include "fraktur/mesh.hpp"
#include "fraktur/params.hpp"

namespace fraktur {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

// How the scalar boundary control acts: force density q(x) d(x) on Gamma_N.
struct NeumannForce {
  enum class Mode { ConstantDir, OutwardNormal };
  Mode mode = Mode::ConstantDir;
  Eigen::Vector2d dir = Eigen::Vector2d(1.0, 0.0);  // unit vector for ConstantDir

  static NeumannForce constant(const Eigen::Vector2d& d);
  static NeumannForce normal() { return {Mode::OutwardNormal, {0.0, 0.0}}; }
};

struct ElementGeom {
  std::array<int, 3> v;
  double area = 0.0;
  Eigen::Matrix<double, 2, 3> grad;  // grad(:, i) = grad of P1 basis at vertex i
};

// Mesh-bound finite element operators for P1/P1 discretizations on
// triangles. Scalar fields occupy all nodes; vector fields only free
// (non-Dirichlet) nodes, two dofs each. All integrals are exact for the
// polynomial degrees that occur (3-point edge-midpoint rule in the
// interior, Simpson-equivalent edge rule on the boundary).
class FemSystem {
 public:
  FemSystem(Mesh2D mesh, NeumannForce force);
  FemSystem(const FemSystem&) = delete;
  FemSystem& operator=(const FemSystem&) = delete;

  const Mesh2D& mesh() const { return mesh_; }
  const DofMap& dofs() const { return dofs_; }
  const NeumannForce& force() const { return force_; }

  int n_scalar() const { return dofs_.n_scalar; }
  int n_vector() const { return dofs_.n_vector; }
  int n_gamma() const { return static_cast<int>(gamma_nodes_.size()); }
  const std::vector<int>& gamma_nodes() const { return gamma_nodes_; }
  const std::vector<ElementGeom>& elements() const { return elems_; }

  // state-independent operators
  const SpMat& mass_phi() const { return M_phi_; }        // int v w
  const SpMat& stiffness_phi() const { return K_phi_; }   // int grad v . grad w
  const SpMat& mass_vec() const { return M_vec_; }        // int u . v
  const SpMat& stiffness_vec() const { return K_vec_; }   // int grad u : grad v
  const SpMat& neumann_matrix() const { return N_q_; }    // u^T N q = <q, u . d>_Gamma_N
  const SpMat& mass_gamma() const { return M_gamma_; }    // boundary mass on Gamma_N

  // A(phi): <g_kappa(phi) C e(u), e(v)>, the u,u second derivative of the
  // elastic energy. phi is a nodal scalar field.
  SpMat degraded_elastic(const Vec& phi, const PhysParams& p) const;

  // W(u): (1-kappa) <dphi1 dphi2 C e(u), e(u)>, the phi,phi second
  // derivative of the elastic energy.
  SpMat elastic_phi_mass(const Vec& u, const PhysParams& p) const;

  // G(u, phi): 2 (1-kappa) <phi dphi C e(u), e(du)>, the mixed u,phi
  // second derivative; rows are vector dofs, columns scalar dofs.
  SpMat elastic_cross(const Vec& u, const Vec& phi, const PhysParams& p) const;

  // 1/2 <g_kappa(phi) C e(u), e(u)> over Omega
  double elastic_energy(const Vec& u, const Vec& phi, const PhysParams& p) const;

  Vec neumann_load(const Vec& q) const;  // N q as a vector-dof load

  // constant-in-space strain of u on element e, Voigt [e11, e22, 2 e12]
  Eigen::Vector3d element_strain(int e, const Vec& u) const;

  // M^{-1} r solves for dual norms (factorized once)
  Vec solve_mass_phi(const Vec& r) const;
  Vec solve_mass_vec(const Vec& r) const;

  double dual_norm_sq_phi(const Vec& r) const;  // r^T M_phi^{-1} r
  double dual_norm_sq_vec(const Vec& r) const;  // r^T M_vec^{-1} r

  // H1 quadratic forms used by the space-time norms
  double h1_sq_phi(const Vec& phi) const;
  double h1_sq_vec(const Vec& u) const;

  Eigen::Matrix3d elasticity_voigt(const PhysParams& p) const;

 private:
  Mesh2D mesh_;
  DofMap dofs_;
  NeumannForce force_;
  std::vector<ElementGeom> elems_;
  std::vector<int> gamma_nodes_;
  std::vector<int> gamma_index_of_node_;  // -1 when not on Gamma_N

  SpMat M_phi_, K_phi_, M_vec_, K_vec_, N_q_, M_gamma_;
  Eigen::SimplicialLDLT<SpMat> M_phi_solver_, M_vec_solver_;

  void build_geometry();
  void build_base_matrices();
  void build_boundary();
};

// Free-standing entry points matching the operation contracts; they
// validate inputs and delegate to FemSystem.
SpMat assemble_mass(const FemSystem& fem);
SpMat assemble_scalar_stiffness(const FemSystem& fem);
SpMat assemble_degraded_elastic(const FemSystem& fem, const Vec& phi, const PhysParams& p);
Vec assemble_neumann_load(const FemSystem& fem, const Vec& q);

}  // namespace fraktur
