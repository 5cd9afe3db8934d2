#pragma once

#include <vector>

#include "fraktur/mesh.hpp"

namespace fraktur {

// Scalar fields (phase field, multipliers) live on all nodes.
// Displacements are eliminated on the Dirichlet boundary: each free node
// carries two dofs, stored (ux, uy) contiguously.
struct DofMap {
  int n_scalar = 0;                 // == num_nodes
  int n_vector = 0;                 // 2 * number of free nodes
  std::vector<int> vec_of_node;     // node -> first vector dof, -1 if clamped
  std::vector<char> clamped;        // node -> is on Dirichlet boundary

  static DofMap build(const Mesh2D& mesh);

  bool is_clamped(int node) const { return clamped[node] != 0; }
};

}  // namespace fraktur
