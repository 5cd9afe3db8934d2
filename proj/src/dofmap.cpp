#include "fraktur/dofmap.hpp"

namespace fraktur {

DofMap DofMap::build(const Mesh2D& mesh) {
  DofMap dm;
  dm.n_scalar = mesh.num_nodes();
  dm.clamped.assign(mesh.num_nodes(), 0);
  for (int v : mesh.tagged_nodes(BoundaryTag::Dirichlet)) dm.clamped[v] = 1;
  dm.vec_of_node.assign(mesh.num_nodes(), -1);
  int next = 0;
  for (int v = 0; v < mesh.num_nodes(); ++v)
    if (!dm.clamped[v]) {
      dm.vec_of_node[v] = next;
      next += 2;
    }
  dm.n_vector = next;
  return dm;
}

}  // namespace fraktur
