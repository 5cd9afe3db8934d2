#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fraktur {

enum class BoundaryTag : std::uint8_t {
  Dirichlet,  // clamped displacement
  Neumann,    // loaded by the boundary control q
  Free        // traction free
};

// Scheme for tagging the four sides of the unit square.
enum class TaggingScheme : std::uint8_t {
  LeftDirichletRightNeumann,  // default: left clamped, right loaded
  BottomDirichletTopNeumann
};

struct BoundaryEdge {
  int a = -1, b = -1;  // node ids, oriented along the boundary
  BoundaryTag tag = BoundaryTag::Free;
};

// Conforming triangulation of the unit square. Each grid cell is split
// along its bottom-left/top-right diagonal; triangles are positively
// oriented.
struct Mesh2D {
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::array<int, 3>> elements;
  std::vector<BoundaryEdge> boundary_edges;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }

  double element_area(int e) const;
  double total_area() const;

  // Node ids carrying the given tag (sorted, no duplicates).
  std::vector<int> tagged_nodes(BoundaryTag tag) const;

  // Throws std::invalid_argument when orientation, connectivity or the
  // boundary-edge cover is broken.
  void check_valid() const;
};

// n subdivisions per side: (n+1)^2 nodes, 2 n^2 triangles, 4 n boundary
// edges. Throws std::invalid_argument for n < 1.
Mesh2D build_unit_square_mesh(int n, TaggingScheme scheme = TaggingScheme::LeftDirichletRightNeumann);

// Degree-2 triangle rule (3 edge-midpoints, equal weights). Exact for
// quadratic integrands, which is all the assembly here ever needs.
struct TriangleQuadrature {
  static constexpr int npts = 3;
  // barycentric coordinates and weights (weights sum to 1, scale by area)
  static const std::array<std::array<double, 3>, 3>& points();
  static const std::array<double, 3>& weights();
};

TaggingScheme parse_tagging_scheme(const std::string& name);

}  // namespace fraktur
