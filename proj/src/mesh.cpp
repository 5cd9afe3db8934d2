#include "fraktur/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace fraktur {

double Mesh2D::element_area(int e) const {
  const auto& el = elements.at(e);
  const Eigen::Vector2d d1 = nodes[el[1]] - nodes[el[0]];
  const Eigen::Vector2d d2 = nodes[el[2]] - nodes[el[0]];
  return 0.5 * (d1.x() * d2.y() - d1.y() * d2.x());
}

double Mesh2D::total_area() const {
  double a = 0.0;
  for (int e = 0; e < num_elements(); ++e) a += element_area(e);
  return a;
}

std::vector<int> Mesh2D::tagged_nodes(BoundaryTag tag) const {
  std::set<int> s;
  for (const auto& be : boundary_edges) {
    if (be.tag == tag) {
      s.insert(be.a);
      s.insert(be.b);
    }
  }
  return {s.begin(), s.end()};
}

void Mesh2D::check_valid() const {
  if (nodes.empty() || elements.empty())
    throw std::invalid_argument("mesh: empty node or element list");
  for (const auto& el : elements)
    for (int v : el)
      if (v < 0 || v >= num_nodes())
        throw std::invalid_argument("mesh: element references unknown node");
  for (int e = 0; e < num_elements(); ++e)
    if (element_area(e) <= 0.0)
      throw std::invalid_argument("mesh: non-positive element orientation");

  // Every boundary edge must appear in exactly one element; interior edges
  // in exactly two.
  std::map<std::pair<int, int>, int> edge_count;
  auto key = [](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
  for (const auto& el : elements)
    for (int k = 0; k < 3; ++k) edge_count[key(el[k], el[(k + 1) % 3])]++;
  for (const auto& be : boundary_edges) {
    auto it = edge_count.find(key(be.a, be.b));
    if (it == edge_count.end() || it->second != 1)
      throw std::invalid_argument("mesh: tagged edge is not a boundary edge");
  }
  std::size_t nb = 0;
  for (const auto& [k, c] : edge_count)
    if (c == 1) ++nb;
  if (nb != boundary_edges.size())
    throw std::invalid_argument("mesh: boundary edge cover incomplete");
}

Mesh2D build_unit_square_mesh(int n, TaggingScheme scheme) {
  if (n < 1) throw std::invalid_argument("build_unit_square_mesh: n must be >= 1");
  Mesh2D mesh;
  const double h = 1.0 / n;
  auto id = [n](int i, int j) { return j * (n + 1) + i; };

  mesh.nodes.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) mesh.nodes.emplace_back(i * h, j * h);

  mesh.elements.reserve(static_cast<std::size_t>(2 * n * n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      mesh.elements.push_back({v00, v10, v11});
      mesh.elements.push_back({v00, v11, v01});
    }

  const bool left_right = scheme == TaggingScheme::LeftDirichletRightNeumann;
  auto side_tag = [&](int side) {  // 0 bottom, 1 right, 2 top, 3 left
    if (left_right) {
      if (side == 3) return BoundaryTag::Dirichlet;
      if (side == 1) return BoundaryTag::Neumann;
    } else {
      if (side == 0) return BoundaryTag::Dirichlet;
      if (side == 2) return BoundaryTag::Neumann;
    }
    return BoundaryTag::Free;
  };
  for (int i = 0; i < n; ++i)
    mesh.boundary_edges.push_back({id(i, 0), id(i + 1, 0), side_tag(0)});
  for (int j = 0; j < n; ++j)
    mesh.boundary_edges.push_back({id(n, j), id(n, j + 1), side_tag(1)});
  for (int i = 0; i < n; ++i)
    mesh.boundary_edges.push_back({id(i + 1, n), id(i, n), side_tag(2)});
  for (int j = 0; j < n; ++j)
    mesh.boundary_edges.push_back({id(0, j + 1), id(0, j), side_tag(3)});

  mesh.check_valid();
  return mesh;
}

const std::array<std::array<double, 3>, 3>& TriangleQuadrature::points() {
  static const std::array<std::array<double, 3>, 3> pts = {{
      {{0.5, 0.5, 0.0}},
      {{0.0, 0.5, 0.5}},
      {{0.5, 0.0, 0.5}},
  }};
  return pts;
}

const std::array<double, 3>& TriangleQuadrature::weights() {
  static const std::array<double, 3> w = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  return w;
}

TaggingScheme parse_tagging_scheme(const std::string& name) {
  if (name == "left_dirichlet_right_neumann") return TaggingScheme::LeftDirichletRightNeumann;
  if (name == "bottom_dirichlet_top_neumann") return TaggingScheme::BottomDirichletTopNeumann;
  throw std::invalid_argument("unknown boundary tagging scheme: " + name);
}

}  // namespace fraktur
