#pragma once

#include "bilayer/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace bilayer {

enum class BoundaryTag { Free, Dirichlet };

/// Axis-aligned piece of the boundary: the set {x = coord, lo <= y <= hi} for a
/// vertical segment or {y = coord, lo <= x <= hi} for a horizontal one.
struct BoundarySegment {
  enum class Axis { Vertical, Horizontal };
  Axis axis = Axis::Vertical;
  double coord = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  bool contains(const Vec2& p, double tol) const;
  bool operator==(const BoundarySegment&) const = default;
};

/// Union of boundary segments marking the clamped part of the boundary.
struct DirichletSelector {
  std::vector<BoundarySegment> segments;

  bool empty() const { return segments.empty(); }
  bool operator==(const DirichletSelector&) const = default;
};

/// Plate outline built from a tensor grid of macro rectangles, some of which are removed.
/// Each active macro rectangle is refined uniformly; neighbouring macros share whole edges,
/// so the refined partition is conforming.
struct MacroLayout {
  std::vector<double> x_breaks;
  std::vector<double> y_breaks;
  /// Row-major from the bottom row: active[j * (x_breaks.size() - 1) + i].
  std::vector<bool> active;

  Index columns() const { return static_cast<Index>(x_breaks.size()) - 1; }
  Index rows() const { return static_cast<Index>(y_breaks.size()) - 1; }
  bool is_active(Index i, Index j) const { return active[static_cast<std::size_t>(j * columns() + i)]; }
  double area() const;
};

struct DomainSpec {
  enum class Shape { Rectangle, IShape, OShape };

  Shape shape = Shape::Rectangle;
  /// Rectangle bounds (xmin, xmax, ymin, ymax); only used for Shape::Rectangle.
  std::array<double, 4> bounds{-5.0, 5.0, -2.0, 2.0};
  int refinements = 0;
  DirichletSelector dirichlet;

  static DomainSpec rectangle(double xmin, double xmax, double ymin, double ymax, int refinements);
  /// I-shaped plate: two 5/2 x 4 flanges joined by a 5 x 5/2 web, total length 10.
  /// Seven macro rectangles; 7 * 4^k cells after k refinements (7168 at k = 5).
  static DomainSpec ishape(int refinements);
  /// O-shaped plate: a 10 x 4 frame around a centred 20/3 x 8/3 hole.
  /// Eight macro rectangles; 8 * 4^k cells after k refinements (8192 at k = 5).
  static DomainSpec oshape(int refinements);

  MacroLayout layout() const;

  bool operator==(const DomainSpec&) const = default;
};

/// Selector for the whole side of the bounding box of `layout`.
enum class Side { Left, Right, Bottom, Top };
DirichletSelector side_selector(const MacroLayout& layout, Side side);

struct Edge {
  std::array<Index, 2> vertices{};
  /// Adjacent cells; cells[1] == -1 for boundary edges.
  std::array<Index, 2> cells{-1, -1};
  BoundaryTag tag = BoundaryTag::Free;

  bool on_boundary() const { return cells[1] < 0; }
};

/// Conforming partition into axis-aligned rectangles.
///
/// Cells list their vertices counterclockwise starting at the lower-left corner
/// (lower-left, lower-right, upper-right, upper-left). Vertex indices are assigned
/// lexicographically with y as the slow index. A Mesh is immutable once built.
class Mesh {
 public:
  Mesh(std::vector<Vec2> vertices, std::vector<std::array<Index, 4>> cells);

  Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index num_cells() const { return static_cast<Index>(cells_.size()); }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const Vec2& vertex(Index v) const { return vertices_[static_cast<std::size_t>(v)]; }
  const std::vector<std::array<Index, 4>>& cells() const { return cells_; }
  const std::array<Index, 4>& cell(Index c) const { return cells_[static_cast<std::size_t>(c)]; }
  const std::vector<Edge>& edges() const { return edges_; }
  /// The four edges of a cell in the order bottom, right, top, left.
  const std::array<Index, 4>& cell_edges(Index c) const { return cell_edges_[static_cast<std::size_t>(c)]; }
  const std::vector<Index>& vertex_cells(Index v) const { return vertex_cells_[static_cast<std::size_t>(v)]; }

  /// Lower-left corner of a cell.
  const Vec2& cell_origin(Index c) const { return vertex(cell(c)[0]); }
  /// (width, height) of a cell.
  Vec2 cell_extent(Index c) const;
  double cell_area(Index c) const;
  Vec2 cell_midpoint(Index c) const;
  Vec2 edge_midpoint(Index e) const;
  Vec2 edge_tangent(Index e) const;
  Vec2 edge_normal(Index e) const;
  /// Cell diameter h_T and the maximum over cells.
  double cell_diameter(Index c) const;
  double mesh_size() const;
  /// max over cells of max(w/h, h/w).
  double shape_regularity() const;
  double area() const;

  bool is_dirichlet_vertex(Index v) const { return dirichlet_vertex_[static_cast<std::size_t>(v)]; }
  Index num_dirichlet_vertices() const;
  Index num_dirichlet_edges() const;

  /// Copy of this mesh with boundary edges tagged by `selector`.
  /// Throws InvalidSpec when the selector matches no boundary edge.
  Mesh with_dirichlet(const DirichletSelector& selector) const;

 private:
  void build_topology();

  std::vector<Vec2> vertices_;
  std::vector<std::array<Index, 4>> cells_;
  std::vector<Edge> edges_;
  std::vector<std::array<Index, 4>> cell_edges_;
  std::vector<std::vector<Index>> vertex_cells_;
  std::vector<bool> dirichlet_vertex_;
};

/// Builds the refined partition of `spec` and applies its Dirichlet selector when non-empty.
Mesh build_mesh(const DomainSpec& spec);

/// Tags every boundary edge lying on `selector` as Dirichlet; all others are Free.
inline Mesh tag_boundary(const Mesh& mesh, const DirichletSelector& selector) {
  return mesh.with_dirichlet(selector);
}

std::string to_string(DomainSpec::Shape shape);

}  // namespace bilayer
