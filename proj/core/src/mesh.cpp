#include "bilayer/mesh.hpp"

#include "bilayer/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

namespace bilayer {

namespace {

double geometric_tolerance(const std::vector<Vec2>& vertices) {
  double scale = 1.0;
  for (const auto& v : vertices) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  return 1e-10 * scale;
}

std::vector<double> refine_breaks(const std::vector<double>& breaks, int refinements) {
  const Index parts = Index{1} << refinements;
  std::vector<double> fine;
  for (std::size_t m = 0; m + 1 < breaks.size(); ++m) {
    const double a = breaks[m];
    const double b = breaks[m + 1];
    for (Index s = 0; s < parts; ++s) fine.push_back(a + (b - a) * static_cast<double>(s) / static_cast<double>(parts));
  }
  fine.push_back(breaks.back());
  return fine;
}

}  // namespace

bool BoundarySegment::contains(const Vec2& p, double tol) const {
  const double along = axis == Axis::Vertical ? p.y() : p.x();
  const double across = axis == Axis::Vertical ? p.x() : p.y();
  return std::abs(across - coord) <= tol && along >= lo - tol && along <= hi + tol;
}

double MacroLayout::area() const {
  double a = 0.0;
  for (Index j = 0; j < rows(); ++j)
    for (Index i = 0; i < columns(); ++i)
      if (is_active(i, j))
        a += (x_breaks[static_cast<std::size_t>(i + 1)] - x_breaks[static_cast<std::size_t>(i)]) *
             (y_breaks[static_cast<std::size_t>(j + 1)] - y_breaks[static_cast<std::size_t>(j)]);
  return a;
}

DomainSpec DomainSpec::rectangle(double xmin, double xmax, double ymin, double ymax, int refinements) {
  DomainSpec spec;
  spec.shape = Shape::Rectangle;
  spec.bounds = {xmin, xmax, ymin, ymax};
  spec.refinements = refinements;
  return spec;
}

DomainSpec DomainSpec::ishape(int refinements) {
  DomainSpec spec;
  spec.shape = Shape::IShape;
  spec.bounds = {-5.0, 5.0, -2.0, 2.0};
  spec.refinements = refinements;
  return spec;
}

DomainSpec DomainSpec::oshape(int refinements) {
  DomainSpec spec;
  spec.shape = Shape::OShape;
  spec.bounds = {-5.0, 5.0, -2.0, 2.0};
  spec.refinements = refinements;
  return spec;
}

MacroLayout DomainSpec::layout() const {
  MacroLayout layout;
  switch (shape) {
    case Shape::Rectangle:
      layout.x_breaks = {bounds[0], bounds[1]};
      layout.y_breaks = {bounds[2], bounds[3]};
      layout.active = {true};
      break;
    case Shape::IShape:
      // flange 5/2 wide, web 5 long and 5/2 high, overhang 3/4 above and below the web
      layout.x_breaks = {-5.0, -2.5, 2.5, 5.0};
      layout.y_breaks = {-2.0, -1.25, 1.25, 2.0};
      layout.active = {true, false, true,  //
                       true, true,  true,  //
                       true, false, true};
      break;
    case Shape::OShape:
      layout.x_breaks = {-5.0, -5.0 + 5.0 / 3.0, 5.0 - 5.0 / 3.0, 5.0};
      layout.y_breaks = {-2.0, -2.0 + 2.0 / 3.0, 2.0 - 2.0 / 3.0, 2.0};
      layout.active = {true, true,  true,  //
                       true, false, true,  //
                       true, true,  true};
      break;
  }
  return layout;
}

DirichletSelector side_selector(const MacroLayout& layout, Side side) {
  const double xmin = layout.x_breaks.front();
  const double xmax = layout.x_breaks.back();
  const double ymin = layout.y_breaks.front();
  const double ymax = layout.y_breaks.back();
  using Axis = BoundarySegment::Axis;
  switch (side) {
    case Side::Left: return {{{Axis::Vertical, xmin, ymin, ymax}}};
    case Side::Right: return {{{Axis::Vertical, xmax, ymin, ymax}}};
    case Side::Bottom: return {{{Axis::Horizontal, ymin, xmin, xmax}}};
    case Side::Top: return {{{Axis::Horizontal, ymax, xmin, xmax}}};
  }
  return {};
}

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<std::array<Index, 4>> cells)
    : vertices_(std::move(vertices)), cells_(std::move(cells)) {
  build_topology();
}

void Mesh::build_topology() {
  const auto nv = vertices_.size();
  vertex_cells_.assign(nv, {});
  dirichlet_vertex_.assign(nv, false);
  cell_edges_.assign(cells_.size(), {});
  edges_.clear();

  std::map<std::pair<Index, Index>, Index> lookup;
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto& cv = cells_[c];
    const Vec2 ext = vertices_[static_cast<std::size_t>(cv[2])] - vertices_[static_cast<std::size_t>(cv[0])];
    if (!(ext.x() > 0.0) || !(ext.y() > 0.0)) throw InvalidSpec("degenerate cell " + std::to_string(c));
    for (int a = 0; a < 4; ++a) {
      vertex_cells_[static_cast<std::size_t>(cv[a])].push_back(static_cast<Index>(c));
      const Index v0 = cv[a];
      const Index v1 = cv[(a + 1) % 4];
      const auto key = std::minmax(v0, v1);
      auto [it, inserted] = lookup.try_emplace({key.first, key.second}, static_cast<Index>(edges_.size()));
      if (inserted) {
        Edge e;
        // bottom/right run with increasing coordinate already; top/left are reversed
        e.vertices = a < 2 ? std::array<Index, 2>{v0, v1} : std::array<Index, 2>{v1, v0};
        e.cells = {static_cast<Index>(c), -1};
        edges_.push_back(e);
      } else {
        auto& e = edges_[static_cast<std::size_t>(it->second)];
        if (e.cells[1] >= 0) throw InvalidSpec("edge shared by more than two cells");
        e.cells[1] = static_cast<Index>(c);
      }
      cell_edges_[c][static_cast<std::size_t>(a)] = it->second;
    }
  }
}

Vec2 Mesh::cell_extent(Index c) const {
  const auto& cv = cell(c);
  return vertex(cv[2]) - vertex(cv[0]);
}

double Mesh::cell_area(Index c) const {
  const Vec2 e = cell_extent(c);
  return e.x() * e.y();
}

Vec2 Mesh::cell_midpoint(Index c) const {
  const auto& cv = cell(c);
  return 0.25 * (vertex(cv[0]) + vertex(cv[1]) + vertex(cv[2]) + vertex(cv[3]));
}

Vec2 Mesh::edge_midpoint(Index e) const {
  const auto& ed = edges_[static_cast<std::size_t>(e)];
  return 0.5 * (vertex(ed.vertices[0]) + vertex(ed.vertices[1]));
}

Vec2 Mesh::edge_tangent(Index e) const {
  const auto& ed = edges_[static_cast<std::size_t>(e)];
  return (vertex(ed.vertices[1]) - vertex(ed.vertices[0])).normalized();
}

Vec2 Mesh::edge_normal(Index e) const {
  const Vec2 t = edge_tangent(e);
  return {t.y(), -t.x()};
}

double Mesh::cell_diameter(Index c) const { return cell_extent(c).norm(); }

double Mesh::mesh_size() const {
  double h = 0.0;
  for (Index c = 0; c < num_cells(); ++c) h = std::max(h, cell_diameter(c));
  return h;
}

double Mesh::shape_regularity() const {
  double r = 1.0;
  for (Index c = 0; c < num_cells(); ++c) {
    const Vec2 e = cell_extent(c);
    r = std::max({r, e.x() / e.y(), e.y() / e.x()});
  }
  return r;
}

double Mesh::area() const {
  double a = 0.0;
  for (Index c = 0; c < num_cells(); ++c) a += cell_area(c);
  return a;
}

Index Mesh::num_dirichlet_vertices() const {
  return std::count(dirichlet_vertex_.begin(), dirichlet_vertex_.end(), true);
}

Index Mesh::num_dirichlet_edges() const {
  return std::count_if(edges_.begin(), edges_.end(), [](const Edge& e) { return e.tag == BoundaryTag::Dirichlet; });
}

Mesh Mesh::with_dirichlet(const DirichletSelector& selector) const {
  Mesh out = *this;
  const double tol = geometric_tolerance(vertices_);
  std::fill(out.dirichlet_vertex_.begin(), out.dirichlet_vertex_.end(), false);
  Index matched = 0;
  for (auto& e : out.edges_) {
    e.tag = BoundaryTag::Free;
    if (!e.on_boundary()) continue;
    const Vec2& a = vertex(e.vertices[0]);
    const Vec2& b = vertex(e.vertices[1]);
    const bool hit = std::any_of(selector.segments.begin(), selector.segments.end(),
                                 [&](const BoundarySegment& s) { return s.contains(a, tol) && s.contains(b, tol); });
    if (!hit) continue;
    e.tag = BoundaryTag::Dirichlet;
    out.dirichlet_vertex_[static_cast<std::size_t>(e.vertices[0])] = true;
    out.dirichlet_vertex_[static_cast<std::size_t>(e.vertices[1])] = true;
    ++matched;
  }
  if (matched == 0) throw InvalidSpec("Dirichlet selector matches no boundary edge");
  return out;
}

Mesh build_mesh(const DomainSpec& spec) {
  if (spec.refinements < 0) throw InvalidSpec("refinements must be nonnegative");
  if (spec.refinements > 12) throw InvalidSpec("refinement level too large");
  const MacroLayout layout = spec.layout();
  for (std::size_t i = 0; i + 1 < layout.x_breaks.size(); ++i)
    if (!(layout.x_breaks[i + 1] > layout.x_breaks[i])) throw InvalidSpec("non-positive domain width");
  for (std::size_t j = 0; j + 1 < layout.y_breaks.size(); ++j)
    if (!(layout.y_breaks[j + 1] > layout.y_breaks[j])) throw InvalidSpec("non-positive domain height");

  const auto xs = refine_breaks(layout.x_breaks, spec.refinements);
  const auto ys = refine_breaks(layout.y_breaks, spec.refinements);
  const Index nx = static_cast<Index>(xs.size()) - 1;
  const Index ny = static_cast<Index>(ys.size()) - 1;
  const Index parts = Index{1} << spec.refinements;

  auto cell_active = [&](Index i, Index j) { return layout.is_active(i / parts, j / parts); };

  // y-major lexicographic numbering of the grid points touched by active cells
  std::vector<Index> vid(static_cast<std::size_t>((nx + 1) * (ny + 1)), -1);
  std::vector<Vec2> vertices;
  for (Index j = 0; j <= ny; ++j) {
    for (Index i = 0; i <= nx; ++i) {
      bool used = false;
      for (Index dj = -1; dj <= 0 && !used; ++dj)
        for (Index di = -1; di <= 0 && !used; ++di) {
          const Index ci = i + di;
          const Index cj = j + dj;
          used = ci >= 0 && cj >= 0 && ci < nx && cj < ny && cell_active(ci, cj);
        }
      if (!used) continue;
      vid[static_cast<std::size_t>(j * (nx + 1) + i)] = static_cast<Index>(vertices.size());
      vertices.emplace_back(xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(j)]);
    }
  }

  std::vector<std::array<Index, 4>> cells;
  auto at = [&](Index i, Index j) { return vid[static_cast<std::size_t>(j * (nx + 1) + i)]; };
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i)
      if (cell_active(i, j)) cells.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)});

  Mesh mesh(std::move(vertices), std::move(cells));
  if (!spec.dirichlet.empty()) return mesh.with_dirichlet(spec.dirichlet);
  return mesh;
}

std::string to_string(DomainSpec::Shape shape) {
  switch (shape) {
    case DomainSpec::Shape::Rectangle: return "rectangle";
    case DomainSpec::Shape::IShape: return "ishape";
    case DomainSpec::Shape::OShape: return "oshape";
  }
  return "unknown";
}

}  // namespace bilayer
