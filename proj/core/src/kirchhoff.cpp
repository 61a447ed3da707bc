#include "bilayer/kirchhoff.hpp"

#include "bilayer/error.hpp"

#include <cmath>
#include <string>
#include <unordered_map>
#include <utility>

namespace bilayer {

namespace {

// Lagrange point coordinates (ix, iy) in {0,1,2}^2 of point p = 3 * iy + ix.
constexpr int point_ix(int p) { return p % 3; }
constexpr int point_iy(int p) { return p / 3; }

Vec2 reference_coords(const Vec2& origin, const Vec2& extent, const Vec2& x) {
  return {(x.x() - origin.x()) / extent.x(), (x.y() - origin.y()) / extent.y()};
}

void check_inside(const Vec2& ref, Index cell) {
  constexpr double tol = 1e-10;
  if (ref.x() < -tol || ref.x() > 1.0 + tol || ref.y() < -tol || ref.y() > 1.0 + tol)
    throw DataError("point outside cell " + std::to_string(cell));
}

struct EdgeRule {
  int start;  // cell vertex at the low end
  int end;    // cell vertex at the high end
  int tangent_axis;
};

// bottom, right, top, left
constexpr std::array<EdgeRule, 4> kEdgeRules{{{0, 1, 0}, {1, 2, 1}, {3, 2, 0}, {0, 3, 1}}};

// Reference-cell collocation matrix for Q3: rows are the 16 Kirchhoff conditions,
// columns the monomials xi^a eta^b stored at 4 * b + a.
Eigen::Matrix<double, 16, 16> cubic_collocation_inverse() {
  Eigen::Matrix<double, 16, 16> m = Eigen::Matrix<double, 16, 16>::Zero();
  const std::array<Vec2, 4> corners{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  auto mono = [](double t, int k) { return k == 0 ? 1.0 : std::pow(t, k); };
  auto dmono = [](double t, int k) { return k == 0 ? 0.0 : k * (k == 1 ? 1.0 : std::pow(t, k - 1)); };
  int row = 0;
  auto add_row = [&](const Vec2& p, int dx, int dy) {
    for (int b = 0; b < 4; ++b)
      for (int a = 0; a < 4; ++a) {
        const double fx = dx ? dmono(p.x(), a) : mono(p.x(), a);
        const double fy = dy ? dmono(p.y(), b) : mono(p.y(), b);
        m(row, 4 * b + a) = fx * fy;
      }
    ++row;
  };
  for (const auto& c : corners) {
    add_row(c, 0, 0);
    add_row(c, 1, 0);
    add_row(c, 0, 1);
  }
  for (const auto& c : corners) add_row(c, 1, 1);
  return m.inverse();
}

}  // namespace

LocalDiscreteGradient local_discrete_gradient(const Vec2& extent) {
  if (!(extent.x() > 0.0) || !(extent.y() > 0.0) || !std::isfinite(extent.x()) || !std::isfinite(extent.y()))
    throw InvalidSpec("degenerate cell extent");
  LocalDiscreteGradient g = LocalDiscreteGradient::Zero();
  for (int a = 0; a < 4; ++a) {
    const int p = kVertexPoint[static_cast<std::size_t>(a)];
    for (int j = 0; j < 2; ++j) {
      g(2 * p + j, 3 * a + 1 + j) = 1.0;
      g(2 * kCenterPoint + j, 3 * a + 1 + j) = 0.25;
    }
  }
  for (int e = 0; e < 4; ++e) {
    const auto& rule = kEdgeRules[static_cast<std::size_t>(e)];
    const int p = kEdgePoint[static_cast<std::size_t>(e)];
    const int t = rule.tangent_axis;
    const int n = 1 - t;
    const double length = extent(t);
    // derivative of the cubic Hermite interpolant at the midpoint
    g(2 * p + t, 3 * rule.start) = -1.5 / length;
    g(2 * p + t, 3 * rule.end) = 1.5 / length;
    g(2 * p + t, 3 * rule.start + 1 + t) = -0.25;
    g(2 * p + t, 3 * rule.end + 1 + t) = -0.25;
    g(2 * p + n, 3 * rule.start + 1 + n) = 0.5;
    g(2 * p + n, 3 * rule.end + 1 + n) = 0.5;
  }
  return g;
}

// ---------------------------------------------------------------------------
// DeformationField

DeformationField::DeformationField(std::shared_ptr<const Mesh> mesh)
    : mesh_(std::move(mesh)), dofs_(Eigen::VectorXd::Zero(kDofsPerVertex * mesh_->num_vertices())) {}

DeformationField::DeformationField(std::shared_ptr<const Mesh> mesh, Eigen::VectorXd dofs)
    : mesh_(std::move(mesh)), dofs_(std::move(dofs)) {
  if (dofs_.size() != kDofsPerVertex * mesh_->num_vertices())
    throw DataError("deformation DOF vector does not match the mesh");
}

Vec3 DeformationField::value(Index v) const {
  return {dofs_(dof_index(v, 0, 0)), dofs_(dof_index(v, 1, 0)), dofs_(dof_index(v, 2, 0))};
}

Mat32 DeformationField::gradient(Index v) const {
  Mat32 g;
  for (int c = 0; c < 3; ++c) {
    g(c, 0) = dofs_(dof_index(v, c, 1));
    g(c, 1) = dofs_(dof_index(v, c, 2));
  }
  return g;
}

void DeformationField::set_value(Index v, const Vec3& y) {
  for (int c = 0; c < 3; ++c) dofs_(dof_index(v, c, 0)) = y(c);
}

void DeformationField::set_gradient(Index v, const Mat32& g) {
  for (int c = 0; c < 3; ++c) {
    dofs_(dof_index(v, c, 1)) = g(c, 0);
    dofs_(dof_index(v, c, 2)) = g(c, 1);
  }
}

Eigen::Matrix<double, 12, 1> DeformationField::local_dofs(Index cell, int component) const {
  Eigen::Matrix<double, 12, 1> local;
  const auto& cv = mesh_->cell(cell);
  for (int a = 0; a < 4; ++a)
    for (int s = 0; s < 3; ++s) local(3 * a + s) = dofs_(dof_index(cv[static_cast<std::size_t>(a)], component, s));
  return local;
}

// ---------------------------------------------------------------------------
// GradientField

GradientField::GradientField(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)) {
  CellValues zero;
  zero.fill(Mat32::Zero());
  values_.assign(static_cast<std::size_t>(mesh_->num_cells()), zero);
}

std::array<double, 3> quadratic_basis(double t) {
  return {(2.0 * t - 1.0) * (t - 1.0), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)};
}

std::array<double, 3> quadratic_basis_derivative(double t) { return {4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0}; }

Mat32 GradientField::value(Index c, const Vec2& x) const {
  const Vec2 ref = reference_coords(mesh_->cell_origin(c), mesh_->cell_extent(c), x);
  check_inside(ref, c);
  const auto bx = quadratic_basis(ref.x());
  const auto by = quadratic_basis(ref.y());
  Mat32 out = Mat32::Zero();
  const auto& vals = cell(c);
  for (int p = 0; p < 9; ++p)
    out += bx[static_cast<std::size_t>(point_ix(p))] * by[static_cast<std::size_t>(point_iy(p))] *
           vals[static_cast<std::size_t>(p)];
  return out;
}

std::array<Mat32, 2> GradientField::derivative(Index c, const Vec2& x) const {
  const Vec2 extent = mesh_->cell_extent(c);
  const Vec2 ref = reference_coords(mesh_->cell_origin(c), extent, x);
  check_inside(ref, c);
  const auto bx = quadratic_basis(ref.x());
  const auto by = quadratic_basis(ref.y());
  const auto dx = quadratic_basis_derivative(ref.x());
  const auto dy = quadratic_basis_derivative(ref.y());
  std::array<Mat32, 2> out{Mat32::Zero(), Mat32::Zero()};
  const auto& vals = cell(c);
  for (int p = 0; p < 9; ++p) {
    const auto ix = static_cast<std::size_t>(point_ix(p));
    const auto iy = static_cast<std::size_t>(point_iy(p));
    out[0] += (dx[ix] * by[iy] / extent.x()) * vals[static_cast<std::size_t>(p)];
    out[1] += (bx[ix] * dy[iy] / extent.y()) * vals[static_cast<std::size_t>(p)];
  }
  return out;
}

double GradientField::continuity_defect() const {
  std::unordered_map<Index, Mat32> at_vertex;
  std::unordered_map<Index, Mat32> at_edge;
  double defect = 0.0;
  auto visit = [&defect](std::unordered_map<Index, Mat32>& seen, Index key, const Mat32& v) {
    auto [it, inserted] = seen.try_emplace(key, v);
    if (!inserted) defect = std::max(defect, (it->second - v).cwiseAbs().maxCoeff());
  };
  for (Index c = 0; c < mesh_->num_cells(); ++c) {
    const auto& vals = cell(c);
    for (std::size_t a = 0; a < 4; ++a) {
      visit(at_vertex, mesh_->cell(c)[a], vals[static_cast<std::size_t>(kVertexPoint[a])]);
      visit(at_edge, mesh_->cell_edges(c)[a], vals[static_cast<std::size_t>(kEdgePoint[a])]);
    }
  }
  return defect;
}

GradientField apply_discrete_gradient(const DeformationField& y) {
  const Mesh& mesh = y.mesh();
  GradientField phi(y.mesh_ptr());
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const LocalDiscreteGradient g = local_discrete_gradient(mesh.cell_extent(c));
    auto& vals = phi.cell(c);
    for (int comp = 0; comp < 3; ++comp) {
      const Eigen::Matrix<double, 18, 1> q = g * y.local_dofs(c, comp);
      for (int p = 0; p < 9; ++p) {
        vals[static_cast<std::size_t>(p)](comp, 0) = q(2 * p);
        vals[static_cast<std::size_t>(p)](comp, 1) = q(2 * p + 1);
      }
    }
  }
  return phi;
}

DeformationField interpolate_I3(const ValueFunction& value_fn, const MatrixFunction& gradient_fn,
                                std::shared_ptr<const Mesh> mesh) {
  DeformationField y(mesh);
  for (Index v = 0; v < mesh->num_vertices(); ++v) {
    const Vec3 val = value_fn(mesh->vertex(v));
    const Mat32 grad = gradient_fn(mesh->vertex(v));
    if (!val.allFinite() || !grad.allFinite())
      throw DataError("non-finite interpolation data at vertex " + std::to_string(v));
    y.set_value(v, val);
    y.set_gradient(v, grad);
  }
  return y;
}

GradientField interpolate_I2(const MatrixFunction& field, std::shared_ptr<const Mesh> mesh) {
  GradientField phi(mesh);
  for (Index c = 0; c < mesh->num_cells(); ++c) {
    auto& vals = phi.cell(c);
    Mat32 mean = Mat32::Zero();
    for (std::size_t a = 0; a < 4; ++a) {
      const Mat32 v = field(mesh->vertex(mesh->cell(c)[a]));
      vals[static_cast<std::size_t>(kVertexPoint[a])] = v;
      mean += 0.25 * v;
      vals[static_cast<std::size_t>(kEdgePoint[a])] = field(mesh->edge_midpoint(mesh->cell_edges(c)[a]));
    }
    vals[kCenterPoint] = mean;
    for (const auto& v : vals)
      if (!v.allFinite()) throw DataError("non-finite field value in cell " + std::to_string(c));
  }
  return phi;
}

// ---------------------------------------------------------------------------
// Bilinear interpolation

BilinearCell::BilinearCell(const Vec2& origin, const Vec2& extent,
                           const Eigen::Matrix<double, Eigen::Dynamic, 4>& corner_values)
    : origin_(origin), extent_(extent), values_(corner_values) {}

Eigen::VectorXd BilinearCell::value(const Vec2& x) const {
  const Vec2 r = reference_coords(origin_, extent_, x);
  const Eigen::Vector4d n((1 - r.x()) * (1 - r.y()), r.x() * (1 - r.y()), r.x() * r.y(), (1 - r.x()) * r.y());
  return values_ * n;
}

Eigen::MatrixXd BilinearCell::gradient(const Vec2& x) const {
  const Vec2 r = reference_coords(origin_, extent_, x);
  const Eigen::Vector4d d1 = Eigen::Vector4d(-(1 - r.y()), 1 - r.y(), r.y(), -r.y()) / extent_.x();
  const Eigen::Vector4d d2 = Eigen::Vector4d(-(1 - r.x()), -r.x(), r.x(), 1 - r.x()) / extent_.y();
  Eigen::MatrixXd out(values_.rows(), 2);
  out.col(0) = values_ * d1;
  out.col(1) = values_ * d2;
  return out;
}

BilinearCell interpolate_I1(const Mesh& mesh, Index cell,
                            const Eigen::Matrix<double, Eigen::Dynamic, 4>& corner_values) {
  return {mesh.cell_origin(cell), mesh.cell_extent(cell), corner_values};
}

std::array<Eigen::Matrix4d, 2> bilinear_corner_derivatives(const Vec2& extent) {
  const double iw = 1.0 / extent.x();
  const double ih = 1.0 / extent.y();
  Eigen::Matrix4d d1;
  d1 << -iw, iw, 0, 0,  //
      -iw, iw, 0, 0,    //
      0, 0, iw, -iw,    //
      0, 0, iw, -iw;
  Eigen::Matrix4d d2;
  d2 << -ih, 0, 0, ih,  //
      0, -ih, ih, 0,    //
      0, -ih, ih, 0,    //
      -ih, 0, 0, ih;
  return {d1, d2};
}

std::array<Mat32, 2> eval_q2_gradient(const GradientField& phi, Index cell, const Vec2& x) {
  return phi.derivative(cell, x);
}

// ---------------------------------------------------------------------------
// Q3 reconstruction

CubicCell::CubicCell(const Vec2& origin, const Vec2& extent, const Eigen::Matrix<double, 12, 1>& d)
    : origin_(origin), extent_(extent) {
  static const Eigen::Matrix<double, 16, 16> inverse = cubic_collocation_inverse();
  const double w = extent.x();
  const double h = extent.y();
  Eigen::Matrix<double, 16, 1> rhs;
  for (int a = 0; a < 4; ++a) {
    rhs(3 * a) = d(3 * a);
    rhs(3 * a + 1) = w * d(3 * a + 1);
    rhs(3 * a + 2) = h * d(3 * a + 2);
  }
  // twist at each corner from the edge differences of the neighbouring vertex gradients
  constexpr std::array<std::array<int, 4>, 4> nb{{{0, 3, 0, 1}, {1, 2, 0, 1}, {1, 2, 3, 2}, {0, 3, 3, 2}}};
  for (int a = 0; a < 4; ++a) {
    const auto& n = nb[static_cast<std::size_t>(a)];
    rhs(12 + a) = 0.5 * (w * (d(3 * n[1] + 1) - d(3 * n[0] + 1)) + h * (d(3 * n[3] + 2) - d(3 * n[2] + 2)));
  }
  const Eigen::Matrix<double, 16, 1> c = inverse * rhs;
  for (int b = 0; b < 4; ++b)
    for (int a = 0; a < 4; ++a) coeffs_(a, b) = c(4 * b + a);
}

namespace {
Eigen::Vector4d powers(double t) { return {1.0, t, t * t, t * t * t}; }
Eigen::Vector4d dpowers(double t) { return {0.0, 1.0, 2.0 * t, 3.0 * t * t}; }
Eigen::Vector4d ddpowers(double t) { return {0.0, 0.0, 2.0, 6.0 * t}; }
}  // namespace

double CubicCell::value(const Vec2& x) const {
  const Vec2 r = reference_coords(origin_, extent_, x);
  return powers(r.x()).dot(coeffs_ * powers(r.y()));
}

Vec2 CubicCell::gradient(const Vec2& x) const {
  const Vec2 r = reference_coords(origin_, extent_, x);
  return {dpowers(r.x()).dot(coeffs_ * powers(r.y())) / extent_.x(),
          powers(r.x()).dot(coeffs_ * dpowers(r.y())) / extent_.y()};
}

Mat2 CubicCell::hessian(const Vec2& x) const {
  const Vec2 r = reference_coords(origin_, extent_, x);
  const double w = extent_.x();
  const double h = extent_.y();
  Mat2 hess;
  hess(0, 0) = ddpowers(r.x()).dot(coeffs_ * powers(r.y())) / (w * w);
  hess(1, 1) = powers(r.x()).dot(coeffs_ * ddpowers(r.y())) / (h * h);
  hess(0, 1) = hess(1, 0) = dpowers(r.x()).dot(coeffs_ * dpowers(r.y())) / (w * h);
  return hess;
}

CubicCell reconstruct_cubic(const DeformationField& y, Index cell, int component) {
  const Mesh& mesh = y.mesh();
  return {mesh.cell_origin(cell), mesh.cell_extent(cell), y.local_dofs(cell, component)};
}

CellQuadrature gauss3x3(const Mesh& mesh, Index cell) {
  static constexpr std::array<double, 3> nodes{0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
  static constexpr std::array<double, 3> weights{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  const Vec2 origin = mesh.cell_origin(cell);
  const Vec2 extent = mesh.cell_extent(cell);
  const double area = extent.x() * extent.y();
  CellQuadrature q;
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 3; ++i) {
      q.points[3 * j + i] = origin + Vec2(nodes[i] * extent.x(), nodes[j] * extent.y());
      q.weights[3 * j + i] = weights[i] * weights[j] * area;
    }
  return q;
}

}  // namespace bilayer
