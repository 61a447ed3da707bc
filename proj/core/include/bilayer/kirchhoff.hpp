#pragma once

#include "bilayer/mesh.hpp"
#include "bilayer/types.hpp"

#include <array>
#include <functional>
#include <memory>
#include <vector>

namespace bilayer {

/// Maps the 12 scalar Kirchhoff DOFs of one component on a cell to the 18 values of
/// its discrete gradient at the 9 biquadratic Lagrange points.
///
/// Column 3a + s is (vertex a, slot s) with vertices counterclockwise from the lower-left
/// corner and slot 0 = value, 1 = d1, 2 = d2. Row 2p + j is derivative j at Lagrange point
/// p = 3 * iy + ix, (ix, iy) in {0, 1, 2}^2 on the cell.
using LocalDiscreteGradient = Eigen::Matrix<double, 18, 12>;

/// Lagrange point index of cell vertex a (counterclockwise from lower-left).
inline constexpr std::array<int, 4> kVertexPoint{0, 2, 8, 6};
/// Lagrange point index of the midpoint of cell edge e (bottom, right, top, left).
inline constexpr std::array<int, 4> kEdgePoint{1, 5, 7, 3};
inline constexpr int kCenterPoint = 4;

/// Realizes the discrete gradient on a w x h rectangle.
///
/// Vertex rows copy the vertex gradient; at edge midpoints the tangential derivative
/// comes from the cubic Hermite trace of the edge and the normal derivative is the
/// mean of the endpoint normal derivatives; the centre value is the mean of the four
/// vertex gradients. Throws InvalidSpec for a degenerate extent.
LocalDiscreteGradient local_discrete_gradient(const Vec2& extent);

/// Element of W_h^3: value and gradient at every vertex.
class DeformationField {
 public:
  explicit DeformationField(std::shared_ptr<const Mesh> mesh);
  DeformationField(std::shared_ptr<const Mesh> mesh, Eigen::VectorXd dofs);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }

  /// Flat DOF vector, layout dof_index(vertex, component, slot).
  const Eigen::VectorXd& dofs() const { return dofs_; }
  Eigen::VectorXd& dofs() { return dofs_; }

  Vec3 value(Index v) const;
  Mat32 gradient(Index v) const;
  void set_value(Index v, const Vec3& y);
  void set_gradient(Index v, const Mat32& g);

  /// The 12 scalar DOFs of component c on cell `cell`, ordered as LocalDiscreteGradient columns.
  Eigen::Matrix<double, 12, 1> local_dofs(Index cell, int component) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  Eigen::VectorXd dofs_;
};

/// Element of Gamma_h^3: a continuous piecewise biquadratic 3x2 matrix field stored as the
/// values at the 9 Lagrange points of every cell.
class GradientField {
 public:
  using CellValues = std::array<Mat32, 9>;

  explicit GradientField(std::shared_ptr<const Mesh> mesh);

  const Mesh& mesh() const { return *mesh_; }
  const CellValues& cell(Index c) const { return values_[static_cast<std::size_t>(c)]; }
  CellValues& cell(Index c) { return values_[static_cast<std::size_t>(c)]; }

  /// Value at a point of cell c (biquadratic interpolation of the 9 values).
  Mat32 value(Index c, const Vec2& x) const;
  /// (d1 Phi, d2 Phi) at a point of cell c. Throws DataError if x lies outside the cell.
  std::array<Mat32, 2> derivative(Index c, const Vec2& x) const;

  /// Largest mismatch between values stored for the same point by neighbouring cells.
  double continuity_defect() const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<CellValues> values_;
};

/// Discrete gradient of a deformation, cellwise application of local_discrete_gradient.
GradientField apply_discrete_gradient(const DeformationField& y);

using ValueFunction = std::function<Vec3(const Vec2&)>;
using MatrixFunction = std::function<Mat32(const Vec2&)>;

/// Nodal interpolation into W_h^3 from a map and its gradient.
DeformationField interpolate_I3(const ValueFunction& value_fn, const MatrixFunction& gradient_fn,
                                std::shared_ptr<const Mesh> mesh);

/// Interpolation into Gamma_h^3: point values at vertices and edge midpoints, mean of the
/// four vertex values at cell centres.
GradientField interpolate_I2(const MatrixFunction& field, std::shared_ptr<const Mesh> mesh);

/// Bilinear Lagrange interpolant of corner values on one rectangle (the I_h^1 operator restricted to a cell).
/// Corner order is counterclockwise from lower-left; each corner carries a vector of m values.
class BilinearCell {
 public:
  BilinearCell(const Vec2& origin, const Vec2& extent, const Eigen::Matrix<double, Eigen::Dynamic, 4>& corner_values);

  Eigen::VectorXd value(const Vec2& x) const;
  /// m x 2 matrix of partial derivatives.
  Eigen::MatrixXd gradient(const Vec2& x) const;

 private:
  Vec2 origin_;
  Vec2 extent_;
  Eigen::Matrix<double, Eigen::Dynamic, 4> values_;
};

BilinearCell interpolate_I1(const Mesh& mesh, Index cell, const Eigen::Matrix<double, Eigen::Dynamic, 4>& corner_values);

/// Coefficients D(q, a) such that d_i I_h^1[phi](corner q) = sum_a D_i(q, a) phi(corner a) on a w x h cell.
std::array<Eigen::Matrix4d, 2> bilinear_corner_derivatives(const Vec2& extent);

/// ∇∇_h y at a point: (d1 Phi, d2 Phi) with Phi = ∇_h y.
std::array<Mat32, 2> eval_q2_gradient(const GradientField& phi, Index cell, const Vec2& x);

/// 1D quadratic Lagrange basis on [0, 1] with nodes 0, 1/2, 1, and its derivative.
std::array<double, 3> quadratic_basis(double t);
std::array<double, 3> quadratic_basis_derivative(double t);

/// Bicubic Hermite function on a cell matching the Kirchhoff DOFs of one component. The
/// missing twist derivatives d1 d2 at the corners are the averaged edge differences of the
/// vertex gradients, so bilinear functions are reproduced. Used for diagnostics only.
class CubicCell {
 public:
  CubicCell(const Vec2& origin, const Vec2& extent, const Eigen::Matrix<double, 12, 1>& local_dofs);

  double value(const Vec2& x) const;
  Vec2 gradient(const Vec2& x) const;
  Mat2 hessian(const Vec2& x) const;

 private:
  Vec2 origin_;
  Vec2 extent_;
  /// coefficients c(a, b) of xi^a eta^b in reference coordinates
  Eigen::Matrix4d coeffs_;
};

CubicCell reconstruct_cubic(const DeformationField& y, Index cell, int component);

/// Tensor 3-point Gauss rule on a cell: points and weights (weights sum to the cell area).
struct CellQuadrature {
  std::array<Vec2, 9> points;
  std::array<double, 9> weights;
};
CellQuadrature gauss3x3(const Mesh& mesh, Index cell);

}  // namespace bilayer
