#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>

namespace bilayer {

using Index = std::int64_t;

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
/// Deformation gradient at a point: columns are the partial derivatives d1 y and d2 y.
using Mat32 = Eigen::Matrix<double, 3, 2>;

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

/// Scalar degrees of freedom per vertex: value, d1, d2 for each of the 3 components.
inline constexpr int kDofsPerVertex = 9;
/// Scalar Kirchhoff degrees of freedom per vertex and component (value, d1, d2).
inline constexpr int kScalarDofsPerVertex = 3;

/// Global index of (vertex, component, slot) where slot 0 is the value and 1, 2 the partials.
constexpr Index dof_index(Index vertex, int component, int slot) {
  return kDofsPerVertex * vertex + kScalarDofsPerVertex * component + slot;
}

}  // namespace bilayer
