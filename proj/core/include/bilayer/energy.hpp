#pragma once

#include "bilayer/kirchhoff.hpp"
#include "bilayer/mesh.hpp"
#include "bilayer/types.hpp"

#include <array>
#include <vector>

namespace bilayer {

/// Spontaneous curvature, load and clamping data. Z and f are constant per cell.
struct ProblemData {
  std::vector<Mat2> z;
  std::vector<Vec3> f;
  ValueFunction dirichlet_value;
  MatrixFunction dirichlet_gradient;

  /// Constant Z and f; clamped to the identity map y(x) = (x1, x2, 0), grad y = I_{3x2}.
  static ProblemData uniform(const Mesh& mesh, const Mat2& z, const Vec3& f = Vec3::Zero());

  /// Throws DataError if sizes mismatch the mesh or some Z is not symmetric.
  void validate(const Mesh& mesh) const;
};

Vec3 identity_map(const Vec2& x);
Mat32 identity_gradient(const Vec2& x);

struct EnergyBreakdown {
  double bending = 0.0;
  double coupling = 0.0;
  double constant = 0.0;
  double load = 0.0;
  double total = 0.0;
};

/// Nodal-metric tolerance for the |d_j y| >= 1 normalizations.
inline constexpr double kMetricTolerance = 1e-9;

/// min over vertices of the smallest eigenvalue of grad y(z)^T grad y(z) - I_2.
double min_metric_excess(const DeformationField& y);

/// The discrete energy: exact bending term plus vertex-quadrature coupling, constant and load terms.
/// Throws InadmissibleState when the nodal metric drops below I_2 by more than kMetricTolerance.
EnergyBreakdown discrete_energy(const DeformationField& y, const ProblemData& data);
/// Same energy with the bending term computed as 1/2 y^T K y from a precomputed stiffness.
EnergyBreakdown discrete_energy(const DeformationField& y, const ProblemData& data, const SparseMatrix& stiffness);

/// Second fundamental form approximation (d1 Phi x d2 Phi) . d_i Phi_j at a point, without normalization.
Mat2 approximate_second_fundamental_form(const GradientField& phi, Index cell, const Vec2& x);

/// 1/2 int |H_h + Z|^2 with a 3x3 Gauss rule per cell.
double reporting_energy(const DeformationField& y, const ProblemData& data);

/// || grad y^T grad y - I_2 ||_{L^1_h} / |omega| with the entrywise absolute sum as matrix norm.
double isometry_defect(const DeformationField& y);

/// Stiffness of the bending term: yᵀ K y = int |∇∇_h y|^2. Size 9 * num_vertices.
SparseMatrix assemble_stiffness(const Mesh& mesh);

/// Local 12x12 scalar stiffness of one cell.
Eigen::Matrix<double, 12, 12> local_stiffness(const Vec2& extent);

/// P_a = (I - a aᵀ / |a|^2) / |a|, the derivative of a -> a / |a|.
Mat3 unit_vector_jacobian(const Vec3& a);

/// Linear functional w -> -δ(coupling)[y_lag](w) + (f, w)_h as a DOF vector.
/// Only the vertex gradients of `lagged` enter (they play the role of Phi^l).
Eigen::VectorXd coupling_load_rhs(const DeformationField& lagged, const ProblemData& data);

/// Right-hand side of the inner linear problem written for the new iterate y:
///   (1/tau + 1) K y = (1/tau) K y_k + coupling_load_rhs(Phi^l).
/// The vertex values of `phi_lagged` supply Phi^l.
Eigen::VectorXd assemble_flow_rhs(const DeformationField& y_k, const GradientField& phi_lagged,
                                  const ProblemData& data, double tau, const SparseMatrix& stiffness);

/// Values of a cellwise continuous scalar field at the corners of every cell (counterclockwise).
using CornerValues = std::vector<std::array<double, 4>>;

template <typename Fn>
CornerValues sample_corners(const Mesh& mesh, Fn&& fn) {
  CornerValues out(static_cast<std::size_t>(mesh.num_cells()));
  for (Index c = 0; c < mesh.num_cells(); ++c)
    for (std::size_t a = 0; a < 4; ++a) out[static_cast<std::size_t>(c)][a] = fn(c, mesh.vertex(mesh.cell(c)[a]));
  return out;
}

/// (phi, psi)_h = sum_T |T|/4 sum_{z in T} phi|_T(z) psi|_T(z).
double discrete_inner_product(const Mesh& mesh, const CornerValues& phi, const CornerValues& psi);
/// ||phi||_{L^p_h} = (|phi|^p, 1)_h^{1/p}.
double lp_h_norm(const Mesh& mesh, const CornerValues& phi, double p);

}  // namespace bilayer
