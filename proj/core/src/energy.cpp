#include "bilayer/energy.hpp"

#include "bilayer/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bilayer {

Vec3 identity_map(const Vec2& x) { return {x.x(), x.y(), 0.0}; }

Mat32 identity_gradient(const Vec2&) { return Mat32::Identity(); }

ProblemData ProblemData::uniform(const Mesh& mesh, const Mat2& z, const Vec3& f) {
  ProblemData data;
  data.z.assign(static_cast<std::size_t>(mesh.num_cells()), z);
  data.f.assign(static_cast<std::size_t>(mesh.num_cells()), f);
  data.dirichlet_value = identity_map;
  data.dirichlet_gradient = identity_gradient;
  data.validate(mesh);
  return data;
}

void ProblemData::validate(const Mesh& mesh) const {
  if (static_cast<Index>(z.size()) != mesh.num_cells() || static_cast<Index>(f.size()) != mesh.num_cells())
    throw DataError("problem data does not match the number of cells");
  for (std::size_t c = 0; c < z.size(); ++c) {
    if (!z[c].allFinite() || !f[c].allFinite()) throw DataError("non-finite problem data in cell " + std::to_string(c));
    if (std::abs(z[c](0, 1) - z[c](1, 0)) > 1e-14 * (1.0 + z[c].norm()))
      throw DataError("spontaneous curvature not symmetric in cell " + std::to_string(c));
  }
}

namespace {

struct NodalFrame {
  Vec3 unit1;
  Vec3 unit2;
  Vec3 normal;  // unit1 x unit2
  Mat3 jac1;    // P_{Phi_1}
  Mat3 jac2;    // P_{Phi_2}
};

// Derivative columns and the frame quantities entering the coupling term, per vertex.
std::vector<NodalFrame> nodal_frames(const DeformationField& y, bool with_jacobians) {
  const Mesh& mesh = y.mesh();
  std::vector<NodalFrame> frames(static_cast<std::size_t>(mesh.num_vertices()));
  for (Index v = 0; v < mesh.num_vertices(); ++v) {
    const Mat32 g = y.gradient(v);
    const double n1 = g.col(0).norm();
    const double n2 = g.col(1).norm();
    if (n1 < 1.0 - kMetricTolerance || n2 < 1.0 - kMetricTolerance)
      throw InadmissibleState("discrete gradient column shorter than 1 at vertex " + std::to_string(v));
    auto& fr = frames[static_cast<std::size_t>(v)];
    fr.unit1 = g.col(0) / n1;
    fr.unit2 = g.col(1) / n2;
    fr.normal = fr.unit1.cross(fr.unit2);
    if (with_jacobians) {
      fr.jac1 = unit_vector_jacobian(g.col(0));
      fr.jac2 = unit_vector_jacobian(g.col(1));
    }
  }
  return frames;
}

void require_admissible(const DeformationField& y) {
  const double excess = min_metric_excess(y);
  if (excess < -kMetricTolerance)
    throw InadmissibleState("nodal metric below identity (min eigenvalue excess " + std::to_string(excess) + ")");
}

}  // namespace

double min_metric_excess(const DeformationField& y) {
  double lo = std::numeric_limits<double>::infinity();
  for (Index v = 0; v < y.mesh().num_vertices(); ++v) {
    const Mat32 g = y.gradient(v);
    const Mat2 m = g.transpose() * g - Mat2::Identity();
    // smallest eigenvalue of a symmetric 2x2 matrix
    const double mean = 0.5 * (m(0, 0) + m(1, 1));
    const double diff = 0.5 * (m(0, 0) - m(1, 1));
    lo = std::min(lo, mean - std::hypot(diff, m(0, 1)));
  }
  return lo;
}

Mat3 unit_vector_jacobian(const Vec3& a) {
  const double n = a.norm();
  return (Mat3::Identity() - a * a.transpose() / (n * n)) / n;
}

namespace {

// Coupling, constant and load terms, all with the vertex quadrature.
void add_lower_order_terms(const DeformationField& y, const ProblemData& data, EnergyBreakdown& e) {
  const Mesh& mesh = y.mesh();
  const auto frames = nodal_frames(y, false);
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto& cv = mesh.cell(c);
    const double wq = 0.25 * mesh.cell_area(c);
    const Mat2& z = data.z[static_cast<std::size_t>(c)];
    const Vec3& f = data.f[static_cast<std::size_t>(c)];
    const auto dcorner = bilinear_corner_derivatives(mesh.cell_extent(c));
    std::array<Mat32, 4> grads;
    for (std::size_t a = 0; a < 4; ++a) grads[a] = y.gradient(cv[a]);
    for (std::size_t q = 0; q < 4; ++q) {
      const auto& fr = frames[static_cast<std::size_t>(cv[q])];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          Vec3 gij = Vec3::Zero();
          for (std::size_t a = 0; a < 4; ++a) gij += dcorner[static_cast<std::size_t>(i)](static_cast<Index>(q), static_cast<Index>(a)) * grads[a].col(j);
          e.coupling += wq * z(i, j) * gij.dot(fr.normal);
        }
      e.load += wq * f.dot(y.value(cv[q]));
    }
    e.constant += 0.5 * mesh.cell_area(c) * z.squaredNorm();
  }
  e.total = e.bending + e.coupling + e.constant - e.load;
}

}  // namespace

EnergyBreakdown discrete_energy(const DeformationField& y, const ProblemData& data) {
  require_admissible(y);
  const Mesh& mesh = y.mesh();
  const GradientField phi = apply_discrete_gradient(y);
  EnergyBreakdown e;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto quad = gauss3x3(mesh, c);
    for (std::size_t g = 0; g < quad.points.size(); ++g) {
      const auto d = phi.derivative(c, quad.points[g]);
      e.bending += 0.5 * quad.weights[g] * (d[0].squaredNorm() + d[1].squaredNorm());
    }
  }
  add_lower_order_terms(y, data, e);
  return e;
}

EnergyBreakdown discrete_energy(const DeformationField& y, const ProblemData& data, const SparseMatrix& stiffness) {
  require_admissible(y);
  EnergyBreakdown e;
  e.bending = 0.5 * y.dofs().dot(stiffness * y.dofs());
  add_lower_order_terms(y, data, e);
  return e;
}

Mat2 approximate_second_fundamental_form(const GradientField& phi, Index cell, const Vec2& x) {
  const Mat32 p = phi.value(cell, x);
  const auto d = phi.derivative(cell, x);
  const Vec3 normal = p.col(0).cross(p.col(1));
  Mat2 h;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) h(i, j) = normal.dot(d[static_cast<std::size_t>(i)].col(j));
  return h;
}

double reporting_energy(const DeformationField& y, const ProblemData& data) {
  const Mesh& mesh = y.mesh();
  const GradientField phi = apply_discrete_gradient(y);
  double energy = 0.0;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const Mat2& z = data.z[static_cast<std::size_t>(c)];
    const auto quad = gauss3x3(mesh, c);
    for (std::size_t g = 0; g < quad.points.size(); ++g)
      energy += 0.5 * quad.weights[g] * (approximate_second_fundamental_form(phi, c, quad.points[g]) + z).squaredNorm();
  }
  return energy;
}

double isometry_defect(const DeformationField& y) {
  const Mesh& mesh = y.mesh();
  std::vector<double> nodal(static_cast<std::size_t>(mesh.num_vertices()));
  for (Index v = 0; v < mesh.num_vertices(); ++v) {
    const Mat32 g = y.gradient(v);
    nodal[static_cast<std::size_t>(v)] = (g.transpose() * g - Mat2::Identity()).cwiseAbs().sum();
  }
  CornerValues corners(static_cast<std::size_t>(mesh.num_cells()));
  for (Index c = 0; c < mesh.num_cells(); ++c)
    for (std::size_t a = 0; a < 4; ++a)
      corners[static_cast<std::size_t>(c)][a] = nodal[static_cast<std::size_t>(mesh.cell(c)[a])];
  return lp_h_norm(mesh, corners, 1.0) / mesh.area();
}

Eigen::Matrix<double, 12, 12> local_stiffness(const Vec2& extent) {
  // Q2 Laplace stiffness on the w x h cell, integrated exactly with 3x3 Gauss
  static constexpr std::array<double, 3> nodes{0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
  static constexpr std::array<double, 3> weights{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  Eigen::Matrix<double, 9, 9> s = Eigen::Matrix<double, 9, 9>::Zero();
  const double w = extent.x();
  const double h = extent.y();
  for (std::size_t gj = 0; gj < 3; ++gj)
    for (std::size_t gi = 0; gi < 3; ++gi) {
      const auto bx = quadratic_basis(nodes[gi]);
      const auto by = quadratic_basis(nodes[gj]);
      const auto dx = quadratic_basis_derivative(nodes[gi]);
      const auto dy = quadratic_basis_derivative(nodes[gj]);
      Eigen::Matrix<double, 9, 2> grad;
      for (std::size_t p = 0; p < 9; ++p) {
        grad(static_cast<Index>(p), 0) = dx[p % 3] * by[p / 3] / w;
        grad(static_cast<Index>(p), 1) = bx[p % 3] * dy[p / 3] / h;
      }
      s += weights[gi] * weights[gj] * w * h * grad * grad.transpose();
    }
  const LocalDiscreteGradient g = local_discrete_gradient(extent);
  Eigen::Matrix<double, 12, 12> k = Eigen::Matrix<double, 12, 12>::Zero();
  for (int j = 0; j < 2; ++j) {
    Eigen::Matrix<double, 9, 12> gj;
    for (int p = 0; p < 9; ++p) gj.row(p) = g.row(2 * p + j);
    k += gj.transpose() * s * gj;
  }
  return k;
}

SparseMatrix assemble_stiffness(const Mesh& mesh) {
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_cells()) * 144 * 3);
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto k = local_stiffness(mesh.cell_extent(c));
    const auto& cv = mesh.cell(c);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int s = 0; s < 3; ++s)
          for (int t = 0; t < 3; ++t) {
            const double val = k(3 * a + s, 3 * b + t);
            for (int comp = 0; comp < 3; ++comp)
              triplets.emplace_back(static_cast<int>(dof_index(cv[static_cast<std::size_t>(a)], comp, s)),
                                    static_cast<int>(dof_index(cv[static_cast<std::size_t>(b)], comp, t)), val);
          }
  }
  const auto n = static_cast<int>(kDofsPerVertex * mesh.num_vertices());
  SparseMatrix k(n, n);
  k.setFromTriplets(triplets.begin(), triplets.end());
  k.makeCompressed();
  return k;
}

Eigen::VectorXd coupling_load_rhs(const DeformationField& lagged, const ProblemData& data) {
  const Mesh& mesh = lagged.mesh();
  const auto frames = nodal_frames(lagged, true);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(lagged.dofs().size());

  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto& cv = mesh.cell(c);
    const double wq = 0.25 * mesh.cell_area(c);
    const Mat2& z = data.z[static_cast<std::size_t>(c)];
    const Vec3& f = data.f[static_cast<std::size_t>(c)];
    const auto dcorner = bilinear_corner_derivatives(mesh.cell_extent(c));
    std::array<Mat32, 4> grads;
    for (std::size_t a = 0; a < 4; ++a) grads[a] = lagged.gradient(cv[a]);

    for (std::size_t q = 0; q < 4; ++q) {
      const auto qi = static_cast<Index>(q);
      const auto& fr = frames[static_cast<std::size_t>(cv[q])];
      // S = sum_ij Z_ij d_i I^1[Phi_j](z_q)
      Vec3 s = Vec3::Zero();
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          Vec3 gij = Vec3::Zero();
          for (std::size_t a = 0; a < 4; ++a) gij += dcorner[static_cast<std::size_t>(i)](qi, static_cast<Index>(a)) * grads[a].col(j);
          s += z(i, j) * gij;
        }
      // test function through d_i I^1[Psi_j]
      for (std::size_t a = 0; a < 4; ++a)
        for (int j = 0; j < 2; ++j) {
          const double coeff = wq * (z(0, j) * dcorner[0](qi, static_cast<Index>(a)) + z(1, j) * dcorner[1](qi, static_cast<Index>(a)));
          if (coeff == 0.0) continue;
          for (int comp = 0; comp < 3; ++comp) rhs(dof_index(cv[a], comp, 1 + j)) -= coeff * fr.normal(comp);
        }
      // test function through the normalized frame at z_q
      const Vec3 t1 = wq * fr.jac1 * fr.unit2.cross(s);
      const Vec3 t2 = wq * fr.jac2 * s.cross(fr.unit1);
      for (int comp = 0; comp < 3; ++comp) {
        rhs(dof_index(cv[q], comp, 1)) -= t1(comp);
        rhs(dof_index(cv[q], comp, 2)) -= t2(comp);
        rhs(dof_index(cv[q], comp, 0)) += wq * f(comp);
      }
    }
  }
  return rhs;
}

Eigen::VectorXd assemble_flow_rhs(const DeformationField& y_k, const GradientField& phi_lagged,
                                  const ProblemData& data, double tau, const SparseMatrix& stiffness) {
  if (!(tau > 0.0)) throw DataError("tau must be positive");
  const Mesh& mesh = y_k.mesh();
  // Phi^l enters only through its vertex values
  DeformationField lagged(y_k.mesh_ptr(), y_k.dofs());
  for (Index c = 0; c < mesh.num_cells(); ++c)
    for (std::size_t a = 0; a < 4; ++a)
      lagged.set_gradient(mesh.cell(c)[a], phi_lagged.cell(c)[static_cast<std::size_t>(kVertexPoint[a])]);
  Eigen::VectorXd rhs = stiffness * y_k.dofs() / tau;
  rhs += coupling_load_rhs(lagged, data);
  return rhs;
}

double discrete_inner_product(const Mesh& mesh, const CornerValues& phi, const CornerValues& psi) {
  double sum = 0.0;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto& a = phi[static_cast<std::size_t>(c)];
    const auto& b = psi[static_cast<std::size_t>(c)];
    sum += 0.25 * mesh.cell_area(c) * (a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]);
  }
  return sum;
}

double lp_h_norm(const Mesh& mesh, const CornerValues& phi, double p) {
  if (!(p >= 1.0)) throw DataError("L^p_h norm requires p >= 1");
  double sum = 0.0;
  for (Index c = 0; c < mesh.num_cells(); ++c)
    for (double v : phi[static_cast<std::size_t>(c)]) sum += 0.25 * mesh.cell_area(c) * std::pow(std::abs(v), p);
  return std::pow(sum, 1.0 / p);
}

}  // namespace bilayer
