#include "bilayer/shape.hpp"

#include "bilayer/energy.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bilayer {

std::string to_string(ShapeClass shape) { return shape == ShapeClass::Cylinder ? "cylinder" : "other"; }

ShapeSummary classify_shape(const DeformationField& y, const CylinderThresholds& thresholds) {
  const Mesh& mesh = y.mesh();
  ShapeSummary s;

  constexpr double inf = std::numeric_limits<double>::infinity();
  s.bounding_box = {inf, -inf, inf, -inf, inf, -inf};
  for (Index v = 0; v < mesh.num_vertices(); ++v) {
    const Vec3 p = y.value(v);
    for (int k = 0; k < 3; ++k) {
      auto& lo = s.bounding_box[static_cast<std::size_t>(2 * k)];
      auto& hi = s.bounding_box[static_cast<std::size_t>(2 * k + 1)];
      lo = std::min(lo, p(k));
      hi = std::max(hi, p(k));
    }
  }

  // free boundary edges as segments; scores skip a layer along them
  std::vector<std::pair<Vec2, Vec2>> free_edges;
  Vec2 lo = mesh.vertex(0), hi = mesh.vertex(0);
  for (const auto& x : mesh.vertices()) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  for (const auto& e : mesh.edges())
    if (e.on_boundary() && e.tag == BoundaryTag::Free) free_edges.emplace_back(mesh.vertex(e.vertices[0]), mesh.vertex(e.vertices[1]));
  const double layer = thresholds.free_layer * (hi - lo).minCoeff();
  auto in_core = [&](const Vec2& x) {
    for (const auto& [a, b] : free_edges) {
      const Vec2 ab = b - a;
      const double t = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
      if ((x - a - t * ab).norm() < layer) return false;
    }
    return true;
  };

  struct Sample {
    double weight, k1, k2, c2, s2;
  };
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(9 * mesh.num_cells()));

  const GradientField phi = apply_discrete_gradient(y);
  double total_area = 0.0;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const CellQuadrature q = gauss3x3(mesh, c);
    for (std::size_t i = 0; i < q.points.size(); ++i) {
      Mat2 h = approximate_second_fundamental_form(phi, c, q.points[i]);
      h = 0.5 * (h + h.transpose()).eval();
      s.max_curvature = std::max(s.max_curvature, h.norm());
      Eigen::SelfAdjointEigenSolver<Mat2> eig(h);
      // eigenvalues ascending; pick the one of largest magnitude
      const int dom = std::abs(eig.eigenvalues()(1)) >= std::abs(eig.eigenvalues()(0)) ? 1 : 0;
      const double k1 = eig.eigenvalues()(dom);
      const double k2 = eig.eigenvalues()(1 - dom);
      const Vec2 dir = eig.eigenvectors().col(dom);
      const double theta = std::atan2(dir.y(), dir.x());
      total_area += q.weights[i];
      if (in_core(q.points[i])) samples.push_back({q.weights[i], k1, k2, std::cos(2.0 * theta), std::sin(2.0 * theta)});
    }
  }
  if (samples.empty()) {
    // plate too narrow for the layer: score everything
    CylinderThresholds all = thresholds;
    all.free_layer = 0.0;
    return classify_shape(y, all);
  }
  double area = 0.0, k1_sum = 0.0;
  for (const auto& p : samples) {
    area += p.weight;
    k1_sum += p.weight * p.k1;
  }
  s.core_fraction = area / total_area;
  s.mean_curvature = k1_sum / area;

  double det = 0.0, var = 0.0, cx = 0.0, cy = 0.0;
  for (const auto& p : samples) {
    det += p.weight * std::abs(p.k1 * p.k2);
    var += p.weight * (p.k1 - s.mean_curvature) * (p.k1 - s.mean_curvature);
    cx += p.weight * p.c2;
    cy += p.weight * p.s2;
  }
  const double kbar = std::abs(s.mean_curvature);
  if (kbar > 0.0) {
    s.determinant_score = det / area / (kbar * kbar);
    s.variation_score = std::sqrt(var / area) / kbar;
  } else {
    s.determinant_score = s.variation_score = inf;
  }
  s.coherence_score = std::hypot(cx, cy) / area;

  const bool cylinder = kbar > thresholds.min_curvature && s.determinant_score < thresholds.determinant &&
                        s.variation_score < thresholds.variation && s.coherence_score > thresholds.coherence;
  s.shape = cylinder ? ShapeClass::Cylinder : ShapeClass::Other;
  return s;
}

}  // namespace bilayer
