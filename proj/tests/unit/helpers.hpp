#pragma once

#include "bilayer/energy.hpp"
#include "bilayer/flow.hpp"
#include "bilayer/kirchhoff.hpp"
#include "bilayer/mesh.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace testing {

using namespace bilayer;

inline std::shared_ptr<const Mesh> rectangle(double x0, double x1, double y0, double y1, int k, bool clamp_left = true) {
  auto spec = DomainSpec::rectangle(x0, x1, y0, y1, k);
  if (clamp_left) spec.dirichlet = side_selector(spec.layout(), Side::Left);
  return std::make_shared<const Mesh>(build_mesh(spec));
}

inline std::shared_ptr<const Mesh> benchmark_mesh(int k) { return rectangle(-5, 5, -2, 2, k); }

inline std::shared_ptr<const Mesh> square_2pi(int k) {
  return rectangle(0, 2 * std::numbers::pi, 0, 2 * std::numbers::pi, k);
}

inline Vec3 cylinder(const Vec2& x) { return {std::sin(x.x()), x.y(), 1.0 - std::cos(x.x())}; }
inline Mat32 cylinder_gradient(const Vec2& x) {
  Mat32 g;
  g << std::cos(x.x()), 0.0, 0.0, 1.0, std::sin(x.x()), 0.0;
  return g;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
