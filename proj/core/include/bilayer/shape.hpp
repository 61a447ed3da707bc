#pragma once

#include "bilayer/kirchhoff.hpp"

#include <array>
#include <string>

namespace bilayer {

enum class ShapeClass { Cylinder, Other };

std::string to_string(ShapeClass shape);

/// Thresholds of the cylinder test. A state counts as a cylinder when, away from the free
/// boundary, its curvature is essentially one-directional (small Gauss curvature relative to
/// the dominant curvature), the dominant curvature is nearly constant, and the bending
/// direction is the same everywhere. Free edges carry boundary layers of reversed bending, so
/// points closer to them than `free_layer` times the short side of the plate are left out.
struct CylinderThresholds {
  /// upper bound for mean |k1 k2| / kbar^2
  double determinant = 0.05;
  /// upper bound for the relative standard deviation of the dominant curvature
  double variation = 0.1;
  /// lower bound for the length of the mean doubled direction vector
  double coherence = 0.95;
  /// lower bound for |kbar|; flatter states are never cylinders
  double min_curvature = 0.05;
  double free_layer = 0.25;
};

struct ShapeSummary {
  ShapeClass shape = ShapeClass::Other;
  /// xmin, xmax, ymin, ymax, zmin, zmax of the deformed vertices.
  std::array<double, 6> bounding_box{};
  /// max over Gauss points of |H_h| (Frobenius).
  double max_curvature = 0.0;
  /// Scores below use the points away from the free boundary; this is their share of the area.
  double core_fraction = 1.0;
  /// area mean of the dominant principal curvature k1 (|k1| >= |k2|).
  double mean_curvature = 0.0;
  double determinant_score = 0.0;
  double variation_score = 0.0;
  double coherence_score = 0.0;
};

/// Evaluates H_h at the 3x3 Gauss points of every cell.
ShapeSummary classify_shape(const DeformationField& y, const CylinderThresholds& thresholds = {});

}  // namespace bilayer
