#pragma once

#include "bilayer/flow.hpp"
#include "bilayer/mesh.hpp"
#include "bilayer/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace bilayer {

enum class SweepMode { Product, Zip };
enum class ExactSolution { None, Cylinder };

std::string to_string(SweepMode mode);
std::string to_string(ExactSolution exact);

/// Lists of values that replace the base parameters run by run. Empty lists do not vary.
struct SweepSpec {
  std::vector<double> tau;
  std::vector<int> refinements;
  /// multiplies Z
  std::vector<double> z_scale;
  /// rectangles only: the x extent becomes (-L, L)
  std::vector<double> half_length;
  SweepMode mode = SweepMode::Product;

  bool empty() const { return tau.empty() && refinements.empty() && z_scale.empty() && half_length.empty(); }
  bool operator==(const SweepSpec&) const = default;
};

/// Everything needed to run one experiment (or one sweep of runs).
///
/// Text format: one `key = value` per line, `#` starts a comment, lists are comma separated.
/// Keys are listed in serialize_config; unknown keys are errors.
struct ExperimentConfig {
  std::string name = "experiment";
  DomainSpec::Shape shape = DomainSpec::Shape::Rectangle;
  /// xmin, xmax, ymin, ymax (rectangles only)
  std::array<double, 4> bounds{-5.0, 5.0, -2.0, 2.0};
  int refinements = 4;
  /// `left`, `right`, `bottom`, `top`, or segments `x=c[lo,hi]` / `y=c[lo,hi]` separated by `;`.
  std::string dirichlet = "left";
  Mat2 z = -Mat2::Identity();
  Vec3 f = Vec3::Zero();
  FlowConfig flow;
  std::string output_directory = "out";
  /// VTK snapshot every this many steps (0 disables intermediate snapshots; the final state is always written).
  long snapshot_every = 1000;
  SweepSpec sweep;
  ExactSolution exact = ExactSolution::None;

  /// Throws ConfigError on non-positive sizes, non-symmetric Z or an unparsable selector.
  void validate() const;

  DomainSpec domain() const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses the selector grammar above against the outline of `layout`.
DirichletSelector parse_dirichlet(const std::string& text, const MacroLayout& layout);

/// Throws ConfigError carrying the offending line number.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);

/// The individual runs of a sweep, each with an empty sweep and a label such as `tau=0.005_ref=4`.
struct SweepRun {
  std::string label;
  ExperimentConfig config;
};
std::vector<SweepRun> expand_sweep(const ExperimentConfig& cfg);

}  // namespace bilayer
