#pragma once

#include "bilayer/config.hpp"
#include "bilayer/flow.hpp"
#include "bilayer/shape.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bilayer {

enum class RunStatus { Ok, NoConvergence, InvariantViolation, Failed };

std::string to_string(RunStatus status);
/// 0 ok, 3 NoC, 4 invariant violation, 1 anything else.
int exit_code(RunStatus status);

/// Scaled errors ||y - y_h|| / |omega|^{1/2} and ||grad(y - y_h)|| / |omega|^{1/2}, with a
/// one-point rule at the cell centres and y_h evaluated by the cellwise bicubic reconstruction.
struct ExactErrors {
  double l2 = 0.0;
  double h1 = 0.0;
};

/// Errors against the cylinder (sin x1, x2, 1 - cos x1).
ExactErrors cylinder_errors(const DeformationField& y);

struct RunSummary {
  std::string label;
  ExperimentConfig config;
  RunStatus status = RunStatus::Ok;
  std::string message;
  Index vertices = 0;
  Index cells = 0;
  long steps = 0;
  StopReason reason = StopReason::MaxOuter;
  EnergyBreakdown energy;
  double reporting_energy = 0.0;
  double defect = 0.0;
  ShapeSummary shape;
  int max_inner = 0;
  double mean_inner = 0.0;
  double wall_seconds = 0.0;
  std::optional<ExactErrors> errors;
};

struct RunOptions {
  /// Directory for trace.csv, summary.json and VTK files; nothing is written when empty.
  std::filesystem::path directory;
  /// Called with short progress lines.
  std::function<void(const std::string&)> log;
  /// Progress line every this many steps (0 = only start and end).
  long log_every = 1000;
};

/// Runs one configuration (its sweep must be empty). Flow errors are caught and reported
/// through the status; configuration errors propagate as ConfigError.
RunSummary run_single(const ExperimentConfig& cfg, const RunOptions& options = {},
                      std::optional<DeformationField>* final_state = nullptr);

struct ExperimentResult {
  std::vector<RunSummary> runs;
  /// Largest exit code over the runs.
  int exit_code() const;
};

/// Runs every sweep entry below `root / cfg.output_directory` (one subdirectory per entry).
/// Failed entries do not stop the sweep.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& root,
                                const std::function<void(const std::string&)>& log = {});

std::string summary_json(const RunSummary& run);
std::string sweep_json(const ExperimentResult& result);

/// Short flow on a small clamped plate with every runtime invariant checked.
struct CheckReport {
  bool passed = true;
  std::vector<std::string> lines;
};
CheckReport check_invariants();

}  // namespace bilayer
