#pragma once

#include "bilayer/energy.hpp"
#include "bilayer/kirchhoff.hpp"
#include "bilayer/linsys.hpp"
#include "bilayer/mesh.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bilayer {

enum class ConstraintSolver { NullSpace, Saddle };

std::string to_string(ConstraintSolver solver);
ConstraintSolver constraint_solver_from_string(const std::string& name);

struct FlowConfig {
  double tau = 0.005;
  double delta_stop = 1e-4;
  double stop_tol = 1e-6;
  long max_outer = 1'000'000;
  int max_inner = 50;
  /// Reporting energy and trace rows are produced every trace_every steps (and for the last step).
  long trace_every = 1;
  ConstraintSolver solver = ConstraintSolver::NullSpace;
  /// Null-space solver only: precondition with the factorization of an earlier step and
  /// refactor once conjugate gradients need more than max_pcg_iterations.
  bool factor_reuse = true;
  int max_pcg_iterations = 12;
  /// Slack of the energy-decrease check, relative to |E| plus the magnitude of the terms of 1/2 y^T K y.
  double energy_slack = 1e-10;

  /// Throws DataError on non-positive tolerances or caps.
  void validate() const;

  bool operator==(const FlowConfig&) const = default;
};

/// One 3 x 9 block per free vertex acting on its 9 DOFs: the entries (1,1), (2,2) and (1,2) of
/// sym([grad w(z)]^T Phi(z)). Dirichlet vertices are fixed instead.
///
/// Each block also carries the null-space basis made of the three value unit vectors and the
/// infinitesimal rotations grad w = (omega x Phi_1, omega x Phi_2) for omega = e_1, e_2, e_3.
struct NodalConstraintSet {
  std::vector<BlockConstraint> blocks;

  /// Global sparse matrix over the free DOFs listed in `free_dofs` (3 rows per free vertex).
  SparseMatrix matrix(const std::vector<Index>& free_dofs, Index num_dofs) const;
  /// max over free vertices of the absolute constraint entries of w.
  double residual(const Eigen::VectorXd& w) const;
  Index num_rows() const;
};

/// Throws InadmissibleState when a block fails to have rank 3.
NodalConstraintSet build_constraints(const DeformationField& y);

/// Flat map (x1, x2, 0) with Dirichlet vertices overwritten by the interpolated clamping data.
/// Throws InadmissibleState if the resulting nodal metric differs from I_2 by more than 1e-12.
DeformationField initial_state(std::shared_ptr<const Mesh> mesh, const ProblemData& data);
/// Same checks for a user supplied state; its Dirichlet DOFs are overwritten.
DeformationField initial_state(const DeformationField& user_state, const ProblemData& data);

struct InnerStats {
  int iterations = 0;
  /// ||grad grad_h (y^{l+1} - y^l)|| for every inner iteration.
  std::vector<double> increments;
  /// Conjugate-gradient iterations over all linear solves of the step (0 for direct solves).
  int pcg_iterations = 0;
  int factorizations = 0;
};

/// Solver for a sequence of outer steps on a fixed mesh; caches the stiffness and the symbolic
/// analysis of the linear systems.
class FlowStepper {
 public:
  FlowStepper(std::shared_ptr<const Mesh> mesh, ProblemData data, FlowConfig cfg);

  /// One step of the discrete flow by fixed-point iteration on the lagged coupling term.
  /// Throws NoConvergence after max_inner iterations and InadmissibleState on singular systems.
  DeformationField step(const DeformationField& y_k, InnerStats* stats = nullptr);

  /// Energy with the bending part evaluated as 1/2 y^T K y.
  EnergyBreakdown energy(const DeformationField& y) const;
  /// ||grad grad_h w||.
  double stiffness_norm(const Eigen::VectorXd& w) const;

  const SparseMatrix& stiffness() const { return k_; }
  const FlowConfig& config() const { return cfg_; }
  const ProblemData& data() const { return data_; }
  const Mesh& mesh() const { return *mesh_; }

  /// Constraint residual of the last accepted increment.
  double last_constraint_residual() const { return last_residual_; }

 private:
  Eigen::VectorXd solve_increment(const Eigen::VectorXd& rhs, InnerStats& stats);

  std::shared_ptr<const Mesh> mesh_;
  ProblemData data_;
  FlowConfig cfg_;
  SparseMatrix k_;
  std::vector<Index> free_dofs_;
  NodalConstraintSet constraints_;
  std::unique_ptr<BlockConstrainedSystem> reduced_;
  SaddleSystem saddle_;
  SparseMatrix a_free_;
  double last_residual_ = 0.0;
};

/// Single outer step without caching.
DeformationField fixed_point_solve(const DeformationField& y_k, const ProblemData& data, const FlowConfig& cfg,
                                   InnerStats* stats = nullptr);

struct TraceRecord {
  long k = 0;
  double time = 0.0;
  EnergyBreakdown energy;
  /// NaN for steps between trace strides.
  double reporting_energy = 0.0;
  double defect = 0.0;
  int inner_iters = 0;
  double wall_ms = 0.0;
  /// |E_{k} - E_{k-1}| / tau
  double energy_rate = 0.0;
  double min_metric_excess = 0.0;
  double constraint_residual = 0.0;
  /// Largest ratio of consecutive inner increments (0 for a single iteration).
  double contraction = 0.0;
  int pcg_iterations = 0;
  int factorizations = 0;
};

struct FlowState {
  long k = 0;
  double time = 0.0;
  DeformationField y;
  EnergyBreakdown energy;
  double defect = 0.0;
  std::vector<int> inner_counts;
};

enum class StopReason { Converged, MaxOuter };

struct FlowResult {
  FlowState state;
  std::vector<TraceRecord> trace;
  StopReason reason = StopReason::MaxOuter;
};

/// Called after every accepted step with the full record of that step.
using StepObserver = std::function<void(const FlowState&, const TraceRecord&)>;

/// Runs the outer loop until |E_{k+1} - E_k| / tau <= stop_tol or max_outer steps.
/// Throws InvariantViolation when a step breaks energy decrease, metric monotonicity or the
/// linearized constraint.
FlowResult run_flow(std::shared_ptr<const Mesh> mesh, const ProblemData& data, const FlowConfig& cfg,
                    const StepObserver& observer = {}, std::optional<DeformationField> start = std::nullopt);

}  // namespace bilayer
