#include "bilayer/flow.hpp"

#include "bilayer/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace bilayer {

std::string to_string(ConstraintSolver solver) {
  return solver == ConstraintSolver::Saddle ? "saddle" : "nullspace";
}

ConstraintSolver constraint_solver_from_string(const std::string& name) {
  if (name == "nullspace") return ConstraintSolver::NullSpace;
  if (name == "saddle") return ConstraintSolver::Saddle;
  throw DataError("unknown constraint solver '" + name + "' (expected nullspace or saddle)");
}

void FlowConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DataError("flow: tau must be positive");
  if (!(delta_stop > 0.0)) throw DataError("flow: delta_stop must be positive");
  if (!(stop_tol > 0.0)) throw DataError("flow: stop_tol must be positive");
  if (max_outer < 1) throw DataError("flow: max_outer must be at least 1");
  if (max_inner < 1) throw DataError("flow: max_inner must be at least 1");
  if (trace_every < 1) throw DataError("flow: trace_every must be at least 1");
  if (!(energy_slack >= 0.0)) throw DataError("flow: energy_slack must be nonnegative");
}

// ---------------------------------------------------------------------------

SparseMatrix NodalConstraintSet::matrix(const std::vector<Index>& free_dofs, Index num_dofs) const {
  std::vector<int> position(static_cast<std::size_t>(num_dofs), -1);
  for (std::size_t i = 0; i < free_dofs.size(); ++i) position[static_cast<std::size_t>(free_dofs[i])] = static_cast<int>(i);
  std::vector<Triplet> triplets;
  int row = 0;
  for (std::size_t v = 0; v < blocks.size(); ++v) {
    const auto& blk = blocks[v];
    if (blk.fixed) continue;
    for (Index r = 0; r < blk.rows.rows(); ++r, ++row)
      for (Index s = 0; s < blk.rows.cols(); ++s) {
        if (blk.rows(r, s) == 0.0) continue;
        const int col = position[static_cast<std::size_t>(kDofsPerVertex * static_cast<Index>(v) + s)];
        if (col < 0) throw DataError("constraint touches a fixed DOF");
        triplets.emplace_back(row, col, blk.rows(r, s));
      }
  }
  SparseMatrix c(row, static_cast<int>(free_dofs.size()));
  c.setFromTriplets(triplets.begin(), triplets.end());
  c.makeCompressed();
  return c;
}

double NodalConstraintSet::residual(const Eigen::VectorXd& w) const {
  double worst = 0.0;
  for (std::size_t v = 0; v < blocks.size(); ++v) {
    const auto seg = w.segment(kDofsPerVertex * static_cast<Index>(v), kDofsPerVertex);
    const auto& blk = blocks[v];
    if (blk.fixed)
      worst = std::max(worst, seg.cwiseAbs().maxCoeff());
    else
      worst = std::max(worst, (blk.rows * seg).cwiseAbs().maxCoeff());
  }
  return worst;
}

Index NodalConstraintSet::num_rows() const {
  Index n = 0;
  for (const auto& b : blocks)
    if (!b.fixed) n += b.rows.rows();
  return n;
}

NodalConstraintSet build_constraints(const DeformationField& y) {
  const Mesh& mesh = y.mesh();
  NodalConstraintSet set;
  set.blocks.resize(static_cast<std::size_t>(mesh.num_vertices()));
  for (Index v = 0; v < mesh.num_vertices(); ++v) {
    auto& blk = set.blocks[static_cast<std::size_t>(v)];
    if (mesh.is_dirichlet_vertex(v)) {
      blk.fixed = true;
      continue;
    }
    const Mat32 phi = y.gradient(v);
    blk.rows = Eigen::MatrixXd::Zero(3, kDofsPerVertex);
    for (int c = 0; c < 3; ++c) {
      blk.rows(0, 3 * c + 1) = phi(c, 0);
      blk.rows(1, 3 * c + 2) = phi(c, 1);
      blk.rows(2, 3 * c + 1) = phi(c, 1);
      blk.rows(2, 3 * c + 2) = phi(c, 0);
    }
    const double area = phi.col(0).cross(phi.col(1)).norm();
    if (!(area > 1e-10 * phi.col(0).norm() * phi.col(1).norm()))
      throw InadmissibleState("constraint block of vertex " + std::to_string(v) + " is rank deficient");
    blk.basis = Eigen::MatrixXd::Zero(kDofsPerVertex, 6);
    for (int c = 0; c < 3; ++c) blk.basis(3 * c, c) = 1.0;
    for (int i = 0; i < 3; ++i) {
      const Vec3 omega = Vec3::Unit(i);
      const Vec3 r1 = omega.cross(phi.col(0));
      const Vec3 r2 = omega.cross(phi.col(1));
      for (int c = 0; c < 3; ++c) {
        blk.basis(3 * c + 1, 3 + i) = r1(c);
        blk.basis(3 * c + 2, 3 + i) = r2(c);
      }
    }
  }
  return set;
}

namespace {

void check_unit_metric(const DeformationField& y) {
  for (Index v = 0; v < y.mesh().num_vertices(); ++v) {
    const Mat32 g = y.gradient(v);
    const double dev = (g.transpose() * g - Mat2::Identity()).cwiseAbs().maxCoeff();
    if (!(dev <= 1e-12))
      throw InadmissibleState("initial state: nodal metric differs from the identity at vertex " + std::to_string(v));
  }
}

void apply_dirichlet(DeformationField& y, const ProblemData& data) {
  const Mesh& mesh = y.mesh();
  for (Index v = 0; v < mesh.num_vertices(); ++v) {
    if (!mesh.is_dirichlet_vertex(v)) continue;
    y.set_value(v, data.dirichlet_value(mesh.vertex(v)));
    y.set_gradient(v, data.dirichlet_gradient(mesh.vertex(v)));
  }
}

}  // namespace

DeformationField initial_state(std::shared_ptr<const Mesh> mesh, const ProblemData& data) {
  DeformationField y = interpolate_I3(identity_map, identity_gradient, std::move(mesh));
  apply_dirichlet(y, data);
  check_unit_metric(y);
  return y;
}

DeformationField initial_state(const DeformationField& user_state, const ProblemData& data) {
  DeformationField y = user_state;
  apply_dirichlet(y, data);
  check_unit_metric(y);
  return y;
}

// ---------------------------------------------------------------------------

FlowStepper::FlowStepper(std::shared_ptr<const Mesh> mesh, ProblemData data, FlowConfig cfg)
    : mesh_(std::move(mesh)), data_(std::move(data)), cfg_(cfg) {
  cfg_.validate();
  data_.validate(*mesh_);
  if (mesh_->num_dirichlet_vertices() == 0) throw InvalidSpec("the flow requires a nonempty clamped boundary");
  k_ = assemble_stiffness(*mesh_);
  for (Index v = 0; v < mesh_->num_vertices(); ++v)
    if (!mesh_->is_dirichlet_vertex(v))
      for (int s = 0; s < kDofsPerVertex; ++s) free_dofs_.push_back(kDofsPerVertex * v + s);

  if (cfg_.solver == ConstraintSolver::NullSpace) {
    reduced_ = std::make_unique<BlockConstrainedSystem>(k_, kDofsPerVertex);
    reduced_->set_factor_reuse(cfg_.factor_reuse, cfg_.max_pcg_iterations);
  } else {
    std::vector<Triplet> sel;
    for (std::size_t i = 0; i < free_dofs_.size(); ++i) sel.emplace_back(static_cast<int>(free_dofs_[i]), static_cast<int>(i), 1.0);
    SparseMatrix p(static_cast<int>(k_.rows()), static_cast<int>(free_dofs_.size()));
    p.setFromTriplets(sel.begin(), sel.end());
    a_free_ = (1.0 / cfg_.tau + 1.0) * SparseMatrix(p.transpose() * (k_ * p));
    a_free_.makeCompressed();
  }
}

EnergyBreakdown FlowStepper::energy(const DeformationField& y) const { return discrete_energy(y, data_, k_); }

double FlowStepper::stiffness_norm(const Eigen::VectorXd& w) const {
  return std::sqrt(std::max(0.0, w.dot(k_ * w)));
}

Eigen::VectorXd FlowStepper::solve_increment(const Eigen::VectorXd& rhs, InnerStats& stats) {
  if (reduced_) {
    SolveReport report;
    Eigen::VectorXd d = reduced_->solve(rhs, &report);
    stats.pcg_iterations += report.pcg_iterations;
    stats.factorizations += report.refactored ? 1 : 0;
    return d;
  }
  const auto nf = static_cast<Index>(free_dofs_.size());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(saddle_.num_primal() + saddle_.num_constraints());
  for (Index i = 0; i < nf; ++i) b(i) = rhs(free_dofs_[static_cast<std::size_t>(i)]);
  const SaddleSolution sol = saddle_.solve(b);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(rhs.size());
  for (Index i = 0; i < nf; ++i) d(free_dofs_[static_cast<std::size_t>(i)]) = sol.solution(i);
  return d;
}

DeformationField FlowStepper::step(const DeformationField& y_k, InnerStats* stats) {
  InnerStats local;
  constraints_ = build_constraints(y_k);
  if (reduced_) {
    reduced_->set_constraints(constraints_.blocks);
    if (!cfg_.factor_reuse || !reduced_->has_factor()) {
      reduced_->factor(1.0 / cfg_.tau + 1.0);
      ++local.factorizations;
    }
  } else {
    saddle_.factor(a_free_, constraints_.matrix(free_dofs_, k_.rows()));
    ++local.factorizations;
  }

  // (1/tau + 1) K d = F(Phi^l) - K y_k for the increment d = y^{l+1} - y_k
  const Eigen::VectorXd ky = k_ * y_k.dofs();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(y_k.dofs().size());
  DeformationField lagged = y_k;
  bool converged = false;
  double increment = 0.0;
  for (int it = 1; it <= cfg_.max_inner; ++it) {
    lagged.dofs() = y_k.dofs() + d;
    const Eigen::VectorXd rhs = coupling_load_rhs(lagged, data_) - ky;
    if (!rhs.allFinite()) throw NoConvergence("inner iteration diverged (non-finite load)");
    Eigen::VectorXd next = solve_increment(rhs, local);
    increment = stiffness_norm(next - d);
    d = std::move(next);
    local.iterations = it;
    local.increments.push_back(increment);
    if (!std::isfinite(increment)) throw NoConvergence("inner iteration diverged");
    if (increment <= cfg_.delta_stop) {
      converged = true;
      break;
    }
  }
  if (stats) *stats = local;
  if (!converged) {
    std::ostringstream msg;
    msg << "inner iteration did not converge within " << cfg_.max_inner << " iterations (last increment "
        << increment << ")";
    throw NoConvergence(msg.str());
  }
  last_residual_ = constraints_.residual(d);
  return DeformationField(y_k.mesh_ptr(), y_k.dofs() + d);
}

DeformationField fixed_point_solve(const DeformationField& y_k, const ProblemData& data, const FlowConfig& cfg,
                                   InnerStats* stats) {
  FlowStepper stepper(y_k.mesh_ptr(), data, cfg);
  return stepper.step(y_k, stats);
}

// ---------------------------------------------------------------------------

FlowResult run_flow(std::shared_ptr<const Mesh> mesh, const ProblemData& data, const FlowConfig& cfg,
                    const StepObserver& observer, std::optional<DeformationField> start) {
  FlowStepper stepper(mesh, data, cfg);
  DeformationField y0 = start ? initial_state(*start, stepper.data()) : initial_state(mesh, stepper.data());

  FlowResult result{FlowState{0, 0.0, y0, stepper.energy(y0), isometry_defect(y0), {}}, {}, StopReason::MaxOuter};
  FlowState& state = result.state;

  TraceRecord first;
  first.energy = state.energy;
  first.reporting_energy = reporting_energy(state.y, stepper.data());
  first.defect = state.defect;
  first.min_metric_excess = min_metric_excess(state.y);
  result.trace.push_back(first);
  if (observer) observer(state, first);

  const SparseMatrix k_abs = stepper.stiffness().cwiseAbs();
  using clock = std::chrono::steady_clock;
  for (long k = 1; k <= cfg.max_outer; ++k) {
    const auto t0 = clock::now();
    InnerStats stats;
    DeformationField next = stepper.step(state.y, &stats);
    const EnergyBreakdown e_next = stepper.energy(next);
    const Eigen::VectorXd d = next.dofs() - state.y.dofs();
    const double dissipation = 0.5 / cfg.tau * d.dot(stepper.stiffness() * d);
    const Eigen::VectorXd y_abs = state.y.dofs().cwiseAbs();

    TraceRecord rec;
    rec.k = k;
    rec.time = static_cast<double>(k) * cfg.tau;
    rec.energy = e_next;
    rec.inner_iters = stats.iterations;
    rec.pcg_iterations = stats.pcg_iterations;
    rec.factorizations = stats.factorizations;
    rec.energy_rate = std::abs(e_next.total - state.energy.total) / cfg.tau;
    rec.min_metric_excess = min_metric_excess(next);
    rec.constraint_residual = stepper.last_constraint_residual();
    rec.defect = isometry_defect(next);
    for (std::size_t i = 1; i < stats.increments.size(); ++i)
      if (stats.increments[i - 1] > 0.0) rec.contraction = std::max(rec.contraction, stats.increments[i] / stats.increments[i - 1]);

    // 1/2 y^T K y carries roundoff relative to the sum of its absolute terms, not to its value
    const double scale = std::abs(state.energy.total) + 0.5 * y_abs.dot(k_abs * y_abs);
    if (e_next.total + dissipation > state.energy.total + cfg.energy_slack * scale) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "energy increased at step " << k << ": " << state.energy.total << " -> " << e_next.total
          << " (dissipation " << dissipation << ")";
      throw InvariantViolation(msg.str());
    }
    if (rec.min_metric_excess < -1e-10)
      throw InvariantViolation("nodal metric dropped below the identity at step " + std::to_string(k));
    if (rec.constraint_residual > kSolveTolerance)
      throw InvariantViolation("linearized constraint violated at step " + std::to_string(k));

    const bool converged = rec.energy_rate <= cfg.stop_tol;
    const bool last = converged || k == cfg.max_outer;

    state.k = k;
    state.time = rec.time;
    state.y = std::move(next);
    state.energy = e_next;
    state.defect = rec.defect;
    state.inner_counts.push_back(stats.iterations);

    if (k % cfg.trace_every == 0 || last)
      rec.reporting_energy = reporting_energy(state.y, stepper.data());
    else
      rec.reporting_energy = std::numeric_limits<double>::quiet_NaN();
    rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    if (k % cfg.trace_every == 0 || last) result.trace.push_back(rec);
    if (observer) observer(state, rec);

    if (converged) {
      result.reason = StopReason::Converged;
      break;
    }
  }
  return result;
}

}  // namespace bilayer
