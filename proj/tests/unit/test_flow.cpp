#include "doctest.h"
#include "helpers.hpp"

#include "bilayer/error.hpp"

#include <random>

using namespace bilayer;

namespace {

FlowConfig quick(double tau = 0.01) {
  FlowConfig cfg;
  cfg.tau = tau;
  cfg.delta_stop = 1e-6;
  cfg.max_outer = 20;
  return cfg;
}

}  // namespace

TEST_CASE("initial states") {
  auto mesh = testing::benchmark_mesh(2);
  const auto data = ProblemData::uniform(*mesh, -Mat2::Identity());
  const auto y0 = initial_state(mesh, data);
  CHECK(std::abs(min_metric_excess(y0)) < 1e-15);
  CHECK(isometry_defect(y0) == 0.0);
  for (Index v = 0; v < mesh->num_vertices(); ++v) CHECK((y0.value(v) - identity_map(mesh->vertex(v))).norm() == 0.0);

  auto square = testing::square_2pi(2);
  const auto sq_data = ProblemData::uniform(*square, -Mat2::Identity());
  const auto cyl = interpolate_I3(testing::cylinder, testing::cylinder_gradient, square);
  const auto accepted = initial_state(cyl, sq_data);
  CHECK((accepted.dofs() - cyl.dofs()).cwiseAbs().maxCoeff() < 1e-15);

  auto bad = cyl;
  bad.set_gradient(square->num_vertices() / 2, 0.5 * identity_gradient({0, 0}));
  CHECK_THROWS_AS(initial_state(bad, sq_data), InadmissibleState);

  // a stretched state is not admissible as a start either
  auto stretched = y0;
  stretched.set_gradient(mesh->num_vertices() - 1, 1.1 * identity_gradient({0, 0}));
  CHECK_THROWS_AS(initial_state(stretched, data), InadmissibleState);
}

TEST_CASE("constraint blocks on the flat state") {
  auto mesh = testing::benchmark_mesh(1);
  const auto y = interpolate_I3(identity_map, identity_gradient, mesh);
  const auto set = build_constraints(y);
  REQUIRE(set.blocks.size() == static_cast<std::size_t>(mesh->num_vertices()));
  for (Index v = 0; v < mesh->num_vertices(); ++v) {
    const auto& blk = set.blocks[static_cast<std::size_t>(v)];
    CHECK(blk.fixed == mesh->is_dirichlet_vertex(v));
    if (blk.fixed) continue;
    // rows: d1 w . e1, d2 w . e2 and d1 w . e2 + d2 w . e1
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 9);
    expected(0, dof_index(0, 0, 1)) = 1;
    expected(1, dof_index(0, 1, 2)) = 1;
    expected(2, dof_index(0, 1, 1)) = 1;
    expected(2, dof_index(0, 0, 2)) = 1;
    CHECK((blk.rows - expected).norm() == 0.0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(blk.rows);
    CHECK(svd.singularValues()(2) > 0.5);
    CHECK(blk.basis.cols() == 6);
    CHECK((blk.rows * blk.basis).norm() < 1e-15);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(blk.basis);
    CHECK(lu.rank() == 6);
  }
  CHECK(set.num_rows() == 3 * (mesh->num_vertices() - mesh->num_dirichlet_vertices()));

  auto degenerate = y;
  Mat32 g = Mat32::Zero();
  g(0, 0) = 1.0;
  g(0, 1) = 1.0;
  degenerate.set_gradient(mesh->num_vertices() - 1, g);
  CHECK_THROWS_AS(build_constraints(degenerate), InadmissibleState);
}

TEST_CASE("flat state without forcing is stationary") {
  auto mesh = testing::benchmark_mesh(2);
  const auto data = ProblemData::uniform(*mesh, Mat2::Zero());
  const auto y0 = initial_state(mesh, data);
  InnerStats stats;
  const auto y1 = fixed_point_solve(y0, data, quick(), &stats);
  CHECK(stats.iterations == 1);
  CHECK((y1.dofs() - y0.dofs()).norm() < 1e-12);

  const auto result = run_flow(mesh, data, quick());
  CHECK(result.reason == StopReason::Converged);
  CHECK(result.state.k == 1);
}

TEST_CASE("flow steps keep the invariants and contract") {
  auto mesh = testing::benchmark_mesh(2);
  const auto data = ProblemData::uniform(*mesh, -Mat2::Identity());
  FlowConfig cfg = quick(0.01);
  cfg.max_outer = 40;
  double prev = std::numeric_limits<double>::infinity();
  long steps = 0;
  const auto result = run_flow(mesh, data, cfg, [&](const FlowState& s, const TraceRecord& r) {
    CHECK(s.energy.total <= prev + 1e-12);
    prev = s.energy.total;
    CHECK(r.min_metric_excess >= -1e-10);
    CHECK(r.constraint_residual <= 1e-9);
    CHECK(r.contraction < 1.0);
    if (r.k > 0) {
      CHECK(r.inner_iters >= 1);
      CHECK(r.inner_iters <= 10);
    }
    ++steps;
  });
  CHECK(steps == 41);
  CHECK(result.trace.size() == 41);
  CHECK(result.state.energy.total < 40.0);
  CHECK(result.state.defect > 0.0);
}

TEST_CASE("metric defect telescopes over the increments") {
  auto mesh = testing::benchmark_mesh(2);
  Mat2 z;
  z << -3, 2, 2, -3;
  const auto data = ProblemData::uniform(*mesh, z);
  FlowStepper stepper(mesh, data, quick(0.02));
  DeformationField y = initial_state(mesh, data);
  std::vector<Mat2> sum(static_cast<std::size_t>(mesh->num_vertices()), Mat2::Zero());
  for (int k = 0; k < 15; ++k) {
    DeformationField next = stepper.step(y);
    for (Index v = 0; v < mesh->num_vertices(); ++v) {
      const Mat32 dg = next.gradient(v) - y.gradient(v);
      sum[static_cast<std::size_t>(v)] += dg.transpose() * dg;
    }
    y = std::move(next);
  }
  double worst = 0.0;
  for (Index v = 0; v < mesh->num_vertices(); ++v) {
    const Mat32 g = y.gradient(v);
    worst = std::max(worst, (g.transpose() * g - Mat2::Identity() - sum[static_cast<std::size_t>(v)]).norm());
  }
  CHECK(worst < 1e-8);
  CHECK(isometry_defect(y) > 0.0);
}

TEST_CASE("saddle and null-space steps agree") {
  auto mesh = testing::benchmark_mesh(1);
  const auto data = ProblemData::uniform(*mesh, -Mat2::Identity(), Vec3(0, 0, 0.1));
  FlowConfig a = quick(0.05), b = quick(0.05);
  b.solver = ConstraintSolver::Saddle;
  DeformationField ya = initial_state(mesh, data), yb = ya;
  FlowStepper sa(mesh, data, a), sb(mesh, data, b);
  for (int k = 0; k < 5; ++k) {
    ya = sa.step(ya);
    yb = sb.step(yb);
  }
  CHECK((ya.dofs() - yb.dofs()).norm() < 1e-7 * ya.dofs().norm());
}

TEST_CASE("non-converging inner iteration is reported") {
  auto mesh = testing::benchmark_mesh(2);
  const auto data = ProblemData::uniform(*mesh, -5.0 * Mat2::Identity());
  FlowConfig cfg = quick(0.02);
  cfg.max_inner = 1;
  CHECK_THROWS_AS(fixed_point_solve(initial_state(mesh, data), data, cfg), NoConvergence);
}

TEST_CASE("stopping rule and configuration checks") {
  auto mesh = testing::benchmark_mesh(1);
  const auto data = ProblemData::uniform(*mesh, -Mat2::Identity());
  FlowConfig cfg = quick(0.01);
  cfg.stop_tol = 1e6;
  const auto r = run_flow(mesh, data, cfg);
  CHECK(r.reason == StopReason::Converged);
  CHECK(r.state.k == 1);

  cfg.stop_tol = 1e-30;
  cfg.max_outer = 3;
  cfg.trace_every = 2;
  const auto capped = run_flow(mesh, data, cfg);
  CHECK(capped.reason == StopReason::MaxOuter);
  CHECK(capped.state.k == 3);
  REQUIRE(capped.trace.size() == 3);  // steps 0, 2 and the last one
  CHECK(capped.trace[1].k == 2);
  CHECK(capped.trace[2].k == 3);

  FlowConfig bad = quick();
  bad.tau = 0.0;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = quick();
  bad.max_inner = 0;
  CHECK_THROWS_AS(bad.validate(), DataError);
  CHECK(constraint_solver_from_string("saddle") == ConstraintSolver::Saddle);
  CHECK(to_string(ConstraintSolver::NullSpace) == "nullspace");
  CHECK_THROWS_AS(constraint_solver_from_string("lu"), DataError);

  auto free_mesh = testing::rectangle(0, 1, 0, 1, 1, false);
  CHECK_THROWS_AS(FlowStepper(free_mesh, ProblemData::uniform(*free_mesh, Mat2::Zero()), quick()), InvalidSpec);
}
