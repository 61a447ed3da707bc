#include "bilayer/energy.hpp"
#include "bilayer/flow.hpp"
#include "bilayer/kirchhoff.hpp"
#include "bilayer/mesh.hpp"

#include <benchmark/benchmark.h>

using namespace bilayer;

namespace {

std::shared_ptr<const Mesh> plate(int k) {
  auto spec = DomainSpec::rectangle(-5, 5, -2, 2, k);
  spec.dirichlet = side_selector(spec.layout(), Side::Left);
  return std::make_shared<const Mesh>(build_mesh(spec));
}

// a curved state reached after some steps, so constraints are not those of the flat plate
DeformationField warmed_up(const std::shared_ptr<const Mesh>& mesh, const ProblemData& data, const FlowConfig& cfg) {
  FlowStepper stepper(mesh, data, cfg);
  DeformationField y = initial_state(mesh, data);
  for (int i = 0; i < 50; ++i) y = stepper.step(y);
  return y;
}

void BM_AssembleStiffness(benchmark::State& state) {
  auto mesh = plate(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_stiffness(*mesh));
  state.counters["dofs"] = static_cast<double>(kDofsPerVertex * mesh->num_vertices());
}
BENCHMARK(BM_AssembleStiffness)->DenseRange(3, 6)->Unit(benchmark::kMillisecond);

void BM_DiscreteGradient(benchmark::State& state) {
  auto mesh = plate(static_cast<int>(state.range(0)));
  const auto y = interpolate_I3(identity_map, identity_gradient, mesh);
  for (auto _ : state) benchmark::DoNotOptimize(apply_discrete_gradient(y));
}
BENCHMARK(BM_DiscreteGradient)->DenseRange(3, 6)->Unit(benchmark::kMicrosecond);

void BM_FlowStep(benchmark::State& state) {
  auto mesh = plate(static_cast<int>(state.range(0)));
  const auto data = ProblemData::uniform(*mesh, -Mat2::Identity());
  FlowConfig cfg;
  cfg.tau = 0.005;
  cfg.solver = state.range(1) ? ConstraintSolver::Saddle : ConstraintSolver::NullSpace;
  const DeformationField y = warmed_up(mesh, data, cfg);
  FlowStepper stepper(mesh, data, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(stepper.step(y));
}
BENCHMARK(BM_FlowStep)->ArgsProduct({{3, 4, 5}, {0, 1}})->ArgNames({"mesh", "saddle"})->Unit(benchmark::kMillisecond);

void BM_ConstrainedSolve(benchmark::State& state) {
  auto mesh = plate(static_cast<int>(state.range(0)));
  const auto data = ProblemData::uniform(*mesh, -Mat2::Identity());
  FlowConfig cfg;
  const DeformationField y = warmed_up(mesh, data, cfg);
  const SparseMatrix k = assemble_stiffness(*mesh);
  BlockConstrainedSystem sys(k, kDofsPerVertex);
  sys.set_constraints(build_constraints(y).blocks);
  sys.factor(1.0 / cfg.tau + 1.0);
  const Eigen::VectorXd rhs = coupling_load_rhs(y, data);
  for (auto _ : state) benchmark::DoNotOptimize(sys.solve(rhs));
}
BENCHMARK(BM_ConstrainedSolve)->DenseRange(3, 5)->Unit(benchmark::kMicrosecond);

void BM_Factor(benchmark::State& state) {
  auto mesh = plate(static_cast<int>(state.range(0)));
  const auto data = ProblemData::uniform(*mesh, -Mat2::Identity());
  const DeformationField y = warmed_up(mesh, data, FlowConfig{});
  BlockConstrainedSystem sys(assemble_stiffness(*mesh), kDofsPerVertex);
  sys.set_constraints(build_constraints(y).blocks);
  for (auto _ : state) sys.factor(201.0);
}
BENCHMARK(BM_Factor)->DenseRange(3, 5)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
