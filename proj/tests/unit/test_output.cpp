#include "doctest.h"
#include "helpers.hpp"

#include "bilayer/experiment.hpp"
#include "bilayer/output.hpp"
#include "bilayer/shape.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bilayer;
namespace fs = std::filesystem;

namespace {

struct VtkCounts {
  long points = -1;
  long cells = -1;
  std::vector<Vec3> positions;
  std::vector<int> types;
};

VtkCounts read_vtk(std::istream& in) {
  VtkCounts out;
  std::string word;
  while (in >> word) {
    if (word == "POINTS") {
      std::string type;
      in >> out.points >> type;
      for (long i = 0; i < out.points; ++i) {
        Vec3 p;
        in >> p.x() >> p.y() >> p.z();
        out.positions.push_back(p);
      }
    } else if (word == "CELLS") {
      long size = 0;
      in >> out.cells >> size;
    } else if (word == "CELL_TYPES") {
      long n = 0;
      in >> n;
      for (long i = 0; i < n; ++i) {
        int t = 0;
        in >> t;
        out.types.push_back(t);
      }
    }
  }
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bilayer_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("VTK output of the flat plate") {
  for (int k : {0, 4}) {
    auto mesh = testing::rectangle(-1, 1, -1, 1, k, false);
    std::stringstream ss;
    write_vtk(ss, interpolate_I3(identity_map, identity_gradient, mesh));
    CHECK(ss.str().rfind("# vtk DataFile Version", 0) == 0);
    const auto v = read_vtk(ss);
    const long n = (1L << k) + 1;
    CHECK(v.points == n * n);
    CHECK(v.cells == (n - 1) * (n - 1));
    CHECK(static_cast<long>(v.types.size()) == v.cells);
    for (int t : v.types) CHECK(t == 9);
  }
}

TEST_CASE("VTK points of the cylinder lie on the cylinder") {
  auto mesh = testing::square_2pi(3);
  std::stringstream ss;
  write_vtk(ss, interpolate_I3(testing::cylinder, testing::cylinder_gradient, mesh), "cylinder");
  const auto v = read_vtk(ss);
  REQUIRE(v.points == mesh->num_vertices());
  for (const auto& p : v.positions) CHECK(std::abs(p.x() * p.x() + (p.z() - 1) * (p.z() - 1) - 1.0) < 1e-9);
  CHECK_THROWS(write_vtk(fs::path("/nonexistent/dir/out.vtk"), interpolate_I3(identity_map, identity_gradient, mesh)));
}

TEST_CASE("trace rows") {
  CHECK(std::string(kTraceHeader) == "k,time,energy,bending,coupling,constant,load,reporting_energy,defect,inner_iters,wall_ms");
  TraceRecord r;
  r.k = 7;
  r.time = 0.035;
  r.energy.total = 12.5;
  r.reporting_energy = std::numeric_limits<double>::quiet_NaN();
  r.inner_iters = 2;
  const std::string row = trace_row(r);
  CHECK(row.rfind("7,0.035,12.5,", 0) == 0);
  CHECK(std::count(row.begin(), row.end(), ',') == 10);
  CHECK(row.find(",,") != std::string::npos);  // blank reporting energy
  CHECK(row.find("nan") == std::string::npos);
}

TEST_CASE("shape classification") {
  auto mesh = testing::square_2pi(3);
  const auto cyl = classify_shape(interpolate_I3(testing::cylinder, testing::cylinder_gradient, mesh));
  CHECK(cyl.shape == ShapeClass::Cylinder);
  CHECK(std::abs(cyl.mean_curvature) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(cyl.bounding_box[4] > -1e-9);
  CHECK(cyl.bounding_box[5] == doctest::Approx(2.0).epsilon(1e-6));

  const auto flat = classify_shape(interpolate_I3(identity_map, identity_gradient, mesh));
  CHECK(flat.shape == ShapeClass::Other);
  CHECK(flat.max_curvature < 1e-12);

  // saddle z = (x1 - pi)(x2 - pi) / 10 has curvatures of both signs
  auto saddle = interpolate_I3(
      [](const Vec2& x) { return Vec3(x.x(), x.y(), (x.x() - 3.14) * (x.y() - 3.14) / 10); },
      [](const Vec2& x) {
        Mat32 g;
        g << 1, 0, 0, 1, (x.y() - 3.14) / 10, (x.x() - 3.14) / 10;
        return g;
      },
      mesh);
  CHECK(classify_shape(saddle).shape == ShapeClass::Other);
  CHECK(to_string(ShapeClass::Cylinder) == "cylinder");
}

TEST_CASE("free edge layers do not spoil the cylinder flag") {
  // roll of curvature 0.8 along x on the clamped 10 x 4 plate, plus flaring near y = +-2
  auto mesh = testing::benchmark_mesh(4);
  const double k = 0.8;
  auto flare = [](double t) { return std::abs(t) > 1.4 ? 0.4 * std::pow(std::abs(t) - 1.4, 3) : 0.0; };
  auto flare_d = [](double t) { return std::abs(t) > 1.4 ? 1.2 * std::copysign(std::pow(std::abs(t) - 1.4, 2), t) : 0.0; };
  const auto y = interpolate_I3(
      [&](const Vec2& x) {
        const double s = k * (x.x() + 5);
        return Vec3(std::sin(s) / k, x.y(), (1 - std::cos(s)) / k + flare(x.y()));
      },
      [&](const Vec2& x) {
        const double s = k * (x.x() + 5);
        Mat32 g;
        g << std::cos(s), 0, 0, 1, std::sin(s), flare_d(x.y());
        return g;
      },
      mesh);
  const auto core = classify_shape(y);
  CHECK(core.shape == ShapeClass::Cylinder);
  CHECK(core.core_fraction < 0.6);
  CHECK(core.mean_curvature == doctest::Approx(k).epsilon(0.05));
  CylinderThresholds everywhere;
  everywhere.free_layer = 0.0;
  const auto all = classify_shape(y, everywhere);
  CHECK(all.core_fraction == 1.0);
  CHECK(all.shape == ShapeClass::Other);
}

TEST_CASE("cylinder errors vanish for the interpolated cylinder") {
  std::vector<double> l2;
  for (int k = 2; k <= 4; ++k) {
    auto mesh = testing::square_2pi(k);
    const auto e = cylinder_errors(interpolate_I3(testing::cylinder, testing::cylinder_gradient, mesh));
    l2.push_back(e.l2);
    CHECK(e.h1 < 0.05);
  }
  CHECK(l2[2] < l2[1]);
  CHECK(l2[1] < l2[0]);
  CHECK(l2[2] < 1e-3);
  auto mesh = testing::square_2pi(2);
  const auto flat = cylinder_errors(interpolate_I3(identity_map, identity_gradient, mesh));
  CHECK(flat.l2 > 0.5);
}

TEST_CASE("a short run writes its outputs") {
  ExperimentConfig cfg;
  cfg.name = "tiny";
  cfg.refinements = 2;
  cfg.flow.tau = 0.01;
  cfg.flow.delta_stop = 1e-4;
  cfg.flow.max_outer = 25;
  cfg.flow.trace_every = 5;
  cfg.snapshot_every = 10;
  const fs::path dir = scratch_dir("run");
  std::optional<DeformationField> final_state;
  const RunSummary s = run_single(cfg, RunOptions{dir, {}, 0}, &final_state);
  CHECK(s.status == RunStatus::Ok);
  CHECK(s.steps == 25);
  CHECK(s.reason == StopReason::MaxOuter);
  CHECK(s.cells == 16);
  CHECK(s.energy.total < 40.0);
  CHECK(s.max_inner <= 10);
  REQUIRE(final_state.has_value());
  CHECK(final_state->mesh().num_cells() == 16);

  for (const char* f : {"config.txt", "trace.csv", "summary.json", "final.vtk", "snapshot_0000010.vtk", "snapshot_0000020.vtk"})
    CHECK_MESSAGE(fs::exists(dir / f), f);
  CHECK(parse_config([&] {
          std::ifstream in(dir / "config.txt");
          return std::string(std::istreambuf_iterator<char>(in), {});
        }()) == cfg);

  std::ifstream trace(dir / "trace.csv");
  std::string line;
  std::getline(trace, line);
  CHECK(line == kTraceHeader);
  double prev = std::numeric_limits<double>::infinity();
  std::vector<long> ks;
  while (std::getline(trace, line)) {
    std::stringstream row(line);
    std::string k, t, e;
    std::getline(row, k, ',');
    std::getline(row, t, ',');
    std::getline(row, e, ',');
    ks.push_back(std::stol(k));
    CHECK(std::stod(e) <= prev);
    prev = std::stod(e);
  }
  CHECK(ks == std::vector<long>{0, 5, 10, 15, 20, 25});

  std::ifstream js(dir / "summary.json");
  const auto j = nlohmann::json::parse(js);
  CHECK(j["status"] == "ok");
  CHECK(j["steps"] == 25);
  CHECK(j["mesh"]["cells"] == 16);
  CHECK(j["energy"]["total"].get<double>() == doctest::Approx(s.energy.total));
  fs::remove_all(dir);
}

TEST_CASE("failures map to exit codes") {
  CHECK(exit_code(RunStatus::Ok) == 0);
  CHECK(exit_code(RunStatus::NoConvergence) == 3);
  CHECK(exit_code(RunStatus::InvariantViolation) == 4);
  CHECK(exit_code(RunStatus::Failed) == 1);

  ExperimentConfig cfg;
  cfg.refinements = 2;
  cfg.z = -5.0 * Mat2::Identity();
  cfg.flow.tau = 0.02;
  cfg.flow.max_inner = 1;
  cfg.flow.max_outer = 3;
  const RunSummary s = run_single(cfg);
  CHECK(s.status == RunStatus::NoConvergence);
  CHECK_FALSE(s.message.empty());

  ExperimentConfig sweep;
  sweep.refinements = 1;
  sweep.flow.max_outer = 2;
  sweep.sweep.tau = {0.01, 0.02};
  const fs::path root = scratch_dir("sweep");
  const auto result = run_experiment(sweep, root);
  CHECK(result.runs.size() == 2);
  CHECK(result.exit_code() == 0);
  CHECK(fs::exists(root / sweep.output_directory / "sweep.json"));
  CHECK(fs::exists(root / sweep.output_directory / "tau=0.01" / "summary.json"));
  fs::remove_all(root);
}

TEST_CASE("built-in invariant check passes") {
  const auto report = check_invariants();
  CHECK(report.passed);
  CHECK_FALSE(report.lines.empty());
}
