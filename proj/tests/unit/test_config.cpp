#include "doctest.h"
#include "helpers.hpp"

#include "bilayer/config.hpp"
#include "bilayer/error.hpp"
#include "bilayer/presets.hpp"

#include <set>

using namespace bilayer;

namespace {

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("every preset survives a text round trip") {
  CHECK(preset_names().size() >= 11);
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const ExperimentConfig cfg = preset(name);
    CHECK_NOTHROW(cfg.validate());
    CHECK_FALSE(preset_description(name).empty());
    const std::string text = serialize_config(cfg);
    const ExperimentConfig back = parse_config(text);
    CHECK(back == cfg);
    CHECK(serialize_config(back) == text);
  }
  CHECK_THROWS_AS(preset("table4"), ConfigError);
}

TEST_CASE("parsing a minimal file fills in defaults") {
  const auto cfg = parse_config(
      "# comment only line\n"
      "name = plate   # trailing comment\n"
      "\n"
      "domain.bounds = -1, 1, -0.5, 0.5\n"
      "problem.z11 = -2\n"
      "flow.tau = 0.0025\n"
      "sweep.tau = 0.02, 0.01\n");
  CHECK(cfg.name == "plate");
  CHECK(cfg.bounds == std::array<double, 4>{-1, 1, -0.5, 0.5});
  CHECK(cfg.z(0, 0) == -2.0);
  CHECK(cfg.z(1, 1) == -1.0);
  CHECK(cfg.flow.tau == 0.0025);
  CHECK(cfg.flow.stop_tol == 1e-6);
  CHECK(cfg.sweep.tau == std::vector<double>{0.02, 0.01});
  CHECK(cfg.refinements == 4);
  CHECK(cfg.dirichlet == "left");
}

TEST_CASE("malformed files report the offending line") {
  CHECK(error_line("name = a\nflow.tua = 0.1\n") == 2);
  CHECK(error_line("name = a\nname = b\n") == 2);
  CHECK(error_line("\n\nflow.tau = fast\n") == 3);
  CHECK(error_line("missing equals sign\n") == 1);
  CHECK(error_line("name = a\nflow.tau = -1\n") == 2);
  CHECK(error_line("problem.z12 = 0.5\nname = a\nproblem.z21 = 0.25\n") >= 1);
  CHECK(error_line("domain.refinements = 2.5\n") == 1);
  CHECK(error_line("domain.bounds = 1, 2, 3\n") == 1);
  CHECK(error_line("domain.shape = triangle\n") == 1);
  CHECK(error_line("x\ndomain.dirichlet = x=7[0,1]\n") == 1);
  CHECK(error_line("domain.dirichlet = x=7[0,1\n") == 1);
  // well formed but off the outline: rejected when the mesh is built
  const auto off = parse_config("domain.dirichlet = x=7[0,1]\n");
  CHECK_THROWS_AS(build_mesh(off.domain()), InvalidSpec);
  CHECK(error_line("flow.solver = cholesky\n") == 1);
  CHECK(error_line("sweep.mode = zip\nsweep.tau = 1, 2\nsweep.refinements = 1\n") >= 1);
  CHECK_THROWS_AS(load_config("/nonexistent/plate.cfg"), ConfigError);
}

TEST_CASE("dirichlet selector grammar") {
  const auto layout = DomainSpec::rectangle(-3, 3, -2, 2, 0).layout();
  CHECK(parse_dirichlet("left", layout).segments.size() == 1);
  const auto corner = parse_dirichlet("x=-3[-2,0]; y=-2[-3,0]", layout);
  REQUIRE(corner.segments.size() == 2);
  CHECK(corner.segments[0].axis == BoundarySegment::Axis::Vertical);
  CHECK(corner.segments[1].axis == BoundarySegment::Axis::Horizontal);
  CHECK_THROWS_AS(parse_dirichlet("middle", layout), ConfigError);
  CHECK_THROWS_AS(parse_dirichlet("x=-3[0]", layout), ConfigError);
}

TEST_CASE("preset parameters") {
  const auto b = preset("benchmark");
  CHECK(b.bounds == std::array<double, 4>{-5, 5, -2, 2});
  CHECK(b.z == -Mat2::Identity());
  CHECK(b.refinements == 5);
  CHECK(b.flow.tau == 0.005);

  const auto t1 = preset("table1");
  CHECK(t1.refinements == 4);
  CHECK(t1.flow.delta_stop == 1e-3);
  CHECK(t1.sweep.tau == std::vector<double>{0.02, 0.01, 0.005, 0.0025});
  CHECK(expand_sweep(t1).size() == 8);

  const auto t3 = preset("table3-convergence");
  CHECK(t3.z(0, 0) == -1.0);
  CHECK(t3.z(1, 1) == -0.5);
  CHECK(t3.flow.delta_stop == 1e-4);
  CHECK(t3.exact == ExactSolution::Cylinder);
  CHECK(t3.bounds[1] == doctest::Approx(2 * std::numbers::pi));
  const auto runs = expand_sweep(t3);
  REQUIRE(runs.size() == 4);
  for (std::size_t l = 0; l < runs.size(); ++l) {
    CHECK(runs[l].config.refinements == static_cast<int>(l) + 3);
    CHECK(runs[l].config.flow.tau == doctest::Approx(std::pow(2.0, -static_cast<double>(l + 3)) / 25.0));
  }

  const auto cc = preset("corner-clamp");
  const Mesh m = build_mesh([&] {
    auto spec = cc.domain();
    spec.refinements = 2;
    return spec;
  }());
  CHECK(m.num_dirichlet_vertices() > 0);
  CHECK(preset("ishape").shape == DomainSpec::Shape::IShape);
  CHECK(preset("oshape").z == -5.0 * Mat2::Identity());
  Mat2 cork;
  cork << -3, 2, 2, -3;
  CHECK(preset("corkscrew").z == cork);
}

TEST_CASE("sweep expansion") {
  ExperimentConfig cfg;
  cfg.sweep.tau = {0.1, 0.2};
  cfg.sweep.half_length = {5, 3, 2};
  auto runs = expand_sweep(cfg);
  REQUIRE(runs.size() == 6);
  std::set<std::string> labels;
  for (const auto& r : runs) {
    labels.insert(r.label);
    CHECK(r.config.sweep.empty());
    CHECK(r.config.bounds[0] == -r.config.bounds[1]);
  }
  CHECK(labels.size() == 6);
  CHECK(runs.front().label == "L=5_tau=0.1");
  CHECK(runs.back().config.bounds[1] == 2.0);
  CHECK(runs.back().config.flow.tau == 0.2);

  ExperimentConfig zs;
  zs.sweep.z_scale = {1, 5};
  runs = expand_sweep(zs);
  REQUIRE(runs.size() == 2);
  CHECK(runs[1].config.z == -5.0 * Mat2::Identity());
  CHECK(runs[1].label == "zscale=5");

  ExperimentConfig none;
  runs = expand_sweep(none);
  REQUIRE(runs.size() == 1);
  CHECK(runs[0].label.empty());
  CHECK(runs[0].config == none);
}
