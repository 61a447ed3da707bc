#include "bilayer/presets.hpp"

#include "bilayer/error.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <numbers>

namespace bilayer {

namespace {

struct Entry {
  std::string description;
  std::function<ExperimentConfig()> make;
};

ExperimentConfig clamped_plate(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.bounds = {-5.0, 5.0, -2.0, 2.0};
  c.dirichlet = "left";
  c.output_directory = name;
  c.flow.trace_every = 100;
  return c;
}

Mat2 diag(double a, double b) {
  Mat2 m;
  m << a, 0.0, 0.0, b;
  return m;
}

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> table = {
      {"benchmark",
       {"(-5,5)x(-2,2) clamped left, Z=-I, mesh 5; rolls up into a cylinder (long run)",
        [] {
          auto c = clamped_plate("benchmark");
          c.refinements = 5;
          c.flow.tau = 0.005;
          c.flow.delta_stop = 1e-4;
          return c;
        }}},
      {"table1",
       {"equilibrium energies on mesh 4 for tau 0.02..0.0025 and Z=-I, -5I; Z=-5I with tau=0.02 ends in NoC",
        [] {
          auto c = clamped_plate("table1");
          c.refinements = 4;
          c.flow.delta_stop = 1e-3;
          c.sweep.tau = {0.02, 0.01, 0.005, 0.0025};
          c.sweep.z_scale = {1.0, 5.0};
          return c;
        }}},
      {"table2",
       {"isometry defect at equilibrium on mesh 4 for tau 0.02..0.0025; halves with tau",
        [] {
          auto c = clamped_plate("table2");
          c.refinements = 4;
          c.flow.delta_stop = 1e-3;
          c.sweep.tau = {0.02, 0.01, 0.005, 0.0025};
          return c;
        }}},
      {"table3-convergence",
       {"(0,2pi)^2 clamped left, Z=-diag(1,0.5), exact cylinder; errors against (sin x, y, 1-cos x) on meshes 3..6",
        [] {
          ExperimentConfig c;
          c.name = "table3-convergence";
          c.output_directory = c.name;
          c.flow.trace_every = 100;
          const double tp = 2.0 * std::numbers::pi;
          c.bounds = {0.0, tp, 0.0, tp};
          c.dirichlet = "left";
          c.z = -diag(1.0, 0.5);
          c.refinements = 3;
          c.flow.delta_stop = 1e-4;
          c.sweep.refinements = {3, 4, 5, 6};
          for (int l : c.sweep.refinements) c.sweep.tau.push_back(std::ldexp(1.0, -l) / 25.0);
          c.flow.tau = c.sweep.tau.front();
          c.sweep.mode = SweepMode::Zip;
          c.exact = ExactSolution::Cylinder;
          return c;
        }}},
      {"aspect-ratio",
       {"(-L,L)x(-2,2) clamped left, L in {5,3,2,1}, Z=-rI for r in {1,3,5}, mesh 5; short plates roll up more easily",
        [] {
          auto c = clamped_plate("aspect-ratio");
          c.refinements = 5;
          c.flow.delta_stop = 1e-4;
          c.sweep.half_length = {5.0, 3.0, 2.0, 1.0};
          c.sweep.z_scale = {1.0, 3.0, 5.0};
          return c;
        }}},
      {"corner-clamp",
       {"(-3,3)x(-2,2) clamped near the lower left corner, Z=-I, mesh 5; flat part plus cylindrical part",
        [] {
          auto c = clamped_plate("corner-clamp");
          c.bounds = {-3.0, 3.0, -2.0, 2.0};
          c.dirichlet = "x=-3[-2,0]; y=-2[-3,0]";
          c.refinements = 5;
          c.flow.delta_stop = 1e-4;
          return c;
        }}},
      {"ishape",
       {"I-shaped plate (7168 cells) clamped on the far left edge, Z=-5I; cigar shape, not a cylinder",
        [] {
          auto c = clamped_plate("ishape");
          c.shape = DomainSpec::Shape::IShape;
          c.refinements = 5;
          c.z = -5.0 * Mat2::Identity();
          c.flow.delta_stop = 1e-3;
          return c;
        }}},
      {"oshape",
       {"O-shaped plate (8192 cells) clamped on the far left edge, Z=-5I; dog-ears at the free corners",
        [] {
          auto c = clamped_plate("oshape");
          c.shape = DomainSpec::Shape::OShape;
          c.refinements = 5;
          c.z = -5.0 * Mat2::Identity();
          c.flow.delta_stop = 1e-3;
          return c;
        }}},
      {"aniso-dominant",
       {"(-2,2)x(-3,3) clamped left, Z=diag(-5,-1), mesh 5; rolls into a cylinder",
        [] {
          auto c = clamped_plate("aniso-dominant");
          c.bounds = {-2.0, 2.0, -3.0, 3.0};
          c.refinements = 5;
          c.z = diag(-5.0, -1.0);
          c.flow.delta_stop = 1e-3;
          return c;
        }}},
      {"aniso-opposite",
       {"(-2,2)x(-3,3) clamped left, Z=diag(-5,5), mesh 5; rotates a few times before settling on a cylinder",
        [] {
          auto c = clamped_plate("aniso-opposite");
          c.bounds = {-2.0, 2.0, -3.0, 3.0};
          c.refinements = 5;
          c.z = diag(-5.0, 5.0);
          c.flow.delta_stop = 1e-3;
          return c;
        }}},
      {"corkscrew",
       {"(-2,2)x(-3,3) clamped left, Z=[[-3,2],[2,-3]], mesh 5; corkscrew, then a conical shape",
        [] {
          auto c = clamped_plate("corkscrew");
          c.bounds = {-2.0, 2.0, -3.0, 3.0};
          c.refinements = 5;
          c.z << -3.0, 2.0, 2.0, -3.0;
          c.flow.delta_stop = 1e-3;
          return c;
        }}},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"benchmark",    "table1", "table2", "table3-convergence",
                                                 "aspect-ratio", "corner-clamp", "ishape", "oshape",
                                                 "aniso-dominant", "aniso-opposite", "corkscrew"};
  return names;
}

std::string preset_description(const std::string& name) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw ConfigError("unknown preset '" + name + "'");
  return it->second.description;
}

ExperimentConfig preset(const std::string& name) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw ConfigError("unknown preset '" + name + "'");
  ExperimentConfig c = it->second.make();
  c.validate();
  return c;
}

}  // namespace bilayer
