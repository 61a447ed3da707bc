#include "bilayer/experiment.hpp"

#include "bilayer/error.hpp"
#include "bilayer/output.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace bilayer {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Ok: return "ok";
    case RunStatus::NoConvergence: return "NoC";
    case RunStatus::InvariantViolation: return "invariant-violation";
    case RunStatus::Failed: return "failed";
  }
  return "failed";
}

int exit_code(RunStatus status) {
  switch (status) {
    case RunStatus::Ok: return 0;
    case RunStatus::NoConvergence: return 3;
    case RunStatus::InvariantViolation: return 4;
    case RunStatus::Failed: return 1;
  }
  return 1;
}

ExactErrors cylinder_errors(const DeformationField& y) {
  const Mesh& mesh = y.mesh();
  double l2 = 0.0, h1 = 0.0;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const Vec2 m = mesh.cell_midpoint(c);
    const Vec3 exact(std::sin(m.x()), m.y(), 1.0 - std::cos(m.x()));
    Mat32 exact_grad;
    exact_grad << std::cos(m.x()), 0.0, 0.0, 1.0, std::sin(m.x()), 0.0;
    Vec3 value;
    Mat32 grad;
    for (int k = 0; k < 3; ++k) {
      const CubicCell cell = reconstruct_cubic(y, c, k);
      value(k) = cell.value(m);
      grad.row(k) = cell.gradient(m).transpose();
    }
    l2 += mesh.cell_area(c) * (exact - value).squaredNorm();
    h1 += mesh.cell_area(c) * (exact_grad - grad).squaredNorm();
  }
  return {std::sqrt(l2 / mesh.area()), std::sqrt(h1 / mesh.area())};
}

namespace {

json energy_json(const EnergyBreakdown& e) {
  return {{"total", e.total}, {"bending", e.bending}, {"coupling", e.coupling}, {"constant", e.constant}, {"load", e.load}};
}

json run_json(const RunSummary& r) {
  const auto& c = r.config;
  json j;
  j["name"] = c.name;
  j["label"] = r.label;
  j["status"] = to_string(r.status);
  j["message"] = r.message;
  j["parameters"] = {{"tau", c.flow.tau},
                     {"delta_stop", c.flow.delta_stop},
                     {"stop_tol", c.flow.stop_tol},
                     {"refinements", c.refinements},
                     {"z", {c.z(0, 0), c.z(0, 1), c.z(1, 0), c.z(1, 1)}},
                     {"bounds", c.bounds}};
  j["mesh"] = {{"vertices", r.vertices}, {"cells", r.cells}};
  j["steps"] = r.steps;
  j["stop_reason"] = r.reason == StopReason::Converged ? "converged" : "max_outer";
  j["energy"] = energy_json(r.energy);
  j["reporting_energy"] = r.reporting_energy;
  j["isometry_defect"] = r.defect;
  j["shape"] = {{"class", to_string(r.shape.shape)},
                {"bounding_box", r.shape.bounding_box},
                {"max_curvature", r.shape.max_curvature},
                {"mean_curvature", r.shape.mean_curvature},
                {"determinant_score", r.shape.determinant_score},
                {"variation_score", r.shape.variation_score},
                {"coherence_score", r.shape.coherence_score},
                {"core_fraction", r.shape.core_fraction}};
  j["inner_iterations"] = {{"max", r.max_inner}, {"mean", r.mean_inner}};
  j["wall_seconds"] = r.wall_seconds;
  if (r.errors) j["errors"] = {{"l2", r.errors->l2}, {"h1", r.errors->h1}};
  return j;
}

std::string snapshot_name(long k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snapshot_%07ld.vtk", k);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string summary_json(const RunSummary& run) { return run_json(run).dump(2) + "\n"; }

std::string sweep_json(const ExperimentResult& result) {
  json j = json::array();
  for (const auto& r : result.runs) j.push_back(run_json(r));
  return json{{"runs", j}, {"exit_code", result.exit_code()}}.dump(2) + "\n";
}

int ExperimentResult::exit_code() const {
  int code = 0;
  for (const auto& r : runs) code = std::max(code, bilayer::exit_code(r.status));
  return code;
}

RunSummary run_single(const ExperimentConfig& cfg, const RunOptions& options,
                      std::optional<DeformationField>* final_state) {
  if (!cfg.sweep.empty()) throw ConfigError("run_single needs a configuration without sweep lists");
  cfg.validate();

  RunSummary summary;
  summary.config = cfg;
  auto log = [&](const std::string& line) {
    if (options.log) options.log(line);
  };

  const DomainSpec spec = cfg.domain();
  auto mesh = std::make_shared<const Mesh>(build_mesh(spec));
  summary.vertices = mesh->num_vertices();
  summary.cells = mesh->num_cells();
  const ProblemData data = ProblemData::uniform(*mesh, cfg.z, cfg.f);

  const bool write = !options.directory.empty();
  std::unique_ptr<TraceWriter> trace;
  if (write) {
    fs::create_directories(options.directory);
    write_text(options.directory / "config.txt", serialize_config(cfg));
    trace = std::make_unique<TraceWriter>(options.directory / "trace.csv");
  }

  const auto t0 = std::chrono::steady_clock::now();
  std::optional<DeformationField> last;
  long last_k = 0;
  auto observer = [&](const FlowState& s, const TraceRecord& rec) {
    last_k = s.k;
    if (trace && std::isfinite(rec.reporting_energy)) trace->write(rec);
    if (write && cfg.snapshot_every > 0 && s.k % cfg.snapshot_every == 0)
      write_vtk(options.directory / snapshot_name(s.k), s.y, cfg.name);
    if (options.log_every > 0 && s.k > 0 && s.k % options.log_every == 0) {
      std::ostringstream line;
      line << "k=" << s.k << " E=" << rec.energy.total << " rate=" << rec.energy_rate << " defect=" << rec.defect;
      log(line.str());
    }
    if (final_state) last = s.y;
  };

  log(cfg.name + ": " + std::to_string(summary.vertices) + " vertices, tau=" + std::to_string(cfg.flow.tau));
  try {
    FlowResult result = run_flow(mesh, data, cfg.flow, observer);
    const FlowState& s = result.state;
    summary.steps = s.k;
    summary.reason = result.reason;
    summary.energy = s.energy;
    summary.reporting_energy = result.trace.back().reporting_energy;
    summary.defect = s.defect;
    summary.shape = classify_shape(s.y);
    if (!s.inner_counts.empty()) {
      summary.max_inner = *std::max_element(s.inner_counts.begin(), s.inner_counts.end());
      summary.mean_inner = std::accumulate(s.inner_counts.begin(), s.inner_counts.end(), 0.0) /
                           static_cast<double>(s.inner_counts.size());
    }
    if (cfg.exact == ExactSolution::Cylinder) summary.errors = cylinder_errors(s.y);
    if (write) write_vtk(options.directory / "final.vtk", s.y, cfg.name);
    if (final_state) *final_state = s.y;
  } catch (const NoConvergence& e) {
    summary.status = RunStatus::NoConvergence;
    summary.message = e.what();
    summary.steps = last_k;
  } catch (const InvariantViolation& e) {
    summary.status = RunStatus::InvariantViolation;
    summary.message = e.what();
    summary.steps = last_k;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    summary.status = RunStatus::Failed;
    summary.message = e.what();
    summary.steps = last_k;
  }
  if (summary.status != RunStatus::Ok && final_state && last) *final_state = last;
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (trace) trace->flush();
  if (write) write_text(options.directory / "summary.json", summary_json(summary));

  std::ostringstream line;
  line << cfg.name << ": " << to_string(summary.status) << " after " << summary.steps << " steps";
  if (summary.status == RunStatus::Ok)
    line << ", energy " << summary.energy.total << ", reporting " << summary.reporting_energy << ", defect "
         << summary.defect << ", " << to_string(summary.shape.shape);
  else
    line << ": " << summary.message;
  log(line.str());
  return summary;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const fs::path& root,
                                const std::function<void(const std::string&)>& log) {
  cfg.validate();
  const fs::path base = root / cfg.output_directory;
  ExperimentResult result;
  const auto runs = expand_sweep(cfg);
  for (const auto& run : runs) {
    RunOptions opts;
    opts.directory = run.label.empty() ? base : base / run.label;
    opts.log = log;
    RunSummary s = run_single(run.config, opts);
    s.label = run.label;
    if (!run.label.empty()) write_text(opts.directory / "summary.json", summary_json(s));
    result.runs.push_back(std::move(s));
  }
  if (runs.size() > 1) {
    fs::create_directories(base);
    write_text(base / "sweep.json", sweep_json(result));
  }
  return result;
}

CheckReport check_invariants() {
  CheckReport report;
  auto add = [&](bool ok, const std::string& what) {
    report.passed = report.passed && ok;
    report.lines.push_back(std::string(ok ? "PASS " : "FAIL ") + what);
  };

  DomainSpec spec = DomainSpec::rectangle(-5.0, 5.0, -2.0, 2.0, 2);
  spec.dirichlet = side_selector(spec.layout(), Side::Left);
  auto mesh = std::make_shared<const Mesh>(build_mesh(spec));
  const ProblemData data = ProblemData::uniform(*mesh, -Mat2::Identity());
  FlowConfig cfg;
  cfg.tau = 0.005;
  cfg.delta_stop = 1e-4;
  cfg.max_outer = 200;

  // the nodal metric grows by the sum of grad(increment)^T grad(increment)
  std::vector<Mat2> metric_growth(static_cast<std::size_t>(mesh->num_vertices()), Mat2::Zero());
  std::optional<DeformationField> previous;
  double worst_identity = 0.0, worst_contraction = 0.0, worst_metric = 0.0, worst_residual = 0.0;
  long steps = 0;
  auto observer = [&](const FlowState& s, const TraceRecord& rec) {
    if (previous) {
      for (Index v = 0; v < mesh->num_vertices(); ++v) {
        const Mat32 g = s.y.gradient(v) - previous->gradient(v);
        auto& m = metric_growth[static_cast<std::size_t>(v)];
        m += g.transpose() * g;
        const Mat32 y = s.y.gradient(v);
        worst_identity = std::max(worst_identity, (y.transpose() * y - Mat2::Identity() - m).cwiseAbs().maxCoeff());
      }
    }
    previous = s.y;
    worst_contraction = std::max(worst_contraction, rec.contraction);
    worst_metric = std::min(worst_metric, rec.min_metric_excess);
    worst_residual = std::max(worst_residual, rec.constraint_residual);
    steps = s.k;
  };
  try {
    FlowResult result = run_flow(mesh, data, cfg, observer);
    add(true, "energy decrease held for " + std::to_string(steps) + " steps");
    std::ostringstream m;
    m << "min nodal metric excess " << worst_metric << " >= -1e-10";
    add(worst_metric >= -1e-10, m.str());
    std::ostringstream r;
    r << "max constraint residual " << worst_residual << " <= 1e-9";
    add(worst_residual <= kSolveTolerance, r.str());
    std::ostringstream i;
    i << "metric identity mismatch " << worst_identity << " <= 1e-8";
    add(worst_identity <= 1e-8, i.str());
    std::ostringstream c;
    c << "max inner contraction ratio " << worst_contraction << " < 1";
    add(worst_contraction < 1.0, c.str());
  } catch (const Error& e) {
    add(false, std::string("flow raised: ") + e.what());
  }
  return report;
}

}  // namespace bilayer
