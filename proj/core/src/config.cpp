#include "bilayer/config.hpp"

#include "bilayer/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace bilayer {

std::string to_string(SweepMode mode) { return mode == SweepMode::Zip ? "zip" : "product"; }
std::string to_string(ExactSolution exact) { return exact == ExactSolution::Cylinder ? "cylinder" : "none"; }

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

// shortest text that parses back to the same double
std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) fail(key, "expected a number, got '" + text + "'");
  return v;
}

long parse_long(const std::string& key, const std::string& text) {
  long v = 0;
  const char* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) fail(key, "expected an integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  fail(key, "expected true or false, got '" + text + "'");
}

template <typename T, typename Fn>
std::vector<T> parse_list(const std::string& key, const std::string& text, Fn&& one) {
  std::vector<T> out;
  if (text.empty()) return out;
  for (const auto& item : split(text, ',')) out.push_back(static_cast<T>(one(key, item)));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>)
      out += fmt(values[i]);
    else
      out += std::to_string(values[i]);
  }
  return out;
}

DomainSpec::Shape parse_shape(const std::string& key, const std::string& text) {
  if (text == "rectangle") return DomainSpec::Shape::Rectangle;
  if (text == "ishape") return DomainSpec::Shape::IShape;
  if (text == "oshape") return DomainSpec::Shape::OShape;
  fail(key, "unknown shape '" + text + "' (rectangle, ishape, oshape)");
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"name", [](auto& c, auto&, auto& v) { c.name = v; }},
      {"domain.shape", [](auto& c, auto& k, auto& v) { c.shape = parse_shape(k, v); }},
      {"domain.bounds",
       [](auto& c, auto& k, auto& v) {
         const auto b = parse_list<double>(k, v, parse_double);
         if (b.size() != 4) fail(k, "expected xmin, xmax, ymin, ymax");
         std::copy(b.begin(), b.end(), c.bounds.begin());
       }},
      {"domain.refinements", [](auto& c, auto& k, auto& v) { c.refinements = static_cast<int>(parse_long(k, v)); }},
      {"domain.dirichlet", [](auto& c, auto&, auto& v) { c.dirichlet = v; }},
      {"problem.z11", [](auto& c, auto& k, auto& v) { c.z(0, 0) = parse_double(k, v); }},
      {"problem.z12", [](auto& c, auto& k, auto& v) { c.z(0, 1) = parse_double(k, v); }},
      {"problem.z21", [](auto& c, auto& k, auto& v) { c.z(1, 0) = parse_double(k, v); }},
      {"problem.z22", [](auto& c, auto& k, auto& v) { c.z(1, 1) = parse_double(k, v); }},
      {"problem.f1", [](auto& c, auto& k, auto& v) { c.f(0) = parse_double(k, v); }},
      {"problem.f2", [](auto& c, auto& k, auto& v) { c.f(1) = parse_double(k, v); }},
      {"problem.f3", [](auto& c, auto& k, auto& v) { c.f(2) = parse_double(k, v); }},
      {"flow.tau", [](auto& c, auto& k, auto& v) { c.flow.tau = parse_double(k, v); }},
      {"flow.delta_stop", [](auto& c, auto& k, auto& v) { c.flow.delta_stop = parse_double(k, v); }},
      {"flow.stop_tol", [](auto& c, auto& k, auto& v) { c.flow.stop_tol = parse_double(k, v); }},
      {"flow.max_outer", [](auto& c, auto& k, auto& v) { c.flow.max_outer = parse_long(k, v); }},
      {"flow.max_inner", [](auto& c, auto& k, auto& v) { c.flow.max_inner = static_cast<int>(parse_long(k, v)); }},
      {"flow.trace_every", [](auto& c, auto& k, auto& v) { c.flow.trace_every = parse_long(k, v); }},
      {"flow.solver",
       [](auto& c, auto& k, auto& v) {
         try {
           c.flow.solver = constraint_solver_from_string(v);
         } catch (const Error& e) {
           fail(k, e.what());
         }
       }},
      {"flow.factor_reuse", [](auto& c, auto& k, auto& v) { c.flow.factor_reuse = parse_bool(k, v); }},
      {"flow.max_pcg_iterations",
       [](auto& c, auto& k, auto& v) { c.flow.max_pcg_iterations = static_cast<int>(parse_long(k, v)); }},
      {"output.directory", [](auto& c, auto&, auto& v) { c.output_directory = v; }},
      {"output.snapshot_every", [](auto& c, auto& k, auto& v) { c.snapshot_every = parse_long(k, v); }},
      {"sweep.tau", [](auto& c, auto& k, auto& v) { c.sweep.tau = parse_list<double>(k, v, parse_double); }},
      {"sweep.refinements", [](auto& c, auto& k, auto& v) { c.sweep.refinements = parse_list<int>(k, v, parse_long); }},
      {"sweep.z_scale", [](auto& c, auto& k, auto& v) { c.sweep.z_scale = parse_list<double>(k, v, parse_double); }},
      {"sweep.half_length",
       [](auto& c, auto& k, auto& v) { c.sweep.half_length = parse_list<double>(k, v, parse_double); }},
      {"sweep.mode",
       [](auto& c, auto& k, auto& v) {
         if (v == "product")
           c.sweep.mode = SweepMode::Product;
         else if (v == "zip")
           c.sweep.mode = SweepMode::Zip;
         else
           fail(k, "expected product or zip");
       }},
      {"report.exact_solution",
       [](auto& c, auto& k, auto& v) {
         if (v == "none")
           c.exact = ExactSolution::None;
         else if (v == "cylinder")
           c.exact = ExactSolution::Cylinder;
         else
           fail(k, "expected none or cylinder");
       }},
  };
  return table;
}

BoundarySegment parse_segment(const std::string& text) {
  // x=c[lo,hi] or y=c[lo,hi]
  const std::string key = "domain.dirichlet";
  const auto eq = text.find('=');
  const auto open = text.find('[');
  const auto comma = text.find(',');
  const auto close = text.find(']');
  if (eq == std::string::npos || open == std::string::npos || comma == std::string::npos || close == std::string::npos ||
      !(eq < open && open < comma && comma < close) || trim(text.substr(close + 1)) != "")
    fail(key, "bad segment '" + text + "'");
  const std::string axis = trim(text.substr(0, eq));
  BoundarySegment seg;
  if (axis == "x")
    seg.axis = BoundarySegment::Axis::Vertical;
  else if (axis == "y")
    seg.axis = BoundarySegment::Axis::Horizontal;
  else
    fail(key, "segment axis must be x or y in '" + text + "'");
  seg.coord = parse_double(key, trim(text.substr(eq + 1, open - eq - 1)));
  seg.lo = parse_double(key, trim(text.substr(open + 1, comma - open - 1)));
  seg.hi = parse_double(key, trim(text.substr(comma + 1, close - comma - 1)));
  if (!(seg.lo < seg.hi)) fail(key, "empty segment '" + text + "'");
  return seg;
}

}  // namespace

DirichletSelector parse_dirichlet(const std::string& text, const MacroLayout& layout) {
  const std::string t = trim(text);
  if (t == "left") return side_selector(layout, Side::Left);
  if (t == "right") return side_selector(layout, Side::Right);
  if (t == "bottom") return side_selector(layout, Side::Bottom);
  if (t == "top") return side_selector(layout, Side::Top);
  DirichletSelector sel;
  for (const auto& part : split(t, ';'))
    if (!part.empty()) sel.segments.push_back(parse_segment(part));
  if (sel.empty()) fail("domain.dirichlet", "no clamped boundary given");
  return sel;
}

DomainSpec ExperimentConfig::domain() const {
  DomainSpec spec;
  switch (shape) {
    case DomainSpec::Shape::Rectangle:
      spec = DomainSpec::rectangle(bounds[0], bounds[1], bounds[2], bounds[3], refinements);
      break;
    case DomainSpec::Shape::IShape: spec = DomainSpec::ishape(refinements); break;
    case DomainSpec::Shape::OShape: spec = DomainSpec::oshape(refinements); break;
  }
  spec.dirichlet = parse_dirichlet(dirichlet, spec.layout());
  return spec;
}

void ExperimentConfig::validate() const {
  if (name.empty() || name.find_first_of("/\\ \t") != std::string::npos) fail("name", "must be a nonempty word");
  if (shape == DomainSpec::Shape::Rectangle && !(bounds[0] < bounds[1] && bounds[2] < bounds[3]))
    fail("domain.bounds", "need xmin < xmax and ymin < ymax");
  if (refinements < 0 || refinements > 10) fail("domain.refinements", "must lie in [0, 10]");
  if (!z.allFinite()) fail("problem.z11", "Z must be finite");
  if (std::abs(z(0, 1) - z(1, 0)) > 1e-12 * std::max(1.0, z.cwiseAbs().maxCoeff()))
    fail("problem.z12", "Z must be symmetric (z12 = " + fmt(z(0, 1)) + ", z21 = " + fmt(z(1, 0)) + ")");
  if (!f.allFinite()) fail("problem.f1", "f must be finite");
  if (!(flow.tau > 0.0)) fail("flow.tau", "must be positive");
  if (!(flow.delta_stop > 0.0)) fail("flow.delta_stop", "must be positive");
  if (!(flow.stop_tol > 0.0)) fail("flow.stop_tol", "must be positive");
  if (flow.max_outer < 1) fail("flow.max_outer", "must be at least 1");
  if (flow.max_inner < 1) fail("flow.max_inner", "must be at least 1");
  if (flow.trace_every < 1) fail("flow.trace_every", "must be at least 1");
  if (flow.max_pcg_iterations < 1) fail("flow.max_pcg_iterations", "must be at least 1");
  if (output_directory.empty()) fail("output.directory", "must not be empty");
  if (snapshot_every < 0) fail("output.snapshot_every", "must be nonnegative");
  for (double t : sweep.tau)
    if (!(t > 0.0)) fail("sweep.tau", "values must be positive");
  for (int r : sweep.refinements)
    if (r < 0 || r > 10) fail("sweep.refinements", "values must lie in [0, 10]");
  for (double s : sweep.z_scale)
    if (!std::isfinite(s)) fail("sweep.z_scale", "values must be finite");
  for (double l : sweep.half_length)
    if (!(l > 0.0)) fail("sweep.half_length", "values must be positive");
  if (!sweep.half_length.empty() && shape != DomainSpec::Shape::Rectangle)
    fail("sweep.half_length", "only rectangles can be stretched");
  if (sweep.mode == SweepMode::Zip) {
    std::size_t n = 0;
    for (std::size_t len : {sweep.tau.size(), sweep.refinements.size(), sweep.z_scale.size(), sweep.half_length.size()}) {
      if (len == 0) continue;
      if (n != 0 && len != n) fail("sweep.mode", "zip needs lists of equal length");
      n = len;
    }
  }
  try {
    const DomainSpec spec = domain();
    (void)spec;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail("domain.dirichlet", e.what());
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, int> lines;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end())
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'", line_no);
    if (lines.count(key))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'", line_no);
    lines[key] = line_no;
    try {
      it->second(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    const auto key = what.substr(0, what.find(':'));
    const auto it = lines.find(key);
    if (it == lines.end()) throw;
    throw ConfigError("line " + std::to_string(it->second) + ": " + what, it->second);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "name = " << c.name << "\n\n";
  out << "domain.shape = "
      << (c.shape == DomainSpec::Shape::Rectangle ? "rectangle" : c.shape == DomainSpec::Shape::IShape ? "ishape" : "oshape")
      << "\n";
  out << "domain.bounds = " << join(std::vector<double>(c.bounds.begin(), c.bounds.end())) << "\n";
  out << "domain.refinements = " << c.refinements << "\n";
  out << "domain.dirichlet = " << c.dirichlet << "\n\n";
  out << "problem.z11 = " << fmt(c.z(0, 0)) << "\n";
  out << "problem.z12 = " << fmt(c.z(0, 1)) << "\n";
  out << "problem.z21 = " << fmt(c.z(1, 0)) << "\n";
  out << "problem.z22 = " << fmt(c.z(1, 1)) << "\n";
  out << "problem.f1 = " << fmt(c.f(0)) << "\n";
  out << "problem.f2 = " << fmt(c.f(1)) << "\n";
  out << "problem.f3 = " << fmt(c.f(2)) << "\n\n";
  out << "flow.tau = " << fmt(c.flow.tau) << "\n";
  out << "flow.delta_stop = " << fmt(c.flow.delta_stop) << "\n";
  out << "flow.stop_tol = " << fmt(c.flow.stop_tol) << "\n";
  out << "flow.max_outer = " << c.flow.max_outer << "\n";
  out << "flow.max_inner = " << c.flow.max_inner << "\n";
  out << "flow.trace_every = " << c.flow.trace_every << "\n";
  out << "flow.solver = " << to_string(c.flow.solver) << "\n";
  out << "flow.factor_reuse = " << (c.flow.factor_reuse ? "true" : "false") << "\n";
  out << "flow.max_pcg_iterations = " << c.flow.max_pcg_iterations << "\n\n";
  out << "output.directory = " << c.output_directory << "\n";
  out << "output.snapshot_every = " << c.snapshot_every << "\n\n";
  out << "sweep.tau = " << join(c.sweep.tau) << "\n";
  out << "sweep.refinements = " << join(c.sweep.refinements) << "\n";
  out << "sweep.z_scale = " << join(c.sweep.z_scale) << "\n";
  out << "sweep.half_length = " << join(c.sweep.half_length) << "\n";
  out << "sweep.mode = " << to_string(c.sweep.mode) << "\n\n";
  out << "report.exact_solution = " << to_string(c.exact) << "\n";
  return out.str();
}

std::vector<SweepRun> expand_sweep(const ExperimentConfig& cfg) {
  const SweepSpec& s = cfg.sweep;
  ExperimentConfig base = cfg;
  base.sweep = SweepSpec{};
  if (s.empty()) return {{"", base}};

  // one axis per nonempty list: label prefix and how to apply value i
  struct Axis {
    std::size_t size;
    std::function<void(ExperimentConfig&, std::size_t)> apply;
    std::function<std::string(std::size_t)> label;
  };
  std::vector<Axis> axes;
  if (!s.half_length.empty())
    axes.push_back({s.half_length.size(),
                    [&](ExperimentConfig& c, std::size_t i) {
                      c.bounds[0] = -s.half_length[i];
                      c.bounds[1] = s.half_length[i];
                    },
                    [&](std::size_t i) { return "L=" + fmt(s.half_length[i]); }});
  if (!s.z_scale.empty())
    axes.push_back({s.z_scale.size(), [&](ExperimentConfig& c, std::size_t i) { c.z = cfg.z * s.z_scale[i]; },
                    [&](std::size_t i) { return "zscale=" + fmt(s.z_scale[i]); }});
  if (!s.refinements.empty())
    axes.push_back({s.refinements.size(), [&](ExperimentConfig& c, std::size_t i) { c.refinements = s.refinements[i]; },
                    [&](std::size_t i) { return "ref=" + std::to_string(s.refinements[i]); }});
  if (!s.tau.empty())
    axes.push_back({s.tau.size(), [&](ExperimentConfig& c, std::size_t i) { c.flow.tau = s.tau[i]; },
                    [&](std::size_t i) { return "tau=" + fmt(s.tau[i]); }});

  std::vector<SweepRun> runs;
  auto emit = [&](const std::vector<std::size_t>& idx) {
    SweepRun run{"", base};
    for (std::size_t a = 0; a < axes.size(); ++a) {
      axes[a].apply(run.config, idx[a]);
      run.label += (a ? "_" : "") + axes[a].label(idx[a]);
    }
    runs.push_back(std::move(run));
  };
  if (s.mode == SweepMode::Zip) {
    for (std::size_t i = 0; i < axes.front().size; ++i) emit(std::vector<std::size_t>(axes.size(), i));
  } else {
    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
      emit(idx);
      std::size_t a = axes.size();
      while (a > 0) {
        --a;
        if (++idx[a] < axes[a].size) break;
        idx[a] = 0;
        if (a == 0) return runs;
      }
    }
  }
  return runs;
}

}  // namespace bilayer
