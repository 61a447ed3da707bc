// bilayer: run experiments, print presets, self-check.
#include "bilayer/config.hpp"
#include "bilayer/error.hpp"
#include "bilayer/experiment.hpp"
#include "bilayer/presets.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace {

constexpr int kConfigError = 2;

std::filesystem::path output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("BILAYER_OUTPUT_ROOT")) return env;
  return std::filesystem::current_path();
}

int run(const bilayer::ExperimentConfig& cfg, const std::string& root_flag, bool quiet) {
  const auto root = output_root(root_flag);
  auto log = [quiet](const std::string& line) {
    if (!quiet) std::cerr << line << std::endl;
  };
  const auto result = bilayer::run_experiment(cfg, root, log);
  for (const auto& r : result.runs) {
    std::cout << (r.label.empty() ? cfg.name : r.label) << ": " << bilayer::to_string(r.status);
    if (r.status == bilayer::RunStatus::Ok) {
      std::cout << " steps=" << r.steps << " energy=" << r.energy.total << " reporting=" << r.reporting_energy
                << " defect=" << r.defect << " shape=" << bilayer::to_string(r.shape.shape);
      if (r.errors) std::cout << " l2=" << r.errors->l2 << " h1=" << r.errors->h1;
    } else {
      std::cout << " (" << r.message << ")";
    }
    std::cout << "\n";
  }
  std::cout << "output: " << (root / cfg.output_directory).string() << "\n";
  return result.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilayer plate gradient flow"};
  app.require_subcommand(1);

  std::string root_flag;
  bool quiet = false;
  app.add_option("--output-root", root_flag, "Output root (default: $BILAYER_OUTPUT_ROOT or the working directory)");
  app.add_flag("-q,--quiet", quiet, "No progress output");

  auto* run_cmd = app.add_subcommand("run", "Run an experiment configuration file");
  std::string config_path;
  std::vector<std::string> overrides;
  run_cmd->add_option("config", config_path, "Configuration file")->required();
  run_cmd->add_option("--set", overrides, "Override a key, e.g. --set flow.max_outer=500");

  auto* preset_cmd = app.add_subcommand("preset", "Print or run a preset");
  std::string preset_name;
  bool emit = false;
  bool run_preset = false;
  preset_cmd->add_option("name", preset_name, "Preset name (omit to list)");
  preset_cmd->add_flag("--emit-config", emit, "Print the configuration file");
  preset_cmd->add_flag("--run", run_preset, "Run the preset");

  auto* check_cmd = app.add_subcommand("check", "Run the invariant checks on a small plate");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      auto text_cfg = bilayer::load_config(config_path);
      if (!overrides.empty()) {
        std::string text = "\n" + bilayer::serialize_config(text_cfg);
        // later keys would be duplicates, so rewrite the lines in place
        for (const auto& o : overrides) {
          const auto eq = o.find('=');
          if (eq == std::string::npos) throw bilayer::ConfigError("--set expects key=value, got '" + o + "'");
          const std::string key = o.substr(0, eq);
          const auto pos = text.find("\n" + key + " = ");
          if (pos == std::string::npos) throw bilayer::ConfigError("unknown key '" + key + "'");
          const auto end = text.find('\n', pos + 1);
          text.replace(pos + 1, end - pos - 1, key + " = " + o.substr(eq + 1));
        }
        text_cfg = bilayer::parse_config(text);
      }
      return run(text_cfg, root_flag, quiet);
    }
    if (*preset_cmd) {
      if (preset_name.empty()) {
        for (const auto& n : bilayer::preset_names()) std::cout << n << "\n  " << bilayer::preset_description(n) << "\n";
        return 0;
      }
      const auto cfg = bilayer::preset(preset_name);
      if (run_preset) return run(cfg, root_flag, quiet);
      if (emit)
        std::cout << "# " << bilayer::preset_description(preset_name) << "\n" << bilayer::serialize_config(cfg);
      else
        std::cout << preset_name << ": " << bilayer::preset_description(preset_name) << "\n";
      return 0;
    }
    if (*check_cmd) {
      const auto report = bilayer::check_invariants();
      for (const auto& line : report.lines) std::cout << line << "\n";
      return report.passed ? 0 : 4;
    }
  } catch (const bilayer::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
