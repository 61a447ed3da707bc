#pragma once

#include "bilayer/config.hpp"

#include <string>
#include <vector>

namespace bilayer {

/// Names accepted by preset().
const std::vector<std::string>& preset_names();

/// One-line description of what the preset reproduces and what to expect.
std::string preset_description(const std::string& name);

/// Throws ConfigError for an unknown name.
ExperimentConfig preset(const std::string& name);

}  // namespace bilayer
