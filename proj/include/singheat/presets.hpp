#pragma once

#include <string>
#include <vector>

namespace singheat {

/// Names of the shipped scenario presets, in listing order.
std::vector<std::string> preset_names();

/// JSON text of a shipped preset; throws std::invalid_argument for unknown names.
const std::string& preset_json(const std::string& name);

}  // namespace singheat
