#pragma once

#include <stdexcept>
#include <string>

#include "singheat/config.hpp"

namespace singheat {

/// A solver failed to converge (exit 3).
class NonConvergenceError : public std::runtime_error {
public:
    explicit NonConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Execute the configured scenario; writes summary.json, CSV artifacts and
/// gnuplot .dat files under out_dir. Returns the summary JSON text.
std::string run_scenario(const ScenarioConfig& cfg, const std::string& out_dir);

}  // namespace singheat
