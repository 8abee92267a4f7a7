#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "singheat/control.hpp"
#include "singheat/grid.hpp"
#include "singheat/weights.hpp"

namespace singheat {

/// Malformed config: bad JSON, unknown keys, wrong types, missing files (exit 1).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Semantically invalid config: a named parameter constraint fails (exit 2).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class ScenarioKind {
    forward,
    control,
    memory,
    two_phase,
    carleman_suite,
    spectral_scan,
    hardy_suite
};

const char* to_string(ScenarioKind k);

enum class InitialDataKind { sine, bessel, step, csv };

struct ProblemConfig {
    double mu = 0.0;
    double T = 1.0;
    std::size_t nx = 50;
    std::size_t nt = 50;
    Interval omega{0.3, 0.8};
    Interval omega_prime{0.4, 0.7};
    InitialDataKind y0_kind = InitialDataKind::sine;
    std::string y0_path;
};

struct KernelConfig {
    MemoryKernel::Kind kind = MemoryKernel::Kind::decay_exp;
    double amplitude = 1.0;
    double M0 = 0.5;
};

struct SolverConfig {
    double epsilon = 1e-6;
    double cg_tol = 1e-10;
    std::size_t cg_max = 2000;
    double picard_tol = 1e-6;
    std::size_t picard_max = 20;
    std::optional<double> t0;
    ObservationWeight weight_mode = ObservationWeight::uniform;
    ControlMethod method = ControlMethod::hum;
    double null_tol = 1e-2;
};

struct ScanConfig {
    std::vector<double> mu_values{0.0, 0.2, 0.25, 0.26, 0.3};
    std::vector<std::size_t> nx_values{50, 100, 200, 400};
};

struct SuiteConfig {
    std::size_t draws = 20;
    double window_eps = 1.0 / 16.0;
};

struct OutputConfig {
    std::string directory;  // empty: resolved from --out / env / default
    std::string prefix = "run";
};

struct ScenarioConfig {
    ScenarioKind scenario = ScenarioKind::forward;
    std::uint64_t seed = 1;
    ProblemConfig problem;
    WeightParams weights;
    bool weights_given = false;
    bool weights_s_auto = false;
    std::optional<KernelConfig> kernel;
    SolverConfig solver;
    ScanConfig scan;
    SuiteConfig suite;
    OutputConfig output;

    SpaceTimeGrid make_grid() const;
    std::vector<double> make_y0(const SpaceTimeGrid& grid) const;
    MemoryKernel make_kernel() const;  // horizon/exponent bound to problem/weights
};

/// First positive zero of the Bessel function J_{1/4} (bisection on
/// std::cyl_bessel_j); used by the `bessel` initial-data preset.
double bessel_j_quarter_first_zero();

/// Parse config JSON text. Unknown keys are errors with a line-anchored message.
ScenarioConfig parse_config(const std::string& json_text, const std::string& origin);

/// Parse a config file from disk.
ScenarioConfig load_config(const std::string& path);

/// Semantic validation: cross-field checks plus weights.validate_params for the
/// scenarios that consume Carleman weights. Throws ValidationError on failure;
/// returns a human-readable report on success.
std::string validate_config(const ScenarioConfig& cfg);

}  // namespace singheat
