#include "singheat/presets.hpp"

#include <map>
#include <stdexcept>

namespace singheat {

namespace {

const std::map<std::string, std::string>& table() {
    static const std::map<std::string, std::string> t = {
        {"forward_sine", R"json({
  "scenario": "forward",
  "seed": 1,
  "problem": {"mu": 0.0, "T": 0.5, "nx": 64, "nt": 64,
              "omega": [0.3, 0.8], "omega_prime": [0.4, 0.7],
              "y0": {"kind": "sine"}},
  "output": {"prefix": "forward_sine"}
})json"},
        {"forward_bessel", R"json({
  "scenario": "forward",
  "seed": 1,
  "problem": {"mu": 0.1875, "T": 0.25, "nx": 128, "nt": 128,
              "omega": [0.3, 0.8], "omega_prime": [0.4, 0.7],
              "y0": {"kind": "bessel"}},
  "output": {"prefix": "forward_bessel"}
})json"},
        {"control_uniform", R"json({
  "scenario": "control",
  "seed": 1,
  "problem": {"mu": 0.2, "T": 1.0, "nx": 50, "nt": 50,
              "omega": [0.3, 0.8], "omega_prime": [0.4, 0.7],
              "y0": {"kind": "sine"}},
  "solver": {"epsilon": 1e-6, "cg_tol": 1e-10, "cg_max": 2000,
             "weight_mode": "uniform", "method": "hum", "null_tol": 1e-2},
  "output": {"prefix": "control_uniform"}
})json"},
        {"control_variational", R"json({
  "scenario": "control",
  "seed": 1,
  "problem": {"mu": 0.2, "T": 1.0, "nx": 16, "nt": 16,
              "omega": [0.3, 0.8], "omega_prime": [0.4, 0.7],
              "y0": {"kind": "sine"}},
  "weights": {"gamma": 1.9, "cfrak": 1.0, "d": 4.0, "rho": 1.0, "s": "auto",
              "sigma": {"family": "quadratic", "amplitude": 1.0,
                         "omega_tilde": [0.4, 0.7]},
              "mode": "basic"},
  "solver": {"method": "variational", "cg_tol": 1e-12, "cg_max": 200,
             "null_tol": 1e-2},
  "output": {"prefix": "control_variational"}
})json"},
        {"memory_picard", R"json({
  "scenario": "memory",
  "seed": 1,
  "problem": {"mu": 0.2, "T": 1.0, "nx": 40, "nt": 40,
              "omega": [0.3, 0.8], "omega_prime": [0.4, 0.7],
              "y0": {"kind": "sine"}},
  "weights": {"gamma": 1.0, "cfrak": 135.0, "d": 4.0, "rho": 12.0, "s": 1e-5,
              "sigma": {"family": "quadratic", "amplitude": 1.0,
                         "omega_tilde": [0.4, 0.7]},
              "mode": "memory"},
  "kernel": {"kind": "decay_exp", "amplitude": 50.0, "M0": 0.5},
  "solver": {"epsilon": 1e-2, "cg_tol": 1e-10, "cg_max": 2000,
             "picard_tol": 1e-6, "picard_max": 20,
             "weight_mode": "uniform", "method": "hum", "null_tol": 1e-2},
  "output": {"prefix": "memory_picard"}
})json"},
        {"two_phase_step", R"json({
  "scenario": "two_phase",
  "seed": 1,
  "problem": {"mu": 0.2, "T": 1.0, "nx": 40, "nt": 40,
              "omega": [0.3, 0.8], "omega_prime": [0.4, 0.7],
              "y0": {"kind": "step"}},
  "weights": {"gamma": 1.0, "cfrak": 135.0, "d": 4.0, "rho": 12.0, "s": 1e-5,
              "sigma": {"family": "quadratic", "amplitude": 1.0,
                         "omega_tilde": [0.4, 0.7]},
              "mode": "memory"},
  "kernel": {"kind": "decay_exp", "amplitude": 50.0, "M0": 0.5},
  "solver": {"epsilon": 1e-2, "cg_tol": 1e-10, "cg_max": 2000,
             "picard_tol": 1e-6, "picard_max": 20, "t0": 0.25,
             "weight_mode": "uniform", "method": "hum", "null_tol": 1e-2},
  "output": {"prefix": "two_phase_step"}
})json"},
        {"carleman_suite", R"json({
  "scenario": "carleman_suite",
  "seed": 20240101,
  "problem": {"mu": 0.2, "T": 1.0, "nx": 48, "nt": 48,
              "omega": [0.3, 0.8], "omega_prime": [0.4, 0.7],
              "y0": {"kind": "sine"}},
  "weights": {"gamma": 1.0, "cfrak": 135.0, "d": 4.0, "rho": 12.0, "s": 1e-5,
              "sigma": {"family": "quadratic", "amplitude": 1.0,
                         "omega_tilde": [0.4, 0.7]},
              "mode": "basic"},
  "suite": {"draws": 20, "window_eps": 0.0625},
  "output": {"prefix": "carleman_suite"}
})json"},
        {"spectral_scan", R"json({
  "scenario": "spectral_scan",
  "seed": 1,
  "scan": {"mu_values": [0.0, 0.2, 0.25, 0.26, 0.3, 0.5],
            "nx_values": [50, 100, 200, 400]},
  "output": {"prefix": "spectral_scan"}
})json"},
        {"hardy_suite", R"json({
  "scenario": "hardy_suite",
  "seed": 1,
  "scan": {"nx_values": [50, 100, 200]},
  "output": {"prefix": "hardy_suite"}
})json"},
    };
    return t;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : table()) out.push_back(k);
    return out;
}

const std::string& preset_json(const std::string& name) {
    const auto& t = table();
    auto it = t.find(name);
    if (it == t.end()) throw std::invalid_argument("unknown preset: " + name);
    return it->second;
}

}  // namespace singheat
