#include "singheat/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "singheat/csv.hpp"

namespace singheat {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& origin, const std::string& msg) {
    throw ConfigError(origin + ": " + msg);
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& origin, const std::string& block) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            bad(origin, "unknown key \"" + it.key() + "\" in " + block);
}

double want_num(const json& j, const char* key, double dflt,
                const std::string& origin) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number()) bad(origin, std::string(key) + " must be a number");
    return j[key].get<double>();
}

std::size_t want_count(const json& j, const char* key, std::size_t dflt,
                       const std::string& origin) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number_unsigned())
        bad(origin, std::string(key) + " must be a non-negative integer");
    return j[key].get<std::size_t>();
}

Interval want_interval(const json& j, const char* key, Interval dflt,
                       const std::string& origin) {
    if (!j.contains(key)) return dflt;
    const auto& v = j[key];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        bad(origin, std::string(key) + " must be a [lo, hi] pair");
    return Interval{v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

const char* to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::forward: return "forward";
        case ScenarioKind::control: return "control";
        case ScenarioKind::memory: return "memory";
        case ScenarioKind::two_phase: return "two_phase";
        case ScenarioKind::carleman_suite: return "carleman_suite";
        case ScenarioKind::spectral_scan: return "spectral_scan";
        case ScenarioKind::hardy_suite: return "hardy_suite";
    }
    return "?";
}

double bessel_j_quarter_first_zero() {
    auto f = [](double t) { return std::cyl_bessel_j(0.25, t); };
    double lo = 2.0, hi = 4.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (f(lo) * f(mid) <= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

SpaceTimeGrid ScenarioConfig::make_grid() const {
    return SpaceTimeGrid(problem.nx, problem.nt, problem.T, problem.omega,
                         problem.omega_prime);
}

std::vector<double> ScenarioConfig::make_y0(const SpaceTimeGrid& grid) const {
    std::vector<double> y0(grid.nx());
    switch (problem.y0_kind) {
        case InitialDataKind::sine:
            for (std::size_t i = 0; i < grid.nx(); ++i)
                y0[i] = std::sin(M_PI * grid.x(i));
            break;
        case InitialDataKind::bessel: {
            const double j1 = bessel_j_quarter_first_zero();
            for (std::size_t i = 0; i < grid.nx(); ++i) {
                const double x = grid.x(i);
                y0[i] = std::sqrt(x) * std::cyl_bessel_j(0.25, j1 * x);
            }
            break;
        }
        case InitialDataKind::step:
            for (std::size_t i = 0; i < grid.nx(); ++i) {
                const double x = grid.x(i);
                y0[i] = (x > 0.5) ? 1.0 : (x < 0.5 ? -1.0 : 0.0);
            }
            break;
        case InitialDataKind::csv: {
            std::ifstream is(problem.y0_path);
            if (!is) throw ConfigError("y0 csv not found: " + problem.y0_path);
            std::vector<double> v = read_column_csv(problem.y0_path);
            if (v.size() != grid.nx())
                throw ConfigError("y0 csv has " + std::to_string(v.size()) +
                                  " values, expected " + std::to_string(grid.nx()));
            y0 = std::move(v);
            break;
        }
    }
    return y0;
}

MemoryKernel ScenarioConfig::make_kernel() const {
    if (!kernel) throw std::logic_error("make_kernel: no kernel block");
    MemoryKernel k;
    k.kind = kernel->kind;
    k.amplitude = kernel->amplitude;
    k.M0 = kernel->M0;
    k.horizon = problem.T;
    k.k = weights.k;
    return k;
}

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // byte offset -> line number for the anchor
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
            if (text[i] == '\n') ++line;
        bad(origin, "JSON parse error at line " + std::to_string(line) + ": " +
                        e.what());
    }
    if (!j.is_object()) bad(origin, "top level must be an object");
    check_keys(j,
               {"scenario", "seed", "problem", "weights", "kernel", "solver", "scan",
                "suite", "output"},
               origin, "top level");

    ScenarioConfig cfg;
    if (!j.contains("scenario") || !j["scenario"].is_string())
        bad(origin, "missing or non-string \"scenario\"");
    const std::string sc = j["scenario"].get<std::string>();
    if (sc == "forward") cfg.scenario = ScenarioKind::forward;
    else if (sc == "control") cfg.scenario = ScenarioKind::control;
    else if (sc == "memory") cfg.scenario = ScenarioKind::memory;
    else if (sc == "two_phase") cfg.scenario = ScenarioKind::two_phase;
    else if (sc == "carleman_suite") cfg.scenario = ScenarioKind::carleman_suite;
    else if (sc == "spectral_scan") cfg.scenario = ScenarioKind::spectral_scan;
    else if (sc == "hardy_suite") cfg.scenario = ScenarioKind::hardy_suite;
    else bad(origin, "unknown scenario \"" + sc + "\"");

    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) bad(origin, "seed must be unsigned");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }

    if (j.contains("problem")) {
        const json& p = j["problem"];
        check_keys(p, {"mu", "T", "nx", "nt", "omega", "omega_prime", "y0"}, origin,
                   "problem");
        cfg.problem.mu = want_num(p, "mu", cfg.problem.mu, origin);
        cfg.problem.T = want_num(p, "T", cfg.problem.T, origin);
        cfg.problem.nx = want_count(p, "nx", cfg.problem.nx, origin);
        cfg.problem.nt = want_count(p, "nt", cfg.problem.nt, origin);
        cfg.problem.omega = want_interval(p, "omega", cfg.problem.omega, origin);
        cfg.problem.omega_prime =
            want_interval(p, "omega_prime", cfg.problem.omega_prime, origin);
        if (p.contains("y0")) {
            const json& y = p["y0"];
            check_keys(y, {"kind", "path"}, origin, "problem.y0");
            if (!y.contains("kind") || !y["kind"].is_string())
                bad(origin, "problem.y0 needs a string \"kind\"");
            const std::string kind = y["kind"].get<std::string>();
            if (kind == "sine") cfg.problem.y0_kind = InitialDataKind::sine;
            else if (kind == "bessel") cfg.problem.y0_kind = InitialDataKind::bessel;
            else if (kind == "step") cfg.problem.y0_kind = InitialDataKind::step;
            else if (kind == "csv") cfg.problem.y0_kind = InitialDataKind::csv;
            else bad(origin, "unknown y0 kind \"" + kind + "\"");
            if (cfg.problem.y0_kind == InitialDataKind::csv) {
                if (!y.contains("path") || !y["path"].is_string())
                    bad(origin, "y0 kind csv requires a \"path\"");
                cfg.problem.y0_path = y["path"].get<std::string>();
            }
        }
    }

    cfg.weights.T = cfg.problem.T;
    cfg.weights.mu = cfg.problem.mu;
    if (j.contains("weights")) {
        cfg.weights_given = true;
        const json& w = j["weights"];
        check_keys(w, {"gamma", "k", "cfrak", "d", "rho", "s", "sigma", "eta", "mode"},
                   origin, "weights");
        cfg.weights.gamma = want_num(w, "gamma", cfg.weights.gamma, origin);
        cfg.weights.k = w.contains("k") ? want_num(w, "k", 0.0, origin)
                                        : 1.0 + 2.0 / cfg.weights.gamma;
        cfg.weights.cfrak = want_num(w, "cfrak", cfg.weights.cfrak, origin);
        cfg.weights.d = want_num(w, "d", cfg.weights.d, origin);
        cfg.weights.rho = want_num(w, "rho", cfg.weights.rho, origin);
        cfg.weights.eta = want_num(w, "eta", cfg.weights.eta, origin);
        if (w.contains("s")) {
            if (w["s"].is_string() && w["s"].get<std::string>() == "auto")
                cfg.weights_s_auto = true;
            else if (w["s"].is_number())
                cfg.weights.s = w["s"].get<double>();
            else
                bad(origin, "weights.s must be a number or \"auto\"");
        }
        if (w.contains("mode")) {
            const std::string m = w["mode"].get<std::string>();
            if (m == "basic") cfg.weights.mode = WeightMode::basic;
            else if (m == "memory") cfg.weights.mode = WeightMode::memory;
            else bad(origin, "weights.mode must be basic or memory");
        }
        if (w.contains("sigma")) {
            const json& s = w["sigma"];
            check_keys(s, {"family", "amplitude", "omega_tilde"}, origin,
                       "weights.sigma");
            if (s.contains("family")) {
                if (s["family"].get<std::string>() != "quadratic")
                    bad(origin, "only the quadratic sigma family is available");
            }
            cfg.weights.sigma.amplitude =
                want_num(s, "amplitude", cfg.weights.sigma.amplitude, origin);
            cfg.weights.sigma.omega_tilde = want_interval(
                s, "omega_tilde", cfg.weights.sigma.omega_tilde, origin);
        }
    }

    if (j.contains("kernel")) {
        const json& k = j["kernel"];
        check_keys(k, {"kind", "amplitude", "M0"}, origin, "kernel");
        KernelConfig kc;
        if (k.contains("kind")) {
            const std::string kk = k["kind"].get<std::string>();
            if (kk == "constant") kc.kind = MemoryKernel::Kind::constant;
            else if (kk == "decay_exp") kc.kind = MemoryKernel::Kind::decay_exp;
            else bad(origin, "kernel.kind must be constant or decay_exp");
        }
        kc.amplitude = want_num(k, "amplitude", kc.amplitude, origin);
        kc.M0 = want_num(k, "M0", kc.M0, origin);
        cfg.kernel = kc;
    }

    if (j.contains("solver")) {
        const json& s = j["solver"];
        check_keys(s,
                   {"epsilon", "cg_tol", "cg_max", "picard_tol", "picard_max", "t0",
                    "weight_mode", "method", "null_tol"},
                   origin, "solver");
        cfg.solver.epsilon = want_num(s, "epsilon", cfg.solver.epsilon, origin);
        cfg.solver.cg_tol = want_num(s, "cg_tol", cfg.solver.cg_tol, origin);
        cfg.solver.cg_max = want_count(s, "cg_max", cfg.solver.cg_max, origin);
        cfg.solver.picard_tol = want_num(s, "picard_tol", cfg.solver.picard_tol, origin);
        cfg.solver.picard_max =
            want_count(s, "picard_max", cfg.solver.picard_max, origin);
        cfg.solver.null_tol = want_num(s, "null_tol", cfg.solver.null_tol, origin);
        if (s.contains("t0")) cfg.solver.t0 = want_num(s, "t0", 0.0, origin);
        if (s.contains("weight_mode")) {
            const std::string m = s["weight_mode"].get<std::string>();
            if (m == "uniform") cfg.solver.weight_mode = ObservationWeight::uniform;
            else if (m == "paper") cfg.solver.weight_mode = ObservationWeight::paper;
            else bad(origin, "solver.weight_mode must be uniform or paper");
        }
        if (s.contains("method")) {
            const std::string m = s["method"].get<std::string>();
            if (m == "hum") cfg.solver.method = ControlMethod::hum;
            else if (m == "variational") cfg.solver.method = ControlMethod::variational;
            else bad(origin, "solver.method must be hum or variational");
        }
    }

    if (j.contains("scan")) {
        const json& s = j["scan"];
        check_keys(s, {"mu_values", "nx_values"}, origin, "scan");
        if (s.contains("mu_values")) {
            cfg.scan.mu_values.clear();
            for (const auto& v : s["mu_values"]) cfg.scan.mu_values.push_back(v.get<double>());
        }
        if (s.contains("nx_values")) {
            cfg.scan.nx_values.clear();
            for (const auto& v : s["nx_values"])
                cfg.scan.nx_values.push_back(v.get<std::size_t>());
        }
    }

    if (j.contains("suite")) {
        const json& s = j["suite"];
        check_keys(s, {"draws", "window_eps"}, origin, "suite");
        cfg.suite.draws = want_count(s, "draws", cfg.suite.draws, origin);
        cfg.suite.window_eps = want_num(s, "window_eps", cfg.suite.window_eps, origin);
    }

    if (j.contains("output")) {
        const json& o = j["output"];
        check_keys(o, {"directory", "prefix"}, origin, "output");
        if (o.contains("directory"))
            cfg.output.directory = o["directory"].get<std::string>();
        if (o.contains("prefix")) cfg.output.prefix = o["prefix"].get<std::string>();
    }

    // k follows gamma unless explicitly overridden
    if (!cfg.weights_given) cfg.weights.k = 1.0 + 2.0 / cfg.weights.gamma;
    cfg.weights.T = cfg.problem.T;
    cfg.weights.mu = cfg.problem.mu;
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path);
}

std::string validate_config(const ScenarioConfig& cfg) {
    std::ostringstream report;
    // grid invariants (throws invalid_argument -> surfaced as ValidationError)
    try {
        const SpaceTimeGrid g = cfg.make_grid();
        (void)g;
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("grid: ") + e.what());
    }
    if (cfg.problem.y0_kind == InitialDataKind::csv) {
        std::ifstream is(cfg.problem.y0_path);
        if (!is) throw ConfigError("y0 csv not found: " + cfg.problem.y0_path);
    }
    report << "grid ok: nx=" << cfg.problem.nx << " nt=" << cfg.problem.nt << "\n";

    const bool uses_weights =
        cfg.scenario == ScenarioKind::memory || cfg.scenario == ScenarioKind::two_phase ||
        cfg.scenario == ScenarioKind::carleman_suite ||
        (cfg.scenario == ScenarioKind::control &&
         (cfg.solver.weight_mode == ObservationWeight::paper ||
          cfg.solver.method == ControlMethod::variational)) ||
        cfg.weights_given;

    if (uses_weights) {
        WeightParams p = cfg.weights;
        if (cfg.scenario == ScenarioKind::memory ||
            cfg.scenario == ScenarioKind::two_phase)
            p.mode = WeightMode::memory;
        const ValidationReport vr = validate_params(p);
        for (const auto& c : vr.checks)
            report << (c.passed ? "pass " : "FAIL ") << c.name << " (margin "
                   << c.margin << "): " << c.detail << "\n";
        if (!vr.all_passed()) {
            std::string names;
            for (const auto& n : vr.failed_names()) names += n + " ";
            throw ValidationError("parameter constraints violated: " + names);
        }
    }

    if (cfg.scenario == ScenarioKind::memory || cfg.scenario == ScenarioKind::two_phase) {
        if (!cfg.kernel) throw ValidationError("memory scenario requires a kernel block");
        WeightParams p = cfg.weights;
        p.mode = WeightMode::memory;
        const SpaceTimeGrid g = cfg.make_grid();
        const KernelAdmissibility adm =
            kernel_admissibility(cfg.make_kernel(), p, g);
        report << "kernel admissible: " << (adm.admissible ? "yes" : "NO")
               << " (log_sup " << adm.log_sup << ")\n";
        if (!adm.admissible)
            throw ValidationError("kernel fails the admissibility condition");
    }
    if (cfg.scenario == ScenarioKind::two_phase && cfg.solver.t0) {
        if (!(0.0 < *cfg.solver.t0 && *cfg.solver.t0 < cfg.problem.T / 2.0))
            throw ValidationError("t0 must lie in (0, T/2)");
    }
    if (cfg.solver.epsilon <= 0.0) throw ValidationError("epsilon must be positive");
    return report.str();
}

}  // namespace singheat
