#include "singheat/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "singheat/csv.hpp"
#include "singheat/operator.hpp"
#include "singheat/verify.hpp"

namespace singheat {

using ordered_json = nlohmann::ordered_json;

namespace {

namespace fs = std::filesystem;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << text;
}

std::string summary_path(const std::string& out_dir) {
    return (fs::path(out_dir) / "summary.json").string();
}

std::string artifact(const std::string& out_dir, const std::string& prefix,
                     const std::string& name) {
    return (fs::path(out_dir) / (prefix + "_" + name)).string();
}

std::vector<std::vector<double>> norm_rows(const Trajectory& y, const SpaceTimeGrid& g) {
    std::vector<std::vector<double>> rows;
    for (std::size_t n = 0; n <= y.nt(); ++n)
        rows.push_back({g.t(n), l2_norm(y.row(n), g.h())});
    return rows;
}

ordered_json problem_echo(const ScenarioConfig& cfg) {
    ordered_json j;
    j["mu"] = cfg.problem.mu;
    j["T"] = cfg.problem.T;
    j["nx"] = cfg.problem.nx;
    j["nt"] = cfg.problem.nt;
    j["omega"] = {cfg.problem.omega.lo, cfg.problem.omega.hi};
    j["omega_prime"] = {cfg.problem.omega_prime.lo, cfg.problem.omega_prime.hi};
    return j;
}

ordered_json weights_echo(const WeightParams& p) {
    ordered_json j;
    j["gamma"] = p.gamma;
    j["k"] = p.k;
    j["cfrak"] = p.cfrak;
    j["d"] = p.d;
    j["rho"] = p.rho;
    j["s"] = p.s;
    j["eta"] = p.eta;
    j["mode"] = (p.mode == WeightMode::memory) ? "memory" : "basic";
    return j;
}

WeightParams resolved_weights(const ScenarioConfig& cfg, const SpaceTimeGrid& grid) {
    WeightParams p = cfg.weights;
    if (cfg.weights_s_auto) p.s = suggest_variational_s(p, grid);
    return p;
}

std::string run_forward(const ScenarioConfig& cfg, const std::string& out_dir) {
    const SpaceTimeGrid grid = cfg.make_grid();
    PdeProblem prob(cfg.problem.mu, grid, cfg.make_y0(grid));
    if (cfg.kernel) {
        WeightParams p = resolved_weights(cfg, grid);
        prob.kernel = cfg.make_kernel();
        prob.kernel->k = p.k;
    }
    const ForwardResult res = forward_solve(prob, nullptr);

    write_trajectory_csv(artifact(out_dir, cfg.output.prefix, "trajectory.csv"), res.y,
                         grid);
    write_dat(artifact(out_dir, cfg.output.prefix, "norms.dat"), norm_rows(res.y, grid));

    ordered_json s;
    s["scenario"] = "forward";
    s["problem"] = problem_echo(cfg);
    s["initial_norm"] = l2_norm(prob.y0, grid.h());
    s["terminal_norm"] = l2_norm(res.y.row(grid.nt()), grid.h());
    s["blown_up"] = res.blown_up;
    if (res.blown_up) {
        s["blowup_step"] = res.blowup_step;
        s["blowup_time"] = grid.t(res.blowup_step);
        s["max_abs"] = res.max_abs;
    }
    if (!res.blown_up) {
        // measured decay rate over the second half of the horizon
        const double n_half = l2_norm(res.y.row(grid.nt() / 2), grid.h());
        const double n_end = l2_norm(res.y.row(grid.nt()), grid.h());
        if (n_half > 0.0 && n_end > 0.0) {
            const double span = grid.T() - grid.t(grid.nt() / 2);
            s["decay_rate"] = std::log(n_half / n_end) / span;
        }
        if (cfg.problem.y0_kind == InitialDataKind::sine && cfg.problem.mu == 0.0) {
            double err = 0.0, ref = 0.0;
            const double amp = std::exp(-M_PI * M_PI * grid.T());
            for (std::size_t i = 0; i < grid.nx(); ++i) {
                const double ex = amp * std::sin(M_PI * grid.x(i));
                const double dv = res.y.at(grid.nt(), i) - ex;
                err += dv * dv;
                ref += ex * ex;
            }
            s["terminal_error"] = std::sqrt(err / ref);
        }
        if (cfg.problem.y0_kind == InitialDataKind::bessel) {
            const double j1 = bessel_j_quarter_first_zero();
            const double lam = j1 * j1;
            s["bessel_rate_reference"] = lam;
            if (s.contains("decay_rate"))
                s["decay_rate_rel_error"] =
                    std::abs(s["decay_rate"].get<double>() - lam) / lam;
        }
    }
    const EnergyReport er = energy_check(res.y, prob);
    s["energy_lhs"] = er.lhs;
    s["energy_rhs_data"] = er.rhs_data;
    s["energy_ratio"] = er.ratio;
    const std::string text = s.dump(2) + "\n";
    write_text(summary_path(out_dir), text);
    return text;
}

std::string run_control(const ScenarioConfig& cfg, const std::string& out_dir) {
    const SpaceTimeGrid grid = cfg.make_grid();
    PdeProblem prob(cfg.problem.mu, grid, cfg.make_y0(grid));
    const WeightParams p = resolved_weights(cfg, grid);

    ControlResult res;
    if (cfg.solver.method == ControlMethod::hum) {
        HumOptions ho;
        ho.epsilon = cfg.solver.epsilon;
        ho.weight_mode = cfg.solver.weight_mode;
        ho.cg_tol = cfg.solver.cg_tol;
        ho.cg_max = cfg.solver.cg_max;
        ho.weights = &p;
        res = penalized_hum(prob, ho);
    } else {
        VariationalOptions vo;
        vo.cg_tol = cfg.solver.cg_tol;
        vo.cg_max = cfg.solver.cg_max;
        res = weighted_variational_control(prob, p, vo);
    }

    const bool half_nodes = cfg.solver.method == ControlMethod::variational;
    std::vector<double> times(grid.nt() + 1);
    for (std::size_t n = 0; n <= grid.nt(); ++n)
        times[n] = half_nodes ? std::min((static_cast<double>(n) + 0.5) * grid.dt(),
                                         grid.T())
                              : grid.t(n);
    write_trajectory_csv(artifact(out_dir, cfg.output.prefix, "y.csv"), res.y, grid,
                         half_nodes ? &times : nullptr);
    write_trajectory_csv(artifact(out_dir, cfg.output.prefix, "u.csv"), res.u, grid);
    write_dat(artifact(out_dir, cfg.output.prefix, "norms.dat"), norm_rows(res.y, grid));

    ordered_json s;
    s["scenario"] = "control";
    s["method"] = half_nodes ? "variational" : "hum";
    s["problem"] = problem_echo(cfg);
    if (half_nodes || cfg.solver.weight_mode == ObservationWeight::paper)
        s["weights"] = weights_echo(p);
    s["epsilon"] = cfg.solver.epsilon;
    s["initial_norm"] = res.initial_norm;
    s["terminal_norm"] = res.terminal_norm;
    s["terminal_ratio"] =
        res.initial_norm > 0.0 ? res.terminal_norm / res.initial_norm : 0.0;
    s["cg_iterations"] = res.cg_iterations;
    s["residual"] = res.residual;
    s["converged"] = res.converged;
    s["null_ok"] = verify_null(res, cfg.solver.null_tol);
    s["weighted_cost_log"] = res.weighted_cost_log;
    if (half_nodes) {
        s["dynamics_residual_rel"] = res.dynamics_residual_rel;
        s["ic_residual"] = res.ic_residual;
    }
    const std::string text = s.dump(2) + "\n";
    write_text(summary_path(out_dir), text);
    if (!res.converged)
        throw NonConvergenceError("control synthesis did not converge: " + res.message);
    return text;
}

std::string run_memory(const ScenarioConfig& cfg, const std::string& out_dir,
                       bool two_phase) {
    const SpaceTimeGrid grid = cfg.make_grid();
    PdeProblem prob(cfg.problem.mu, grid, cfg.make_y0(grid));
    WeightParams p = resolved_weights(cfg, grid);
    p.mode = WeightMode::memory;
    prob.kernel = cfg.make_kernel();
    prob.kernel->k = p.k;

    FixedPointOptions fo;
    fo.method = cfg.solver.method;
    fo.tol = cfg.solver.picard_tol;
    fo.max_iter = cfg.solver.picard_max;
    fo.hum.epsilon = cfg.solver.epsilon;
    fo.hum.weight_mode = cfg.solver.weight_mode;
    fo.hum.cg_tol = cfg.solver.cg_tol;
    fo.hum.cg_max = cfg.solver.cg_max;
    fo.hum.weights = &p;

    ControlResult res;
    FixedPointReport rep;
    if (two_phase) {
        res = two_phase_control(prob.y0, prob, p, cfg.solver.t0, fo, &rep);
    } else {
        auto pr = memory_fixed_point(prob, p, fo);
        res = std::move(pr.first);
        rep = std::move(pr.second);
    }

    write_trajectory_csv(artifact(out_dir, cfg.output.prefix, "y.csv"), res.y, grid);
    write_trajectory_csv(artifact(out_dir, cfg.output.prefix, "u.csv"), res.u, grid);
    write_dat(artifact(out_dir, cfg.output.prefix, "norms.dat"), norm_rows(res.y, grid));
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < rep.diffs.size(); ++i)
            rows.push_back({static_cast<double>(i + 1), rep.diffs[i]});
        write_dat(artifact(out_dir, cfg.output.prefix, "diffs.dat"), rows);
    }

    ordered_json s;
    s["scenario"] = two_phase ? "two_phase" : "memory";
    s["problem"] = problem_echo(cfg);
    s["weights"] = weights_echo(p);
    s["kernel"] = {{"kind", cfg.kernel->kind == MemoryKernel::Kind::constant
                                ? "constant"
                                : "decay_exp"},
                   {"amplitude", cfg.kernel->amplitude},
                   {"M0", cfg.kernel->M0},
                   {"s_C0", p.s * p.C0()}};
    if (two_phase) s["t0"] = cfg.solver.t0.value_or(cfg.problem.T / 4.0);
    s["iterations"] = rep.iterations;
    s["diffs"] = rep.diffs;
    s["converged"] = rep.converged;
    s["R_bound"] = rep.R_bound;
    s["initial_norm"] = res.initial_norm;
    s["terminal_norm"] = res.terminal_norm;
    s["null_ok"] = verify_null(res, cfg.solver.null_tol);
    s["cg_iterations_last"] = res.cg_iterations;
    const std::string text = s.dump(2) + "\n";
    write_text(summary_path(out_dir), text);
    if (!rep.converged)
        throw NonConvergenceError("Picard iteration did not reach tolerance; diffs "
                                  "recorded in summary.json");
    return text;
}

std::string run_carleman_suite(const ScenarioConfig& cfg, const std::string& out_dir) {
    const SpaceTimeGrid grid = cfg.make_grid();
    const WeightParams p = resolved_weights(cfg, grid);
    WeightParams p2 = p;
    p2.s = 2.0 * p.s;

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t nx = grid.nx();
    const std::size_t nt = grid.nt();

    CarlemanOptions co;
    co.window_eps = cfg.suite.window_eps;

    std::vector<std::vector<double>> rows;
    double max_s = 0.0, max_2s = 0.0, max_cacc = 0.0, max_mod = 0.0;
    const Interval omega_pp{0.45, 0.65};
    for (std::size_t d = 0; d < cfg.suite.draws; ++d) {
        std::vector<double> zT(nx);
        for (auto& v : zT) v = gauss(rng);
        Field g(grid, "g");
        for (std::size_t n = 0; n <= nt; ++n)
            for (std::size_t i = 0; i < nx; ++i) g.at(n, i) = gauss(rng);

        const InequalityReport r1 = carleman_ratio(p, &g, zT, grid, co);
        const InequalityReport r2 = carleman_ratio(p2, &g, zT, grid, co);
        CarlemanOptions cm = co;
        cm.modified = true;
        const InequalityReport rm = carleman_ratio(p, &g, zT, grid, cm);
        const InequalityReport rc =
            caccioppoli_ratio(omega_pp, p, &g, zT, grid, co.window_eps);
        max_s = std::max(max_s, r1.ratio);
        max_2s = std::max(max_2s, r2.ratio);
        max_mod = std::max(max_mod, rm.ratio);
        max_cacc = std::max(max_cacc, rc.ratio);
        rows.push_back({static_cast<double>(d), r1.lhs_log, r1.rhs_log, r1.ratio,
                        r2.ratio, rm.ratio, rc.ratio});
    }
    write_table_csv(artifact(out_dir, cfg.output.prefix, "draws.csv"),
                    {"draw", "lhs_log_s", "rhs_log_s", "ratio_s", "ratio_2s",
                     "ratio_modified", "ratio_caccioppoli"},
                    rows);

    ordered_json s;
    s["scenario"] = "carleman_suite";
    s["problem"] = problem_echo(cfg);
    s["weights"] = weights_echo(p);
    s["seed"] = cfg.seed;
    s["draws"] = cfg.suite.draws;
    s["window_eps"] = cfg.suite.window_eps;
    s["max_ratio_s"] = max_s;
    s["max_ratio_2s"] = max_2s;
    s["growth_factor"] = max_s > 0.0 ? max_2s / max_s : 0.0;
    s["max_ratio_modified"] = max_mod;
    s["max_ratio_caccioppoli"] = max_cacc;
    const std::string text = s.dump(2) + "\n";
    write_text(summary_path(out_dir), text);
    return text;
}

std::string run_spectral_scan(const ScenarioConfig& cfg, const std::string& out_dir) {
    const SpectralScan scan = supercritical_scan(cfg.scan.mu_values, cfg.scan.nx_values);

    std::vector<std::string> header{"mu"};
    for (std::size_t nx : scan.nx_list) header.push_back("lambda_nx" + std::to_string(nx));
    std::vector<std::vector<double>> rows;
    for (const auto& r : scan.rows) {
        std::vector<double> row{r.mu};
        for (double v : r.lambda_min) row.push_back(v);
        rows.push_back(std::move(row));
    }
    write_table_csv(artifact(out_dir, cfg.output.prefix, "scan.csv"), header, rows);
    write_dat(artifact(out_dir, cfg.output.prefix, "scan.dat"), rows);

    ordered_json s;
    s["scenario"] = "spectral_scan";
    s["nx_values"] = scan.nx_list;
    ordered_json cls = ordered_json::object();
    ordered_json lam = ordered_json::object();
    for (const auto& r : scan.rows) {
        char key[32];
        std::snprintf(key, sizeof key, "%g", r.mu);
        cls[key] = to_string(r.cls);
        lam[key] = r.lambda_min;
    }
    s["classification"] = cls;
    s["lambda_min"] = lam;
    const std::string text = s.dump(2) + "\n";
    write_text(summary_path(out_dir), text);
    return text;
}

std::string run_hardy_suite(const ScenarioConfig& cfg, const std::string& out_dir) {
    const std::vector<std::pair<std::string, std::function<double(double)>>> family = {
        {"x(1-x)", [](double x) { return x * (1.0 - x); }},
        {"x^0.75(1-x)", [](double x) { return std::pow(x, 0.75) * (1.0 - x); }},
        {"x^0.6(1-x)", [](double x) { return std::pow(x, 0.6) * (1.0 - x); }},
        {"sin(pi x)", [](double x) { return std::sin(M_PI * x); }},
        {"x(1-x)e^{-3x}", [](double x) { return x * (1.0 - x) * std::exp(-3.0 * x); }},
    };

    std::vector<std::vector<double>> rows;
    double max_ratio = 0.0;
    bool bound_ok = true;
    for (std::size_t nx : cfg.scan.nx_values) {
        SpaceTimeGrid g(nx, 2, 1.0, cfg.problem.omega, cfg.problem.omega_prime);
        for (std::size_t fi = 0; fi < family.size(); ++fi) {
            std::vector<double> y(nx);
            for (std::size_t i = 0; i < nx; ++i) y[i] = family[fi].second(g.x(i));
            const double r = discrete_hardy_ratio(y, g);
            max_ratio = std::max(max_ratio, r);
            if (r > 1.0 + 5.0 * g.h()) bound_ok = false;
            rows.push_back({static_cast<double>(nx), static_cast<double>(fi), r,
                            1.0 + 5.0 * g.h()});
        }
    }
    write_table_csv(artifact(out_dir, cfg.output.prefix, "ratios.csv"),
                    {"nx", "family_index", "ratio", "bound"}, rows);

    // improved Hardy-Poincare lower bound on the largest grid
    const std::size_t nx_big = cfg.scan.nx_values.back();
    SpaceTimeGrid g(nx_big, 2, 1.0, cfg.problem.omega, cfg.problem.omega_prime);
    std::vector<std::vector<double>> zs;
    for (const auto& f : family) {
        std::vector<double> y(nx_big);
        for (std::size_t i = 0; i < nx_big; ++i) y[i] = f.second(g.x(i));
        zs.push_back(std::move(y));
    }
    const HpEstimate hp1 = improved_hp_constant(cfg.weights.eta, zs, g);
    const HpEstimate hp2 = improved_hp_constant(2.0 * cfg.weights.eta, zs, g);

    ordered_json s;
    s["scenario"] = "hardy_suite";
    s["nx_values"] = cfg.scan.nx_values;
    s["max_ratio"] = max_ratio;
    s["bound_ok"] = bound_ok;
    s["hp_eta"] = cfg.weights.eta;
    s["hp_constant_lower_bound"] = hp1.c_estimate;
    s["hp_constant_lower_bound_2eta"] = hp2.c_estimate;
    s["hp_warnings"] = hp1.warnings;
    const std::string text = s.dump(2) + "\n";
    write_text(summary_path(out_dir), text);
    return text;
}

}  // namespace

std::string run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    switch (cfg.scenario) {
        case ScenarioKind::forward: return run_forward(cfg, out_dir);
        case ScenarioKind::control: return run_control(cfg, out_dir);
        case ScenarioKind::memory: return run_memory(cfg, out_dir, false);
        case ScenarioKind::two_phase: return run_memory(cfg, out_dir, true);
        case ScenarioKind::carleman_suite: return run_carleman_suite(cfg, out_dir);
        case ScenarioKind::spectral_scan: return run_spectral_scan(cfg, out_dir);
        case ScenarioKind::hardy_suite: return run_hardy_suite(cfg, out_dir);
    }
    throw std::logic_error("run_scenario: unhandled scenario");
}

}  // namespace singheat
