#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "singheat/config.hpp"
#include "singheat/control.hpp"
#include "singheat/presets.hpp"
#include "singheat/scenario.hpp"

namespace {

using namespace singheat;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

std::string default_out_dir() {
    if (const char* env = std::getenv("SINGHEAT_OUT")) return env;
    return "out";
}

/// A config argument is either a file path or `preset:NAME`.
ScenarioConfig resolve_config(const std::string& arg) {
    constexpr const char* kPrefix = "preset:";
    if (arg.rfind(kPrefix, 0) == 0) {
        const std::string name = arg.substr(std::string(kPrefix).size());
        return parse_config(preset_json(name), "preset:" + name);
    }
    return load_config(arg);
}

int run_one(const std::string& arg, const std::string& out_root, bool subdir) {
    try {
        const ScenarioConfig cfg = resolve_config(arg);
        validate_config(cfg);
        std::string out_dir = !cfg.output.directory.empty() ? cfg.output.directory
                                                            : out_root;
        if (subdir)
            out_dir = (std::filesystem::path(out_dir) / cfg.output.prefix).string();
        run_scenario(cfg, out_dir);
        std::cout << arg << ": ok, artifacts in " << out_dir << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ValidationError& e) {
        std::cerr << "validation failure: " << e.what() << "\n";
        return kExitValidation;
    } catch (const InfeasibleWeightsError& e) {
        std::cerr << "validation failure: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NonConvergenceError& e) {
        std::cerr << "solver non-convergence: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"null-control toolkit for the singular heat equation with memory"};
    app.require_subcommand(1);

    std::vector<std::string> run_configs;
    std::string out_dir = default_out_dir();
    unsigned jobs = 1;
    auto* run_cmd = app.add_subcommand("run", "execute scenarios from config files");
    run_cmd->add_option("config", run_configs, "config path(s) or preset:NAME")
        ->required();
    run_cmd->add_option("--out", out_dir, "output directory (default $SINGHEAT_OUT or ./out)");
    run_cmd->add_option("--jobs", jobs, "run independent configs concurrently");

    std::string val_config;
    auto* val_cmd = app.add_subcommand("validate", "validate a config without running");
    val_cmd->add_option("config", val_config, "config path or preset:NAME")->required();

    auto* presets_cmd = app.add_subcommand("presets", "shipped preset operations");
    presets_cmd->require_subcommand(1);
    presets_cmd->add_subcommand("list", "list preset names");
    std::string show_name;
    auto* show_cmd = presets_cmd->add_subcommand("show", "print a preset's JSON");
    show_cmd->add_option("name", show_name)->required();
    std::string write_dir;
    auto* write_cmd = presets_cmd->add_subcommand("write", "materialize presets as files");
    write_cmd->add_option("dir", write_dir)->required();

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) {
        const bool subdir = run_configs.size() > 1;
        if (jobs <= 1 || run_configs.size() == 1) {
            int worst = kExitOk;
            for (const auto& c : run_configs)
                worst = std::max(worst, run_one(c, out_dir, subdir));
            return worst;
        }
        std::vector<int> codes(run_configs.size(), kExitOk);
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mtx;
        for (unsigned t = 0; t < jobs; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t mine;
                    {
                        std::lock_guard<std::mutex> lk(mtx);
                        if (next >= run_configs.size()) return;
                        mine = next++;
                    }
                    codes[mine] = run_one(run_configs[mine], out_dir, subdir);
                }
            });
        for (auto& th : pool) th.join();
        int worst = kExitOk;
        for (int c : codes) worst = std::max(worst, c);
        return worst;
    }

    if (val_cmd->parsed()) {
        try {
            const ScenarioConfig cfg = resolve_config(val_config);
            std::cout << validate_config(cfg);
            std::cout << "config ok\n";
            return kExitOk;
        } catch (const ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return kExitConfig;
        } catch (const std::invalid_argument& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return kExitConfig;
        } catch (const ValidationError& e) {
            std::cerr << "validation failure: " << e.what() << "\n";
            return kExitValidation;
        }
    }

    if (presets_cmd->parsed()) {
        if (presets_cmd->get_subcommand("list")->parsed()) {
            for (const auto& n : preset_names()) std::cout << n << "\n";
            return kExitOk;
        }
        if (show_cmd->parsed()) {
            try {
                std::cout << preset_json(show_name) << "\n";
                return kExitOk;
            } catch (const std::invalid_argument& e) {
                std::cerr << e.what() << "\n";
                return kExitConfig;
            }
        }
        if (write_cmd->parsed()) {
            std::filesystem::create_directories(write_dir);
            for (const auto& n : preset_names()) {
                std::ofstream os(std::filesystem::path(write_dir) / (n + ".json"));
                os << preset_json(n) << "\n";
            }
            std::cout << "presets written to " << write_dir << "\n";
            return kExitOk;
        }
    }
    return kExitOk;
}
