#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mcob/cli.hpp"

namespace fs = std::filesystem;
using namespace mcob::cli;

int main(int argc, char** argv) {
    CLI::App app{"Mass-constrained obstacle problem simulations"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool plot = false;
    auto common = [&](CLI::App* sub, bool needs_out) {
        sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
        if (needs_out) sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_flag("--emit-plot-data", plot, "also write long-format CSV for plotting");
    };

    auto* sphere = app.add_subcommand("simulate-sphere", "nonlocal problem on the sphere");
    common(sphere, true);

    std::optional<double> lambda;
    auto* dirac = app.add_subcommand("simulate-dirac", "Dirac building block on the line");
    common(dirac, true);
    dirac->add_option("--lambda", lambda, "sink parameter (sink is lambda^3)");

    auto* composite = app.add_subcommand("simulate-composite", "nonlocal problem on (-5, 5)");
    common(composite, true);

    int levels = 2;
    std::string hierarchy_out = "hierarchy.json";
    auto* build = app.add_subcommand("build-oscillation", "calibrate the block and build an atom hierarchy");
    build->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    build->add_option("--levels", levels, "number of levels (1-3)");
    build->add_option("--out", hierarchy_out, "hierarchy JSON file");

    std::string hierarchy_in;
    auto* run = app.add_subcommand("run-oscillation", "evolve a hierarchy and measure its support");
    common(run, true);
    run->add_option("--hierarchy", hierarchy_in, "hierarchy JSON file")->required()->check(CLI::ExistingFile);

    std::string bundle;
    auto* verify = app.add_subcommand("verify", "re-check the inequalities of a finished run");
    verify->add_option("--bundle", bundle, "run directory")->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Ok : ConfigError;
    }

    try {
        const std::optional<fs::path> cfg = config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path);
        const fs::path base = cfg ? cfg->parent_path() : fs::current_path();
        const auto config = load_config(cfg);
        if (*sphere) return run_sphere(config, out_dir, plot);
        if (*dirac) return run_dirac(config, lambda, out_dir, plot);
        if (*composite) return run_composite(config, base, out_dir, plot);
        if (*build) return run_build_oscillation(config, levels, hierarchy_out);
        if (*run) return run_run_oscillation(config, hierarchy_in, out_dir, plot);
        if (*verify) return run_verify(bundle, std::cout);
    } catch (const std::exception& e) {
        return report_error(e, std::cerr);
    }
    return Ok;
}
