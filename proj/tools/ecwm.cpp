// ecwm: elliptic-curve switching for multiplicative watermarking.
//
//   ecwm curve       [--a 2 --b 2 --s 17 | --config cfg.json]
//   ecwm switch-eval --config cfg.json --y 1.0
//   ecwm sweep       --config cfg.json [--refs 0,1,10,100 --n 500 --halfwidth 0.05 --seed 1] --out dir [--svg]
//   ecwm voronoi     [--a --b --s | --config cfg.json] [--grid 170] --out dir [--svg]
//   ecwm sim         --scenario scenario.json --out dir
//
// Exit codes: 0 success, 2 config error, 3 divergence, 4 I/O.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ecwm/cli.hpp"

namespace {

struct CurveArgs {
    std::int64_t a = 2;
    std::int64_t b = 2;
    std::uint64_t s = 17;
    std::string config;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--a", a, "Curve coefficient a");
        cmd.add_option("--b", b, "Curve coefficient b");
        cmd.add_option("--s", s, "Field prime s");
        cmd.add_option("--config", config, "Take the curve from a switching config instead");
    }

    // Resolves --config into (a, b, s). Returns an exit code on failure.
    std::optional<int> resolve() {
        if (config.empty()) return std::nullopt;
        return ecwm::cli::guarded(std::cerr, [&] {
            const auto cfg = ecwm::load_switching_config(config);
            a = static_cast<std::int64_t>(cfg.curve.a().value());
            b = static_cast<std::int64_t>(cfg.curve.b().value());
            s = cfg.curve.modulus();
        });
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Elliptic-curve switching functions for multiplicative watermarking"};
    app.require_subcommand(1);

    CurveArgs curve_args;
    auto* curve = app.add_subcommand("curve", "List curve points with their orders and cofactors");
    curve_args.add_to(*curve);

    double y = 0.0;
    std::string config;
    auto* sw = app.add_subcommand("switch-eval", "Evaluate the switching function for one sample");
    sw->add_option("--y", y, "Previous plant output y_p(k-1)")->required();
    sw->add_option("--config", config, "Switching config (JSON)")->required()->check(CLI::ExistingFile);

    ecwm::SweepSpec sweep_spec;
    std::string out_dir;
    bool svg = false;
    auto* sweep = app.add_subcommand("sweep", "Sensitivity of the curve projection around operating points");
    sweep->add_option("--config", config, "Switching config (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--refs", sweep_spec.references, "Reference outputs")->delimiter(',');
    sweep->add_option("--n", sweep_spec.n_realizations, "Noise realizations per reference");
    sweep->add_option("--halfwidth", sweep_spec.noise_halfwidth, "Half-width of the uniform noise");
    sweep->add_option("--seed", sweep_spec.seed, "RNG seed");
    sweep->add_option("--out", out_dir, "Output directory")->required();
    sweep->add_flag("--svg", svg, "Also render an SVG histogram");

    CurveArgs vor_args;
    std::size_t grid = 170;
    auto* vor = app.add_subcommand("voronoi", "Nearest-curve-point assignment over a grid");
    vor_args.add_to(*vor);
    vor->add_option("--grid", grid, "Grid samples per axis");
    vor->add_option("--out", out_dir, "Output directory")->required();
    vor->add_flag("--svg", svg, "Also render an SVG diagram");

    std::string scenario;
    std::uint64_t seed_override = 0;
    auto* sim = app.add_subcommand("sim", "Run a closed-loop scenario");
    sim->add_option("--scenario", scenario, "Scenario file (JSON)")->required();
    sim->add_option("--out", out_dir, "Output directory")->required();
    auto* seed_opt = sim->add_option("--seed", seed_override, "Override the scenario seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ecwm::cli::kConfigError;
    }

    if (*curve) {
        if (auto rc = curve_args.resolve(); rc && *rc != 0) return *rc;
        return ecwm::cli::cmd_curve(curve_args.a, curve_args.b, curve_args.s, std::cout, std::cerr);
    }
    if (*sw) return ecwm::cli::cmd_switch_eval(y, config, std::cout, std::cerr);
    if (*sweep) return ecwm::cli::cmd_sensitivity_sweep(sweep_spec, config, out_dir, svg, std::cout, std::cerr);
    if (*vor) {
        if (auto rc = vor_args.resolve(); rc && *rc != 0) return *rc;
        return ecwm::cli::cmd_voronoi(vor_args.a, vor_args.b, vor_args.s, grid, out_dir, svg, std::cout, std::cerr);
    }
    if (*sim) {
        std::optional<std::uint64_t> seed;
        if (seed_opt->count() > 0) seed = seed_override;
        return ecwm::cli::cmd_sim(scenario, out_dir, seed, std::cout, std::cerr);
    }
    return ecwm::cli::kConfigError;
}
