// qbe: command-line front end for the radial quantum Boltzmann solver.
//
//   qbe run          --config run.cfg --out out/
//   qbe verify       --config run.cfg
//   qbe surfaces     --kind decay --rho 2 --n-alpha 64
//   qbe oracle-check --config run.cfg
//   qbe equilibrium  --c 1 --out out/

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qbe/cli.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::optional<std::size_t> n;
    std::optional<double> r_max, dt, t_end, kappa0, kappa1, kappa2;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat key = value config file")->check(CLI::ExistingFile);
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--n", n, "grid nodes");
        cmd->add_option("--rmax", r_max, "momentum cutoff R_max");
        cmd->add_option("--dt", dt, "initial time step");
        cmd->add_option("--t-end", t_end, "final time");
        cmd->add_option("--kappa0", kappa0, "transition prefactor");
        cmd->add_option("--kappa1", kappa1, "quadratic dispersion coefficient");
        cmd->add_option("--kappa2", kappa2, "quartic dispersion coefficient");
    }

    qbe::RunConfig load() const {
        std::string text;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            std::stringstream ss;
            ss << in.rdbuf();
            text = ss.str();
        }
        std::map<std::string, std::string> ov;
        // Without a file the three required keys fall back to the documented defaults.
        if (config_path.empty()) ov = {{"n", "512"}, {"r_max", "8"}, {"t_end", "1"}};
        auto put = [&](const char* key, const auto& v) {
            if (v) ov[key] = qbe::format_double(static_cast<double>(*v));
        };
        if (n) ov["n"] = std::to_string(*n);
        put("r_max", r_max);
        put("dt_init", dt);
        put("t_end", t_end);
        put("kappa0", kappa0);
        put("kappa1", kappa1);
        put("kappa2", kappa2);
        if (!out_dir.empty()) ov["out_dir"] = out_dir;
        return qbe::parse_config(text, ov);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radial quantum Boltzmann solver with Bogoliubov dispersion"};
    app.require_subcommand(1);

    CommonFlags run_f, verify_f, oracle_f, eq_f, surf_f;
    auto* run = app.add_subcommand("run", "integrate and write snapshots and diagnostics");
    run_f.attach(run);
    auto* verify = app.add_subcommand("verify", "run the configured scenario and check invariants");
    verify_f.attach(verify);
    auto* oracle = app.add_subcommand("oracle-check", "epsilon study of the mollified-delta oracle");
    oracle_f.attach(oracle);
    auto* eq = app.add_subcommand("equilibrium", "write a Bose-Einstein equilibrium state");
    eq_f.attach(eq);
    double eq_c = 1.0;
    eq->add_option("--c", eq_c, "inverse temperature c in 1 / (exp(c E) - 1)");

    auto* surf = app.add_subcommand("surfaces", "ring samples of a resonance surface");
    surf_f.attach(surf);
    std::string kind = "decay";
    double rho = 1.0;
    int n_alpha = 64;
    surf->add_option("kind,--kind", kind, "decay, absorb or absorb_shifted");
    surf->add_option("rho,--rho", rho, "pivot momentum |p|")->check(CLI::PositiveNumber);
    surf->add_option("n_alpha,--n-alpha", n_alpha, "number of alpha samples")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return qbe::cmd_run(run_f.load(), std::cerr);
        if (*verify) return qbe::cmd_verify(verify_f.load(), std::cout);
        if (*oracle) {
            const auto cfg = oracle_f.load();
            if (oracle_f.out_dir.empty()) return qbe::cmd_oracle_check(cfg, std::cout);
            std::filesystem::create_directories(cfg.out_dir);
            std::ofstream file(std::filesystem::path(cfg.out_dir) / "oracle.csv");
            return qbe::cmd_oracle_check(cfg, file);
        }
        if (*eq) return qbe::cmd_equilibrium(eq_f.load(), eq_c, std::cerr);
        if (*surf) {
            const auto cfg = surf_f.load();
            const auto k = qbe::parse_surface_kind(kind);
            if (surf_f.out_dir.empty()) return qbe::cmd_surfaces(k, rho, n_alpha, cfg.params, std::cout);
            std::filesystem::create_directories(cfg.out_dir);
            std::ofstream file(std::filesystem::path(cfg.out_dir) / "surfaces.csv");
            return qbe::cmd_surfaces(k, rho, n_alpha, cfg.params, file);
        }
    } catch (const qbe::ConfigError& e) {
        std::cerr << "configuration error:\n" << e.what() << "\n";
        return qbe::kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qbe::kExitFailure;
    }
    return qbe::kExitFailure;
}
