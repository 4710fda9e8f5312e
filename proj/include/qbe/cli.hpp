#pragma once

// Commands behind the qbe executable. Each takes a validated config and an output stream and
// returns the process exit status, so tests can drive them without spawning processes.
//
// Files written under out_dir:
//   snapshots.csv       t,rho,f            one row per node per snapshot
//   diagnostics.jsonl   one JSON object per record, fields in the order of kDiagnosticsFields
//   summary.csv         the same records as a table
//   equilibrium.csv     t,rho,f            (equilibrium command)

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qbe/collision.hpp"
#include "qbe/config.hpp"
#include "qbe/diagnostics.hpp"
#include "qbe/integrator.hpp"
#include "qbe/oracle.hpp"
#include "qbe/surfaces.hpp"

namespace qbe {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitAborted = 2;

inline const std::vector<std::string> kDiagnosticsFields = {
    "t", "mass", "m1", "m2", "m3", "entropy", "energy_drift", "theta1", "theta2", "tail_loss"};

// ---- state I/O ----------------------------------------------------------------------------

inline void write_state_rows(std::ostream& out, const RadialState& s) {
    for (std::size_t i = 0; i < s.size(); ++i)
        out << format_double(s.time) << ',' << format_double(s.grid->node(i)) << ',' << format_double(s.values[i])
            << '\n';
}

inline void write_snapshots(std::ostream& out, const std::vector<RadialState>& snapshots) {
    out << "t,rho,f\n";
    for (const auto& s : snapshots) write_state_rows(out, s);
}

/// Reads the last snapshot of a "t,rho,f" file onto `grid`; the file's radii must be the grid nodes.
inline RadialState read_state(std::istream& in, const GridPtr& grid) {
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "t,rho,f") throw ConfigError("state file: expected header t,rho,f");
    std::map<double, std::vector<std::pair<double, double>>> blocks;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto cols = detail::split_list(line);
        std::vector<double> v;
        for (const auto& c : cols)
            if (auto x = detail::to_double(c)) v.push_back(*x);
        if (cols.size() != 3 || v.size() != 3)
            throw ConfigError("state file line " + std::to_string(lineno) + ": expected three numbers");
        blocks[v[0]].emplace_back(v[1], v[2]);
    }
    if (blocks.empty()) throw ConfigError("state file holds no rows");
    const auto& [t, rows] = *blocks.rbegin();
    if (rows.size() != grid->size()) throw ConfigError("state file: node count does not match the configured grid");
    std::vector<double> values(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double x = grid->node(i);
        if (std::abs(rows[i].first - x) > 1e-12 * std::max(1.0, x))
            throw ConfigError("state file: radius " + format_double(rows[i].first) + " is not a node of the configured grid");
        values[i] = rows[i].second;
    }
    return RadialState(grid, std::move(values), t);
}

inline RadialState initial_state(const RunConfig& cfg, const GridPtr& grid) {
    if (const auto* e = std::get_if<EquilibriumInit>(&cfg.initial)) return equilibrium_state(e->c, grid, cfg.params);
    if (const auto* b = std::get_if<BumpInit>(&cfg.initial)) return sample_state(grid, *b);
    const auto& path = std::get<FileInit>(cfg.initial).path;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open initial state file '" + path + "'");
    auto s = read_state(in, grid);
    s.time = 0.0;
    return s;
}

/// The initial condition as a function of rho (interpolated for file input).
inline std::function<double(double)> initial_profile(const RunConfig& cfg, const GridPtr& grid) {
    if (const auto* e = std::get_if<EquilibriumInit>(&cfg.initial)) {
        const double c = e->c;
        const auto p = cfg.params;
        return [c, p](double r) { return r > 0.0 ? equilibrium_value(c, r, p) : 0.0; };
    }
    if (const auto* b = std::get_if<BumpInit>(&cfg.initial)) return *b;
    auto interp = std::make_shared<ProfileInterpolant>(initial_state(cfg, grid));
    return [interp, grid](double r) { return (*interp)(r); };
}

// ---- diagnostics records ---------------------------------------------------------------------

inline nlohmann::ordered_json diagnostics_record(const DiagnosticsReport& r) {
    nlohmann::ordered_json j;
    j["t"] = r.t;
    j["mass"] = r.mass;
    j["m1"] = r.moments[0];
    j["m2"] = r.moments[1];
    j["m3"] = r.moments[2];
    j["entropy"] = r.entropy;
    j["energy_drift"] = r.energy_drift;
    j["theta1"] = r.envelope.theta1;
    j["theta2"] = r.envelope.theta2;
    j["tail_loss"] = r.tail_loss;
    return j;
}

inline void write_summary_row(std::ostream& out, const DiagnosticsReport& r) {
    const double v[] = {r.t, r.mass, r.moments[0], r.moments[1], r.moments[2], r.entropy,
                        r.energy_drift, r.envelope.theta1, r.envelope.theta2, r.tail_loss};
    for (std::size_t i = 0; i < std::size(v); ++i) out << (i ? "," : "") << format_double(v[i]);
    out << '\n';
}

/// Reports at the first step on or after each multiple of `every`, plus the last one.
inline std::vector<const DiagnosticsReport*> select_reports(const Trajectory& traj, double every) {
    std::vector<const DiagnosticsReport*> out;
    if (traj.reports.empty()) return out;
    const double t0 = traj.reports.front().t;
    double mark = t0;
    for (const auto& r : traj.reports) {
        if (every <= 0.0 || r.t >= mark - 1e-12 * std::max(1.0, std::abs(mark))) {
            out.push_back(&r);
            if (every > 0.0)
                while (mark <= r.t + 1e-12 * std::max(1.0, std::abs(r.t))) mark += every;
        }
    }
    if (out.back() != &traj.reports.back()) out.push_back(&traj.reports.back());
    return out;
}

inline void write_diagnostics(const std::filesystem::path& dir, const Trajectory& traj, double every) {
    const auto picked = select_reports(traj, every);
    std::ofstream jl(dir / "diagnostics.jsonl");
    std::ofstream csv(dir / "summary.csv");
    for (std::size_t i = 0; i < kDiagnosticsFields.size(); ++i) csv << (i ? "," : "") << kDiagnosticsFields[i];
    csv << '\n';
    for (const auto* r : picked) {
        jl << diagnostics_record(*r).dump() << '\n';
        write_summary_row(csv, *r);
    }
}

// ---- commands ----------------------------------------------------------------------------------

struct Simulation {
    GridPtr grid;
    KernelTable table;
    Trajectory trajectory;
};

inline Simulation simulate(const RunConfig& cfg) {
    Simulation sim;
    sim.grid = cfg.make_grid();
    sim.table = build_kernel_table(sim.grid, cfg.params, cfg.n_quad);
    sim.trajectory = run(initial_state(cfg, sim.grid), cfg.integrator, sim.table);
    return sim;
}

inline int cmd_run(const RunConfig& cfg, std::ostream& log) {
    const auto sim = simulate(cfg);
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    {
        std::ofstream snap(dir / "snapshots.csv");
        write_snapshots(snap, sim.trajectory.snapshots);
    }
    write_diagnostics(dir, sim.trajectory, cfg.diagnostics_every);
    const auto& tr = sim.trajectory;
    log << "steps accepted " << tr.accepted_steps << ", rejected " << tr.rejected_steps << ", snapshots "
        << tr.snapshots.size() << ", final t " << format_double(tr.snapshots.back().time) << "\n";
    if (tr.aborted) {
        log << tr.abort_message << "\n";
        return kExitAborted;
    }
    return kExitOk;
}

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

inline void print_check(std::ostream& out, const CheckResult& c) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
}

/// Checks that apply to any configured run: energy weak form, energy drift, H-monotonicity,
/// positivity, equilibrium stationarity and envelope positivity.
inline std::vector<CheckResult> verify_checks(const RunConfig& cfg) {
    std::vector<CheckResult> out;
    auto fmt = [](double x) { return format_double(x); };
    const auto grid = cfg.make_grid();
    const auto table = build_kernel_table(grid, cfg.params, cfg.n_quad);
    const auto s0 = initial_state(cfg, grid);

    const auto wf = weak_form(s0, table, [&](double r) { return energy(r, cfg.params); });
    const double wf_rel = wf.scale > 0.0 ? std::abs(wf.value) / wf.scale : 0.0;
    out.push_back({"energy weak form", wf_rel <= 1e-12, "relative " + fmt(wf_rel) + " <= 1e-12"});

    const auto tr = run(s0, cfg.integrator, table);
    out.push_back({"step control", !tr.aborted, tr.aborted ? tr.abort_message : "completed"});

    double drift = 0.0;
    for (const auto& r : tr.reports) drift = std::max(drift, std::abs(r.energy_drift));
    out.push_back({"energy drift", drift <= 1e-3, "max |drift| " + fmt(drift) + " <= 1e-3"});

    const double dh = tr.reports.size() > 1 ? worst_entropy_increase(tr) : 0.0;
    out.push_back({"H nonincreasing", dh <= 1e-8, "worst relative step increase " + fmt(dh) + " <= 1e-8"});

    bool nonneg = true;
    for (const auto& s : tr.snapshots)
        for (double v : s.values) nonneg = nonneg && v >= 0.0;
    out.push_back({"positivity", nonneg, nonneg ? "all snapshots nonnegative" : "negative value found"});

    const double c = std::holds_alternative<EquilibriumInit>(cfg.initial) ? std::get<EquilibriumInit>(cfg.initial).c : 1.0;
    const double res = stationarity_residual(equilibrium_state(c, grid, cfg.params), table);
    out.push_back({"equilibrium stationarity", res <= 1e-3, "c " + fmt(c) + ", residual " + fmt(res) + " <= 1e-3"});

    const auto env = envelope_fit(tr.snapshots.back());
    out.push_back({"envelope positivity", env.theta1 > 0.0 && envelope_holds(tr.snapshots.back(), env),
                   "theta1 " + fmt(env.theta1) + ", theta2 " + fmt(env.theta2) + " at t " +
                       fmt(tr.snapshots.back().time)});
    return out;
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out) {
    bool all = true;
    for (const auto& c : verify_checks(cfg)) {
        print_check(out, c);
        all = all && c.pass;
    }
    return all ? kExitOk : kExitFailure;
}

/// Ring samples at the midpoints of n_alpha equal alpha-cells (alpha in (0, 1) for decay, (0, alpha_p)
/// for the absorb surfaces).
inline int cmd_surfaces(SurfaceKind kind, double rho, int n_alpha, const DispersionParams& p, std::ostream& out) {
    if (n_alpha < 1) throw ConfigError("surfaces: n_alpha must be positive");
    const double top = kind == SurfaceKind::Decay ? 1.0 : alpha_max(rho, p);
    out << "kind,rho,alpha,q_alpha,density,grad_norm\n";
    for (int k = 0; k < n_alpha; ++k) {
        const double alpha = top * (k + 0.5) / n_alpha;
        const auto s = ring_sample(kind, rho, alpha, p);
        out << to_string(kind) << ',' << format_double(rho) << ',' << format_double(alpha) << ','
            << format_double(s.ring_radius) << ',' << format_double(s.measure_density) << ','
            << format_double(s.grad_norm) << '\n';
    }
    return kExitOk;
}

/// Epsilon study of the mollified operator against the reduced one for the configured initial
/// profile at each oracle radius. Each radius contributes one row per epsilon and a final row with
/// epsilon = 0 holding the extrapolated value.
inline int cmd_oracle_check(const RunConfig& cfg, std::ostream& out) {
    const auto grid = cfg.make_grid();
    const auto f = initial_profile(cfg, grid);
    out << "rho,epsilon,value,reduced,error,relative_error,observed_order,non_monotone\n";
    for (double rho : cfg.oracle_radii) {
        const auto st = epsilon_study(f, rho, cfg.oracle_eps, cfg.params, cfg.r_max);
        auto row = [&](double eps, double v, double err, double rel) {
            out << format_double(rho) << ',' << format_double(eps) << ',' << format_double(v) << ','
                << format_double(st.reduced) << ',' << format_double(err) << ',' << format_double(rel) << ','
                << format_double(st.observed_order) << ',' << (st.non_monotone ? 1 : 0) << '\n';
        };
        for (const auto& r : st.rows) row(r.epsilon, r.value, r.error, r.relative_error);
        row(0.0, st.extrapolated, std::abs(st.extrapolated - st.reduced), st.extrapolated_relative_error);
    }
    return kExitOk;
}

/// Writes the equilibrium with parameter c on the configured grid to out_dir/equilibrium.csv.
inline int cmd_equilibrium(const RunConfig& cfg, double c, std::ostream& log) {
    const auto grid = cfg.make_grid();
    const auto s = equilibrium_state(c, grid, cfg.params);
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    std::ofstream file(dir / "equilibrium.csv");
    file << "t,rho,f\n";
    write_state_rows(file, s);
    log << "wrote " << (dir / "equilibrium.csv").string() << " (" << s.size() << " nodes, c " << format_double(c) << ")\n";
    return kExitOk;
}

}  // namespace qbe
