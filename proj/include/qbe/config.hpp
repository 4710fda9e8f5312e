#pragma once

// Run configuration in a flat `key = value` text format with `#` comments.
//
//   kappa0 = 1                 # or mass / coupling / condensate_density (all three)
//   n = 512
//   r_max = 8
//   t_end = 10
//   gaussian_bump = 1, 1, 0.25  # amplitude, radius, smoothing
//
// Exactly one of `equilibrium = c`, `gaussian_bump = a, R, w` and `from_file = path` may appear;
// with none, the bump 1, 1, 0.25 is used.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include "qbe/dispersion.hpp"
#include "qbe/errors.hpp"
#include "qbe/grid.hpp"
#include "qbe/integrator.hpp"

namespace qbe {

struct EquilibriumInit {
    double c = 1.0;
    bool operator==(const EquilibriumInit&) const = default;
};

/// theta0 on [0, R0], then theta0 exp(-((rho - R0) / w)^2); continuously differentiable.
struct BumpInit {
    double amplitude = 1.0;
    double radius = 1.0;
    double smoothing = 0.25;
    bool operator==(const BumpInit&) const = default;

    double operator()(double rho) const {
        if (rho <= radius) return amplitude;
        const double x = (rho - radius) / smoothing;
        return amplitude * std::exp(-x * x);
    }
};

struct FileInit {
    std::string path;
    bool operator==(const FileInit&) const = default;
};

using InitialCondition = std::variant<EquilibriumInit, BumpInit, FileInit>;

struct PhysicalConstants {
    double mass = 1.0;
    double coupling = 1.0;
    double condensate_density = 1.0;
    bool operator==(const PhysicalConstants&) const = default;
};

struct RunConfig {
    DispersionParams params;
    std::optional<PhysicalConstants> physical;  // when set, kappa1 and kappa2 were derived from it

    std::size_t n = 512;
    double r_max = 8.0;
    GridSpacing spacing = GridSpacing::Uniform;
    double r_min = 1e-4;   // log spacing only
    std::size_t n_quad = 0;  // 0 selects 2n

    IntegratorConfig integrator;
    InitialCondition initial = BumpInit{};

    std::string out_dir = "out";
    double diagnostics_every = 0.1;  // time between emitted diagnostics records; <= 0 emits every step

    std::vector<double> oracle_radii = {0.5, 1.0, 2.0};
    std::vector<double> oracle_eps = {0.2, 0.1, 0.05, 0.025};

    bool operator==(const RunConfig& o) const {
        return params == o.params && physical == o.physical && n == o.n && r_max == o.r_max &&
               spacing == o.spacing && r_min == o.r_min && n_quad == o.n_quad &&
               integrator.dt_init == o.integrator.dt_init && integrator.dt_min == o.integrator.dt_min &&
               integrator.dt_max == o.integrator.dt_max && integrator.t_end == o.integrator.t_end &&
               integrator.eta == o.integrator.eta && integrator.f_scale == o.integrator.f_scale &&
               integrator.scheme == o.integrator.scheme && integrator.snapshot_every == o.integrator.snapshot_every &&
               initial == o.initial && out_dir == o.out_dir && diagnostics_every == o.diagnostics_every &&
               oracle_radii == o.oracle_radii && oracle_eps == o.oracle_eps;
    }

    GridPtr make_grid() const {
        return spacing == GridSpacing::Uniform ? qbe::make_grid(RadialGrid::uniform(n, r_max))
                                               : qbe::make_grid(RadialGrid::logarithmic(n, r_max, r_min));
    }
};

/// All violations found while parsing or validating, one per line in what().
class ConfigErrors : public ConfigError {
public:
    explicit ConfigErrors(std::vector<std::string> errs) : ConfigError(join(errs)), errors_(std::move(errs)) {}
    const std::vector<std::string>& errors() const noexcept { return errors_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (const auto& e : v) s += (s.empty() ? "" : "\n") + e;
        return s;
    }
    std::vector<std::string> errors_;
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::optional<double> to_double(const std::string& s) {
    const std::string t = trim(s);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

inline std::optional<std::size_t> to_size(const std::string& s) {
    const std::string t = trim(s);
    std::size_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "kappa0", "kappa1", "kappa2", "mass", "coupling", "condensate_density",
        "n", "r_max", "spacing", "r_min", "n_quad",
        "dt_init", "dt_min", "dt_max", "t_end", "eta", "f_scale", "scheme", "snapshot_every",
        "equilibrium", "gaussian_bump", "from_file",
        "out_dir", "diagnostics_every", "oracle_radii", "oracle_eps"};
    return keys;
}

}  // namespace detail

/// Checks the invariants of a config; returns every violation.
inline std::vector<std::string> validate(const RunConfig& c) {
    std::vector<std::string> errs;
    auto check = [&](bool ok, const std::string& msg) {
        if (!ok) errs.push_back(msg);
    };
    try {
        c.params.validate();
    } catch (const std::exception& e) {
        errs.push_back(e.what());
    }
    check(c.n >= 32, "n below minimum 32");
    check(c.r_max > 0.0 && std::isfinite(c.r_max), "r_max must be positive");
    if (c.spacing == GridSpacing::Log) check(c.r_min > 0.0 && c.r_min < c.r_max, "r_min must lie in (0, r_max)");
    check(c.n_quad == 0 || c.n_quad >= c.n, "n_quad must be 0 or at least n");
    try {
        c.integrator.validate();
    } catch (const std::exception& e) {
        errs.push_back(e.what());
    }
    if (const auto* eq = std::get_if<EquilibriumInit>(&c.initial)) check(eq->c > 0.0, "equilibrium c must be positive");
    if (const auto* b = std::get_if<BumpInit>(&c.initial)) {
        check(b->amplitude > 0.0, "gaussian_bump amplitude must be positive");
        check(b->radius >= 0.0, "gaussian_bump radius must be nonnegative");
        check(b->smoothing > 0.0, "gaussian_bump smoothing must be positive (raw indicators are not accepted)");
    }
    if (const auto* f = std::get_if<FileInit>(&c.initial)) check(!f->path.empty(), "from_file needs a path");
    check(!c.out_dir.empty(), "out_dir must not be empty");
    check(!c.oracle_radii.empty(), "oracle_radii must not be empty");
    for (double r : c.oracle_radii) check(r > 0.0 && r <= c.r_max, "oracle radii must lie in (0, r_max]");
    check(c.oracle_eps.size() >= 3, "oracle_eps needs at least 3 values");
    for (std::size_t i = 0; i < c.oracle_eps.size(); ++i) {
        check(c.oracle_eps[i] > 0.0, "oracle_eps values must be positive");
        if (i > 0) check(c.oracle_eps[i] < c.oracle_eps[i - 1], "oracle_eps must decrease");
    }
    return errs;
}

/// Parses and validates a config. Keys not given keep their defaults; `overrides` (e.g. from
/// command-line flags) are applied after the file's keys.
inline RunConfig parse_config(const std::string& text, const std::map<std::string, std::string>& overrides = {}) {
    std::vector<std::string> errs;
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errs.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (!detail::known_keys().count(key)) {
            errs.push_back("unknown key '" + key + "'");
            continue;
        }
        if (kv.count(key)) errs.push_back("duplicate key '" + key + "'");
        kv[key] = value;
    }
    for (const auto& [k, v] : overrides) {
        if (!detail::known_keys().count(k)) errs.push_back("unknown key '" + k + "'");
        else kv[k] = v;
    }

    for (const char* req : {"n", "r_max", "t_end"})
        if (!kv.count(req)) errs.push_back(std::string("missing required key '") + req + "'");

    RunConfig c;
    auto number = [&](const std::string& key, double& dst) {
        if (auto it = kv.find(key); it != kv.end()) {
            if (auto v = detail::to_double(it->second)) dst = *v;
            else errs.push_back("key '" + key + "': not a number: '" + it->second + "'");
        }
    };
    auto count = [&](const std::string& key, std::size_t& dst) {
        if (auto it = kv.find(key); it != kv.end()) {
            if (auto v = detail::to_size(it->second)) dst = *v;
            else errs.push_back("key '" + key + "': not a nonnegative integer: '" + it->second + "'");
        }
    };
    auto list = [&](const std::string& key, std::vector<double>& dst) {
        if (auto it = kv.find(key); it != kv.end()) {
            dst.clear();
            for (const auto& item : detail::split_list(it->second)) {
                if (auto v = detail::to_double(item)) dst.push_back(*v);
                else errs.push_back("key '" + key + "': not a number: '" + item + "'");
            }
        }
    };

    number("kappa0", c.params.kappa0);
    number("kappa1", c.params.kappa1);
    number("kappa2", c.params.kappa2);
    const bool any_physical = kv.count("mass") || kv.count("coupling") || kv.count("condensate_density");
    if (any_physical) {
        if (!(kv.count("mass") && kv.count("coupling") && kv.count("condensate_density")))
            errs.push_back("mass, coupling and condensate_density must be given together");
        if (kv.count("kappa1") || kv.count("kappa2"))
            errs.push_back("kappa1/kappa2 conflict with mass, coupling and condensate_density");
        PhysicalConstants pc;
        number("mass", pc.mass);
        number("coupling", pc.coupling);
        number("condensate_density", pc.condensate_density);
        c.physical = pc;
        if (pc.mass > 0.0 && pc.coupling > 0.0 && pc.condensate_density > 0.0)
            c.params = DispersionParams::from_physical(pc.mass, pc.coupling, pc.condensate_density, c.params.kappa0);
        else
            errs.push_back("mass, coupling and condensate_density must be positive");
    }

    count("n", c.n);
    number("r_max", c.r_max);
    if (auto it = kv.find("spacing"); it != kv.end()) {
        if (it->second == "uniform") c.spacing = GridSpacing::Uniform;
        else if (it->second == "log") c.spacing = GridSpacing::Log;
        else errs.push_back("spacing must be 'uniform' or 'log'");
    }
    number("r_min", c.r_min);
    count("n_quad", c.n_quad);

    auto& ic = c.integrator;
    number("dt_init", ic.dt_init);
    number("dt_min", ic.dt_min);
    number("dt_max", ic.dt_max);
    number("t_end", ic.t_end);
    number("eta", ic.eta);
    number("f_scale", ic.f_scale);
    number("snapshot_every", ic.snapshot_every);
    if (auto it = kv.find("scheme"); it != kv.end()) {
        try {
            ic.scheme = parse_scheme(it->second);
        } catch (const ConfigError& e) {
            errs.push_back(e.what());
        }
    }

    const int n_init = static_cast<int>(kv.count("equilibrium") + kv.count("gaussian_bump") + kv.count("from_file"));
    if (n_init > 1) errs.push_back("conflicting initial conditions: give only one of equilibrium, gaussian_bump, from_file");
    if (kv.count("equilibrium")) {
        EquilibriumInit e;
        number("equilibrium", e.c);
        c.initial = e;
    } else if (auto it = kv.find("gaussian_bump"); it != kv.end()) {
        std::vector<double> v;
        list("gaussian_bump", v);
        if (v.size() != 3) errs.push_back("gaussian_bump expects amplitude, radius, smoothing");
        else c.initial = BumpInit{v[0], v[1], v[2]};
    } else if (auto it2 = kv.find("from_file"); it2 != kv.end()) {
        c.initial = FileInit{it2->second};
    }

    if (auto it = kv.find("out_dir"); it != kv.end()) c.out_dir = it->second;
    number("diagnostics_every", c.diagnostics_every);
    list("oracle_radii", c.oracle_radii);
    list("oracle_eps", c.oracle_eps);

    // Invariants are checked even after parse errors so that one pass reports everything.
    for (auto& e : validate(c))
        if (std::find(errs.begin(), errs.end(), e) == errs.end()) errs.push_back(std::move(e));
    if (!errs.empty()) throw ConfigErrors(std::move(errs));
    return c;
}

/// Text that parse_config reads back to an equal config.
inline std::string render(const RunConfig& c) {
    std::ostringstream o;
    auto list = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
        return s;
    };
    o << "kappa0 = " << format_double(c.params.kappa0) << "\n";
    if (c.physical) {
        o << "mass = " << format_double(c.physical->mass) << "\n";
        o << "coupling = " << format_double(c.physical->coupling) << "\n";
        o << "condensate_density = " << format_double(c.physical->condensate_density) << "\n";
    } else {
        o << "kappa1 = " << format_double(c.params.kappa1) << "\n";
        o << "kappa2 = " << format_double(c.params.kappa2) << "\n";
    }
    o << "n = " << c.n << "\n";
    o << "r_max = " << format_double(c.r_max) << "\n";
    o << "spacing = " << to_string(c.spacing) << "\n";
    o << "r_min = " << format_double(c.r_min) << "\n";
    o << "n_quad = " << c.n_quad << "\n";
    const auto& ic = c.integrator;
    o << "dt_init = " << format_double(ic.dt_init) << "\n";
    o << "dt_min = " << format_double(ic.dt_min) << "\n";
    o << "dt_max = " << format_double(ic.dt_max) << "\n";
    o << "t_end = " << format_double(ic.t_end) << "\n";
    o << "eta = " << format_double(ic.eta) << "\n";
    o << "f_scale = " << format_double(ic.f_scale) << "\n";
    o << "scheme = " << to_string(ic.scheme) << "\n";
    o << "snapshot_every = " << format_double(ic.snapshot_every) << "\n";
    if (const auto* e = std::get_if<EquilibriumInit>(&c.initial)) o << "equilibrium = " << format_double(e->c) << "\n";
    if (const auto* b = std::get_if<BumpInit>(&c.initial))
        o << "gaussian_bump = " << format_double(b->amplitude) << ", " << format_double(b->radius) << ", "
          << format_double(b->smoothing) << "\n";
    if (const auto* f = std::get_if<FileInit>(&c.initial)) o << "from_file = " << f->path << "\n";
    o << "out_dir = " << c.out_dir << "\n";
    o << "diagnostics_every = " << format_double(c.diagnostics_every) << "\n";
    o << "oracle_radii = " << list(c.oracle_radii) << "\n";
    o << "oracle_eps = " << list(c.oracle_eps) << "\n";
    return o.str();
}

}  // namespace qbe
