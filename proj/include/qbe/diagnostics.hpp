#pragma once

// Observables of a radial state and checks over trajectories: energy moments, mass, the quantum
// entropy H, Bose-Einstein equilibria, Gaussian lower envelopes, and monitors for the loss and
// moment-production behaviour of the collision operator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qbe/collision.hpp"
#include "qbe/dispersion.hpp"
#include "qbe/errors.hpp"
#include "qbe/grid.hpp"

namespace qbe {

/// M_k = 4 pi int f E^k rho^2 d rho; k = 0 is the mass.
inline double moment(const RadialState& state, int k, const DispersionParams& params) {
    if (k < 0 || k > 3) throw DomainError("moment: order must be 0, 1, 2 or 3");
    const auto w = state.grid->weights();
    const auto x = state.grid->nodes();
    double sum = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double e = energy(x[i], params);
        double ek = 1.0;
        for (int j = 0; j < k; ++j) ek *= e;
        sum += w[i] * state.values[i] * ek;
    }
    return 4.0 * std::numbers::pi * sum;
}

inline double mass(const RadialState& state, const DispersionParams& params) { return moment(state, 0, params); }

/// f ln f - (1 + f) ln(1 + f), with the limit 0 at f = 0.
inline double entropy_density(double f) {
    if (f < 0.0) throw DomainError("entropy: negative occupation number");
    if (f == 0.0) return 0.0;
    return f * std::log(f) - (1.0 + f) * std::log1p(f);
}

/// H = 4 pi int [f ln f - (1 + f) ln(1 + f)] rho^2 d rho <= 0.
inline double entropy(const RadialState& state) {
    const auto w = state.grid->weights();
    double sum = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) sum += w[i] * entropy_density(state.values[i]);
    return 4.0 * std::numbers::pi * sum;
}

/// max_i |Q_i| / max_i nu_i f_i: how far a state is from annihilating the collision operator,
/// relative to the size of its loss term.
inline double stationarity_residual(const RadialState& state, const KernelTable& table) {
    const auto gl = gain_loss(state, table);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double loss = gl.loss_frequency[i] * state.values[i];
        num = std::max(num, std::abs(gl.gain[i] - loss));
        den = std::max(den, loss);
    }
    return den > 0.0 ? num / den : num;
}

/// Bose-Einstein equilibrium f = 1 / (exp(c E) - 1).
inline double equilibrium_value(double c, double rho, const DispersionParams& params) {
    if (!(c > 0.0)) throw DomainError("equilibrium: c must be positive");
    return 1.0 / std::expm1(c * energy(rho, params));
}

inline RadialState equilibrium_state(double c, const GridPtr& grid, const DispersionParams& params) {
    if (!(c > 0.0)) throw DomainError("equilibrium: c must be positive");
    return sample_state(grid, [&](double r) { return equilibrium_value(c, r, params); });
}

struct EnvelopeParams {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double valid_radius = 0.0;
};

/// 32 log-spaced rates in [1e-2, 1e2].
inline std::vector<double> default_theta2_grid() {
    std::vector<double> g(32);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::pow(10.0, -2.0 + 4.0 * static_cast<double>(i) / 31.0);
    return g;
}

namespace detail {

// theta1(theta2) = min_i f_i exp(theta2 rho_i^2), shaved by a few ulps so the envelope stays below f.
inline double envelope_amplitude(const RadialState& state, double theta2) {
    const auto x = state.grid->nodes();
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < state.size(); ++i) m = std::min(m, state.values[i] * std::exp(theta2 * x[i] * x[i]));
    return std::isfinite(m) ? m * (1.0 - 1e-14) : 0.0;
}

template <class Amplitude>
std::pair<double, double> best_rate(const std::vector<double>& theta2_grid, Amplitude&& amplitude) {
    if (theta2_grid.empty()) throw ConfigError("envelope: empty theta2 candidate grid");
    for (std::size_t i = 0; i < theta2_grid.size(); ++i) {
        if (!(theta2_grid[i] > 0.0)) throw ConfigError("envelope: theta2 candidates must be positive");
        if (i > 0 && !(theta2_grid[i] > theta2_grid[i - 1]))
            throw ConfigError("envelope: theta2 candidates must be ascending");
    }
    std::size_t best = 0;
    double best_amp = -1.0;
    for (std::size_t i = 0; i < theta2_grid.size(); ++i) {
        const double a = amplitude(theta2_grid[i]);
        if (a > best_amp) {
            best_amp = a;
            best = i;
        }
    }
    double theta2 = theta2_grid[best];
    // One refinement pass between the neighbours of the coarse argmax.
    if (theta2_grid.size() >= 3 && best_amp > 0.0) {
        const double lo = theta2_grid[best > 0 ? best - 1 : 0];
        const double hi = theta2_grid[std::min(best + 1, theta2_grid.size() - 1)];
        constexpr int fine = 32;
        for (int j = 0; j <= fine; ++j) {
            const double th = lo * std::pow(hi / lo, static_cast<double>(j) / fine);
            const double a = amplitude(th);
            if (a > best_amp) {
                best_amp = a;
                theta2 = th;
            }
        }
    }
    return {std::max(best_amp, 0.0), theta2};
}

}  // namespace detail

/// Largest theta1 with f_i >= theta1 exp(-theta2 rho_i^2) at every node, maximised over theta2.
/// A zero anywhere on the grid gives theta1 = 0 (vacuous bound).
inline EnvelopeParams envelope_fit(const RadialState& state, const std::vector<double>& theta2_grid) {
    state.validate();
    const auto [amp, rate] =
        detail::best_rate(theta2_grid, [&](double th) { return detail::envelope_amplitude(state, th); });
    return {amp, rate, state.grid->node(state.size() - 1)};
}

inline EnvelopeParams envelope_fit(const RadialState& state) { return envelope_fit(state, default_theta2_grid()); }

/// f_i >= theta1 exp(-theta2 rho_i^2) at every node.
inline bool envelope_holds(const RadialState& state, const EnvelopeParams& env) {
    const auto x = state.grid->nodes();
    for (std::size_t i = 0; i < state.size(); ++i)
        if (state.values[i] < env.theta1 * std::exp(-env.theta2 * x[i] * x[i])) return false;
    return true;
}

/// Mass removal rate through absorption events whose product momentum leaves [0, Rmax].
inline double tail_loss_rate(const RadialState& state, const KernelTable& table) {
    const ProfileInterpolant f(state);
    std::vector<double> f_abscissa(table.n_quad);
    for (std::size_t k = 0; k < table.n_quad; ++k) f_abscissa[k] = f(table.absorb_abscissa[k]);
    const auto w = table.grid->weights();
    const double c2 = 4.0 * std::numbers::pi * table.params.kappa0 * table.absorb_step;
    double sum = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        double nu_tail = 0.0;
        for (std::size_t k = table.absorb_valid[i]; k < table.n_quad; ++k)
            nu_tail += table.absorb_weight[i * table.n_quad + k] * f_abscissa[k];
        sum += w[i] * c2 * nu_tail * state.values[i];
    }
    return 4.0 * std::numbers::pi * sum;
}

struct DiagnosticsReport {
    double t = 0.0;
    double mass = 0.0;
    std::array<double, 3> moments{};  // M_1, M_2, M_3
    double entropy = 0.0;
    double energy_drift = 0.0;  // (M_1(t) - M_1(0)) / M_1(0)
    EnvelopeParams envelope;
    double tail_loss = 0.0;
};

/// Builds a report; reference_energy is M_1 at t = 0 (the state's own M_1 when absent).
inline DiagnosticsReport make_report(const RadialState& state, const DispersionParams& params,
                                     std::optional<double> reference_energy = std::nullopt,
                                     const KernelTable* table = nullptr) {
    DiagnosticsReport r;
    r.t = state.time;
    r.mass = moment(state, 0, params);
    for (int k = 1; k <= 3; ++k) r.moments[k - 1] = moment(state, k, params);
    r.entropy = entropy(state);
    const double e0 = reference_energy.value_or(r.moments[0]);
    r.energy_drift = e0 != 0.0 ? (r.moments[0] - e0) / e0 : 0.0;
    r.envelope = envelope_fit(state);
    if (table != nullptr) r.tail_loss = tail_loss_rate(state, *table);
    return r;
}

/// Ordered snapshots of a run plus one report per accepted step (and the initial state).
struct Trajectory {
    std::vector<RadialState> snapshots;
    std::vector<DiagnosticsReport> reports;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    std::size_t positivity_clamps = 0;  // only the explicit cross-check scheme can clamp
    bool aborted = false;
    std::string abort_message;
};

struct LowerBoundVerdict {
    bool holds = false;
    double theta1 = 0.0;  // inf over the window of the amplitude at the common rate
    double theta2 = 0.0;
    std::size_t window_size = 0;
};

/// Uniform Gaussian lower bound over the snapshots with t >= T, with one theta2 shared by all of them.
inline LowerBoundVerdict lower_bound_report(const Trajectory& traj, double T,
                                            const std::vector<double>& theta2_grid = default_theta2_grid()) {
    std::vector<const RadialState*> window;
    for (const auto& s : traj.snapshots)
        if (s.time >= T) window.push_back(&s);
    if (window.empty()) throw ConfigError("lower_bound_report: no snapshots at or after T");
    const auto [amp, rate] = detail::best_rate(theta2_grid, [&](double th) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto* s : window) m = std::min(m, detail::envelope_amplitude(*s, th));
        return m;
    });
    return {amp > 0.0, amp, rate, window.size()};
}

struct ConservationOptions {
    double tau = 0.1;           // start of the moment-boundedness window
    double t_reference = 1.0;   // reference time for the growth check
    double growth_factor = 2.0;
    std::optional<double> mass_bound;
};

struct ConservationReport {
    std::vector<double> times;
    std::vector<double> energy_drift;
    std::vector<double> mass;
    std::array<double, 3> momentum{};  // identically zero for radial states
    double max_abs_energy_drift = 0.0;
    double sup_mass = 0.0;
    double sup_m2 = 0.0;
    double sup_m3 = 0.0;
    double m2_reference = 0.0;
    double m3_reference = 0.0;
    bool moments_finite = true;
    bool mass_bound_exceeded = false;
    bool m2_unsaturated = false;
    bool m3_unsaturated = false;

    bool ok() const { return moments_finite && !mass_bound_exceeded && !m2_unsaturated && !m3_unsaturated; }
};

/// Energy drift, mass supremum and moment saturation over the per-step reports of a trajectory.
///
/// Moments are examined on t >= tau. A moment is flagged unsaturated when its supremum over the
/// window exceeds growth_factor times its value at the report nearest t_reference (clamped to the
/// window).
inline ConservationReport conservation_report(const Trajectory& traj, const ConservationOptions& opt = {}) {
    ConservationReport out;
    const auto& reps = traj.reports;
    if (reps.empty()) return out;
    for (const auto& r : reps) {
        out.times.push_back(r.t);
        out.energy_drift.push_back(r.energy_drift);
        out.mass.push_back(r.mass);
        out.max_abs_energy_drift = std::max(out.max_abs_energy_drift, std::abs(r.energy_drift));
        out.sup_mass = std::max(out.sup_mass, r.mass);
        if (!std::isfinite(r.mass) || !std::isfinite(r.moments[1]) || !std::isfinite(r.moments[2]))
            out.moments_finite = false;
    }
    const DiagnosticsReport* ref = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : reps) {
        if (r.t < opt.tau) continue;
        out.sup_m2 = std::max(out.sup_m2, r.moments[1]);
        out.sup_m3 = std::max(out.sup_m3, r.moments[2]);
        const double d = std::abs(r.t - std::max(opt.t_reference, opt.tau));
        if (d < best) {
            best = d;
            ref = &r;
        }
    }
    if (ref != nullptr) {
        out.m2_reference = ref->moments[1];
        out.m3_reference = ref->moments[2];
        out.m2_unsaturated = out.sup_m2 > opt.growth_factor * out.m2_reference;
        out.m3_unsaturated = out.sup_m3 > opt.growth_factor * out.m3_reference;
    }
    if (opt.mass_bound) out.mass_bound_exceeded = out.sup_mass > *opt.mass_bound;
    return out;
}

/// H(t_{j+1}) <= H(t_j) + rel_tol |H(t_j)| over consecutive reports; returns the worst relative increase.
inline double worst_entropy_increase(const Trajectory& traj) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < traj.reports.size(); ++j) {
        const double h0 = traj.reports[j - 1].entropy;
        const double h1 = traj.reports[j].entropy;
        const double denom = std::abs(h0) > 0.0 ? std::abs(h0) : 1.0;
        worst = std::max(worst, (h1 - h0) / denom);
    }
    return worst;
}

/// max over nodes of nu(rho) / ((1 + M) (rho + rho^5)) with M = int f(u) (u^2 + u^3) du.
struct LossShape {
    double ratio = 0.0;
    double moment_bound = 0.0;  // M
    double argmax_radius = 0.0;
};

inline LossShape loss_shape_monitor(const RadialState& state, const KernelTable& table) {
    const auto nu = loss_frequency(state, table);
    const auto x = state.grid->nodes();
    const auto lw = state.grid->line_weights();
    LossShape out;
    for (std::size_t i = 0; i < state.size(); ++i) out.moment_bound += lw[i] * state.values[i] * x[i] * x[i] * (1.0 + x[i]);
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double r = nu[i] / ((1.0 + out.moment_bound) * (x[i] + std::pow(x[i], 5)));
        if (r > out.ratio) {
            out.ratio = r;
            out.argmax_radius = x[i];
        }
    }
    return out;
}

/// d/dt M_k through the weak form with phi = E^k.
inline WeakForm moment_production(const RadialState& state, const KernelTable& table, int k) {
    if (k < 0 || k > 3) throw DomainError("moment_production: order must be 0, 1, 2 or 3");
    const auto& p = table.params;
    return weak_form(state, table, [&](double r) { return std::pow(energy(r, p), k); });
}

/// Second-moment production with the bracket E(rho)^2 - E(r)^2 - E(s)^2 replaced by 2 E(r) E(s),
/// which holds on the resonance.
inline WeakForm second_moment_production_product_form(const RadialState& state, const KernelTable& table) {
    const auto& p = table.params;
    return weak_form_bracket(state, table, [&](double, double r, double s) {
        const double v = 2.0 * energy(r, p) * energy(s, p);
        return std::array<double, 2>{v, v};
    });
}

}  // namespace qbe
