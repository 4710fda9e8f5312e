#pragma once

// Time advancement of df/dt = Q[f] on the radial grid. The default scheme treats the loss
// implicitly and the gain explicitly, f' = (f + dt gain) / (1 + dt nu), which keeps f >= 0 for
// every dt. An explicit Heun scheme is kept for convergence studies.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "qbe/collision.hpp"
#include "qbe/diagnostics.hpp"
#include "qbe/errors.hpp"
#include "qbe/grid.hpp"

namespace qbe {

enum class Scheme { PatankarImex, HeunCheck };

inline const char* to_string(Scheme s) { return s == Scheme::PatankarImex ? "patankar_imex" : "heun_check"; }

inline Scheme parse_scheme(const std::string& s) {
    if (s == "patankar_imex") return Scheme::PatankarImex;
    if (s == "heun_check") return Scheme::HeunCheck;
    throw ConfigError("unknown scheme '" + s + "'");
}

struct IntegratorConfig {
    double dt_init = 1e-3;
    double dt_min = 1e-10;
    double dt_max = 0.05;
    double t_end = 1.0;
    double eta = 0.1;        // cap on max_i |df_i| / (f_i + f_scale) per step
    double f_scale = 1e-8;
    Scheme scheme = Scheme::PatankarImex;
    double snapshot_every = 0.1;  // <= 0 stores every accepted step

    void validate() const {
        if (!(dt_min > 0.0)) throw ConfigError("integrator: dt_min must be positive");
        if (!(dt_min <= dt_init && dt_init <= dt_max)) throw ConfigError("integrator: need dt_min <= dt_init <= dt_max");
        if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("integrator: eta must lie in (0, 1)");
        if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("integrator: t_end must be nonnegative");
        if (!(f_scale > 0.0)) throw ConfigError("integrator: f_scale must be positive");
        if (!std::isfinite(snapshot_every)) throw ConfigError("integrator: snapshot cadence must be finite");
    }
};

/// One implicit-loss step of size dt.
inline RadialState step(const RadialState& state, const KernelTable& table, double dt) {
    if (!(dt > 0.0)) throw DomainError("step: dt must be positive");
    const auto gl = gain_loss(state, table);
    std::vector<double> next(state.size());
    for (std::size_t i = 0; i < next.size(); ++i)
        next[i] = (state.values[i] + dt * gl.gain[i]) / (1.0 + dt * gl.loss_frequency[i]);
    return RadialState(state.grid, std::move(next), state.time + dt);
}

struct HeunStep {
    RadialState state;
    std::size_t clamped = 0;  // nodes that went negative and were set to zero
};

/// Explicit Heun step; negative values are clamped to zero and counted.
inline HeunStep heun_step(const RadialState& state, const KernelTable& table, double dt) {
    if (!(dt > 0.0)) throw DomainError("heun_step: dt must be positive");
    HeunStep out;
    auto clamp = [&](std::vector<double>& v) {
        for (double& x : v)
            if (x < 0.0) {
                x = 0.0;
                ++out.clamped;
            }
    };
    const auto q0 = apply(state, table);
    std::vector<double> mid(state.size());
    for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = state.values[i] + dt * q0[i];
    clamp(mid);
    const auto q1 = apply(RadialState(state.grid, mid, state.time + dt), table);
    std::vector<double> next(state.size());
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = state.values[i] + 0.5 * dt * (q0[i] + q1[i]);
    clamp(next);
    out.state = RadialState(state.grid, std::move(next), state.time + dt);
    return out;
}

namespace detail {

inline double relative_change(const RadialState& a, const RadialState& b, double f_scale, std::size_t* worst = nullptr) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double c = std::abs(b.values[i] - a.values[i]) / (a.values[i] + f_scale);
        if (c > m) {
            m = c;
            if (worst) *worst = i;
        }
    }
    return m;
}

}  // namespace detail

/// Advances to t_end with step-size control. Snapshots are stored at t = 0, every snapshot_every
/// and at t_end; a diagnostics report is recorded for the initial state and every accepted step.
/// When dt would fall below dt_min the run stops with `aborted` set and a dump in abort_message.
inline Trajectory run(const RadialState& initial, const IntegratorConfig& cfg, const KernelTable& table) {
    cfg.validate();
    detail::require_matching(initial, table);
    const auto& params = table.params;

    Trajectory traj;
    RadialState cur = initial;
    const double e0 = moment(cur, 1, params);
    traj.snapshots.push_back(cur);
    traj.reports.push_back(make_report(cur, params, e0, &table));

    const double t0 = cur.time;
    const double t_final = t0 + cfg.t_end;
    const bool every_step = !(cfg.snapshot_every > 0.0);
    std::size_t next_index = 1;
    auto next_snapshot = [&]() {
        return every_step ? t_final : std::min(t_final, t0 + static_cast<double>(next_index) * cfg.snapshot_every);
    };

    double dt = cfg.dt_init;
    // Times are compared with a relative slack so that accumulated rounding never leaves a sliver step.
    const double slack = 1e-12 * std::max(1.0, std::abs(t_final));
    while (cur.time < t_final - slack) {
        const double target = next_snapshot();
        const bool hits_target = dt >= target - cur.time - slack;
        const double h = hits_target ? target - cur.time : dt;

        RadialState trial;
        std::size_t clamps = 0;
        if (cfg.scheme == Scheme::PatankarImex) {
            trial = step(cur, table, h);
        } else {
            auto hs = heun_step(cur, table, h);
            trial = std::move(hs.state);
            clamps = hs.clamped;
        }
        std::size_t worst = 0;
        const double change = detail::relative_change(cur, trial, cfg.f_scale, &worst);
        if (change > cfg.eta) {
            ++traj.rejected_steps;
            dt = 0.5 * h;
            if (dt < cfg.dt_min) {
                std::ostringstream msg;
                msg.precision(17);
                msg << "step control aborted: dt " << dt << " below dt_min " << cfg.dt_min << " at t " << cur.time
                    << "; worst node " << worst << " (rho " << cur.grid->node(worst) << ", f "
                    << cur.values[worst] << " -> " << trial.values[worst] << ", relative change " << change << ")";
                traj.aborted = true;
                traj.abort_message = msg.str();
                if (traj.snapshots.back().time != cur.time) traj.snapshots.push_back(cur);
                return traj;
            }
            continue;
        }
        traj.positivity_clamps += clamps;
        ++traj.accepted_steps;
        if (hits_target) trial.time = target;
        cur = std::move(trial);
        traj.reports.push_back(make_report(cur, params, e0, &table));
        if (hits_target || every_step) traj.snapshots.push_back(cur);
        if (hits_target) ++next_index;
        if (change < 0.5 * cfg.eta && !hits_target) dt = std::min(1.2 * dt, cfg.dt_max);
        else if (change < 0.5 * cfg.eta) dt = std::min(std::max(dt, 1.2 * h), cfg.dt_max);
    }
    if (traj.snapshots.back().time != cur.time) traj.snapshots.push_back(cur);
    return traj;
}

}  // namespace qbe
