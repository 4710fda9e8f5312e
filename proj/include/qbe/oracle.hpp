#pragma once

// Brute-force collision operator with the energy delta replaced by a narrow Gaussian
// (1 / (eps sqrt(pi))) exp(-x^2 / eps^2). The momentum delta is integrated out exactly; the
// remaining (r, mu = cos theta) integral is done by quadrature. Nothing here uses the closed-form
// resonance partners, so agreement with the reduced operator is a genuine cross-check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "qbe/collision.hpp"
#include "qbe/dispersion.hpp"
#include "qbe/errors.hpp"

namespace qbe {

struct MollifierConfig {
    double epsilon = 0.05;
    std::size_t n_r = 256;   // radial quadrature points
    std::size_t n_mu = 64;   // angular points inside the resonance window

    void validate() const {
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("mollifier: epsilon must be positive");
        if (n_r < 64 || n_mu < 64) throw ConfigError("mollifier: resolutions must be at least 64");
    }
};

namespace detail {

enum class Channel { Decay, Absorb };

// Window half-width in units of epsilon; exp(-64) is below double rounding of the integrand.
inline constexpr double mollifier_reach = 8.0;

inline double mollifier(double x, double eps) {
    return std::exp(-(x * x) / (eps * eps)) / (eps * std::sqrt(std::numbers::pi));
}

// Third momentum |p -/+ p1| for |p| = rho, |p1| = r, cos angle mu.
inline double partner_radius(Channel ch, double rho, double r, double mu) {
    const double sq = rho * rho + r * r + (ch == Channel::Decay ? -2.0 : 2.0) * rho * r * mu;
    return std::sqrt(std::max(sq, 0.0));
}

// Energy mismatch, increasing in mu for both channels.
inline double mismatch(Channel ch, double rho, double r, double mu, const DispersionParams& p) {
    const double w = partner_radius(ch, rho, r, mu);
    if (ch == Channel::Decay) return energy(rho, p) - energy(r, p) - energy(w, p);
    return energy(w, p) - energy(rho, p) - energy(r, p);
}

// mu in [-1, 1] where mismatch == level, assuming mismatch(-1) < level < mismatch(1).
inline double solve_mu(Channel ch, double rho, double r, double level, const DispersionParams& p) {
    double lo = -1.0, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon(); ++it) {
        const double mid = 0.5 * (lo + hi);
        (mismatch(ch, rho, r, mid, p) < level ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// int_0^r_hi r^2 dr int_{-1}^{1} d mu delta_eps(mismatch) g(r, w(mu)).
template <class Integrand>
double mollified_channel(Channel ch, double rho, double r_hi, Integrand&& g, const MollifierConfig& c,
                         const DispersionParams& p) {
    const double eps = c.epsilon;
    const double reach = mollifier_reach * eps;
    const std::size_t r_panels = std::max<std::size_t>(c.n_r / 4, 1);
    const std::size_t mu_panels = std::max<std::size_t>(c.n_mu / 4, 1);

    auto inner = [&](double r) {
        const double lo_val = mismatch(ch, rho, r, -1.0, p);
        const double hi_val = mismatch(ch, rho, r, 1.0, p);
        if (hi_val < -reach || lo_val > reach) return 0.0;
        const double mu_lo = lo_val >= -reach ? -1.0 : solve_mu(ch, rho, r, -reach, p);
        const double mu_hi = hi_val <= reach ? 1.0 : solve_mu(ch, rho, r, reach, p);
        const double v = composite_gauss(mu_lo, mu_hi, mu_panels, [&](double mu) {
            return mollifier(mismatch(ch, rho, r, mu, p), eps) * g(r, partner_radius(ch, rho, r, mu));
        });
        return r * r * v;
    };
    return composite_gauss(0.0, r_hi, r_panels, inner);
}

// Upper end of the r-range that can reach the decay resonance.
inline double decay_reach(double rho, double eps, const DispersionParams& p) {
    const double target = energy(rho, p) + mollifier_reach * eps;
    // E(r) - E(r - rho) >= ... ; the nearest mismatch for r > rho is E(rho) - E(r) - E(r - rho).
    double lo = rho, hi = 2.0 * rho + 1.0;
    while (energy(hi, p) + energy(hi - rho, p) < target) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (energy(mid, p) + energy(mid - rho, p) < target ? lo : hi) = mid;
    }
    return hi;
}

inline void require_resolved(double r_hi, const MollifierConfig& c, const DispersionParams& p) {
    c.validate();
    const double spacing = energy(r_hi, p) / static_cast<double>(c.n_r);
    if (c.epsilon < 3.0 * spacing)
        throw ConfigError("mollifier: epsilon is below three energy spacings of the radial quadrature");
}

}  // namespace detail

/// Radial points needed so that epsilon spans at least `spacings` energy spacings up to r_hi.
inline std::size_t resolved_radial_points(double r_hi, double epsilon, const DispersionParams& p,
                                          double spacings = 4.0, std::size_t minimum = 64) {
    const double need = std::ceil(spacings * energy(r_hi, p) / epsilon);
    auto n = std::max(minimum, static_cast<std::size_t>(need));
    return (n + 3) / 4 * 4;
}

/// Mollified gain, loss frequency and Q at radius rho. The profile is taken as zero beyond r_max.
template <class Profile>
PointCollision mollified_collision(Profile&& f, double rho, const MollifierConfig& c, const DispersionParams& p,
                                   double r_max) {
    if (!(rho > 0.0)) throw DomainError("mollified_collision: rho must be positive");
    auto fc = [&](double x) { return x <= r_max ? f(x) : 0.0; };
    const double f_rho = fc(rho);
    const double k0 = p.kappa0;
    const double r_decay = std::min(detail::decay_reach(rho, c.epsilon, p), r_max);
    detail::require_resolved(std::max(r_decay, r_max), c, p);

    // Transition kernel kappa0 |p| |p1| |p2| after the momentum delta.
    const double d_gain = detail::mollified_channel(detail::Channel::Decay, rho, r_decay,
                                                    [&](double r, double s) { return r * s * fc(r) * fc(s); }, c, p);
    const double d_loss = detail::mollified_channel(
        detail::Channel::Decay, rho, r_decay, [&](double r, double s) { return r * s * (fc(r) + fc(s) + 1.0); }, c,
        p);
    const double a_gain = detail::mollified_channel(
        detail::Channel::Absorb, rho, r_max, [&](double r, double u) { return r * u * fc(u) * (f_rho + fc(r) + 1.0); },
        c, p);
    const double a_loss = detail::mollified_channel(detail::Channel::Absorb, rho, r_max,
                                                    [&](double r, double u) { return r * u * fc(r); }, c, p);

    const double ring = 2.0 * std::numbers::pi * k0 * rho;
    PointCollision out;
    out.gain = ring * (d_gain + 2.0 * a_gain);
    out.loss_frequency = ring * (d_loss + 2.0 * a_loss);
    out.value = out.gain - out.loss_frequency * f_rho;
    return out;
}

/// int delta_eps(E(p - w) + E(w) - E(p)) F(|w|) dw, the mollified counterpart of a co-area integral
/// over the decay surface.
template <class Radial>
double mollified_decay_integral(Radial&& F, double rho, const MollifierConfig& c, const DispersionParams& p) {
    if (!(rho > 0.0)) throw DomainError("mollified_decay_integral: rho must be positive");
    const double r_hi = detail::decay_reach(rho, c.epsilon, p);
    detail::require_resolved(r_hi, c, p);
    return 2.0 * std::numbers::pi *
           detail::mollified_channel(detail::Channel::Decay, rho, r_hi, [&](double r, double) { return F(r); }, c, p);
}

struct EpsilonRow {
    double epsilon = 0.0;
    double value = 0.0;
    double error = 0.0;           // |value - reduced|
    double relative_error = 0.0;  // error / (gain + nu f) of the reduced operator
};

struct EpsilonStudy {
    std::vector<EpsilonRow> rows;
    double reduced = 0.0;        // reduced-operator Q at rho
    double scale = 0.0;          // reduced gain + nu f, the natural magnitude of Q
    double extrapolated = 0.0;   // Richardson limit in eps^2 from the two smallest eps
    double extrapolated_relative_error = 0.0;
    double observed_order = std::numeric_limits<double>::quiet_NaN();
    bool non_monotone = false;   // an error increased before reaching the floor
};

/// Mollified Q at each eps (descending), with the radial resolution scaled as 1 / eps.
template <class Profile>
EpsilonStudy epsilon_study(Profile&& f, double rho, const std::vector<double>& eps_list, const DispersionParams& p,
                           double r_max, std::size_t n_mu = 64, std::size_t reduced_panels = 4000) {
    if (eps_list.size() < 3) throw ConfigError("epsilon_study: need at least 3 epsilon values");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0)) throw ConfigError("epsilon_study: epsilon values must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw ConfigError("epsilon_study: epsilon list must decrease");
    }
    EpsilonStudy out;
    const auto ref = collision_at(f, rho, p, r_max, reduced_panels);
    out.reduced = ref.value;
    out.scale = ref.gain + ref.loss_frequency * (rho <= r_max ? f(rho) : 0.0);
    auto rel = [&](double err) { return out.scale > 0.0 ? err / out.scale : err; };

    for (double eps : eps_list) {
        MollifierConfig c;
        c.epsilon = eps;
        c.n_mu = n_mu;
        c.n_r = resolved_radial_points(r_max, eps, p);
        const auto v = mollified_collision(f, rho, c, p, r_max);
        EpsilonRow row{eps, v.value, std::abs(v.value - out.reduced), 0.0};
        row.relative_error = rel(row.error);
        out.rows.push_back(row);
    }

    const auto& a = out.rows[out.rows.size() - 2];
    const auto& b = out.rows.back();
    const double ea = a.epsilon * a.epsilon, eb = b.epsilon * b.epsilon;
    out.extrapolated = (b.value * ea - a.value * eb) / (ea - eb);
    out.extrapolated_relative_error = rel(std::abs(out.extrapolated - out.reduced));

    // Order from a least-squares fit of log error against log eps over the three smallest eps above
    // the rounding floor; the coarsest widths are often pre-asymptotic.
    const double floor = 1e-11 * std::max(out.scale, std::numeric_limits<double>::min());
    bool floor_hit = false;
    std::vector<const EpsilonRow*> fit;
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        const auto& r = out.rows[i];
        if (r.error <= floor) {
            floor_hit = true;
            continue;
        }
        if (i > 0 && !floor_hit && r.error > out.rows[i - 1].error) out.non_monotone = true;
        fit.push_back(&r);
    }
    if (fit.size() > 3) fit.erase(fit.begin(), fit.end() - 3);
    if (fit.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto* r : fit) {
            const double x = std::log(r->epsilon), y = std::log(r->error);
            sx += x, sy += y, sxx += x * x, sxy += x * y;
        }
        const double m = static_cast<double>(fit.size());
        const double denom = m * sxx - sx * sx;
        if (denom > 0.0) out.observed_order = (m * sxy - sx * sy) / denom;
    }
    return out;
}

}  // namespace qbe
