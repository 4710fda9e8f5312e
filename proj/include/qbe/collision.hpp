#pragma once

// Collision operator Q[f] = Q1[f] + Q2[f] for isotropic states, reduced to one-dimensional
// resonance integrals. With s* = E^-1(E(rho) - E(r)) and u* = E^-1(E(rho) + E(r)):
//
//   Q1(rho) = 2 pi k0 int_0^rho  r^2 s*^2 / E'(s*) [ f(r) f(s*) - f(rho) (f(r) + f(s*) + 1) ] dr
//   Q2(rho) = 4 pi k0 int_0^Rmax r^2 u*^2 / E'(u*) [ f(u*) (f(rho) + f(r) + 1) - f(rho) f(r) ] dr
//
// The Dirac deltas in momentum and energy are removed exactly: the momentum delta fixes the third
// momentum, the angular integral becomes an integral over the partner magnitude, and the energy
// delta picks the partner with weight 1/E'. Outside [0, Rmax] the state is zero.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "qbe/dispersion.hpp"
#include "qbe/errors.hpp"
#include "qbe/grid.hpp"

namespace qbe {

/// Partner magnitude s with E(s) = E(rho) - E(r), 0 <= r <= rho.
inline double resonance_partner_decay(double rho, double r, const DispersionParams& p) {
    if (!(r >= 0.0) || !(rho >= 0.0)) throw DomainError("decay partner: radii must be >= 0");
    if (r > rho) throw DomainError("decay partner: r must not exceed rho");
    return energy_inverse(std::max(0.0, energy(rho, p) - energy(r, p)), p);
}

/// Partner magnitude u with E(u) = E(rho) + E(r).
inline double resonance_partner_absorb(double rho, double r, const DispersionParams& p) {
    if (!(r >= 0.0) || !(rho >= 0.0)) throw DomainError("absorb partner: radii must be >= 0");
    return energy_inverse(energy(rho, p) + energy(r, p), p);
}

/// Resonance kernel r^2 s^2 / E'(s) shared by both channels.
inline double resonance_weight(double r, double partner, const DispersionParams& p) {
    return r * r * partner * partner / energy_slope(partner, p);
}

/// Precomputed partners and kernel weights for every grid node.
///
/// Decay rows use ceil(n_quad * rho_i / Rmax) (at least 8) midpoints on [0, rho_i]. Absorb rows share
/// n_quad midpoints on [0, Rmax]; absorb_valid[i] counts the leading abscissae whose partner stays
/// inside the grid (u* grows with r).
struct KernelTable {
    GridPtr grid;
    DispersionParams params;
    std::size_t n_quad = 0;

    std::vector<std::size_t> decay_offset;  // size n + 1
    std::vector<double> decay_step;         // midpoint spacing per row
    std::vector<double> decay_partner;      // s*
    std::vector<double> decay_weight;       // r^2 s*^2 / E'(s*)

    double absorb_step = 0.0;
    std::vector<double> absorb_abscissa;  // size n_quad
    std::vector<double> absorb_partner;   // u*, row-major n x n_quad
    std::vector<double> absorb_weight;    // r^2 u*^2 / E'(u*)
    std::vector<std::size_t> absorb_valid;

    std::size_t size() const noexcept { return grid ? grid->size() : 0; }
    std::size_t decay_count(std::size_t i) const { return decay_offset[i + 1] - decay_offset[i]; }
    double decay_abscissa(std::size_t i, std::size_t k) const {
        return (static_cast<double>(k) + 0.5) * decay_step[i];
    }

    /// Triangle and endpoint relations of the resonance partners; throws NumericError on violation.
    void check_invariants(double rel_tol = 1e-12) const {
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) {
            const double rho = grid->node(i);
            const double slack = rel_tol * rho;
            for (std::size_t k = 0; k < decay_count(i); ++k) {
                const double r = decay_abscissa(i, k);
                const double s = decay_partner[decay_offset[i] + k];
                if (s < std::abs(rho - r) - slack || s > rho + r + slack || s > rho + slack)
                    throw NumericError("decay partner violates the triangle relation");
                if (!(decay_weight[decay_offset[i] + k] >= 0.0)) throw NumericError("negative decay weight");
            }
            for (std::size_t k = 0; k < n_quad; ++k) {
                const double r = absorb_abscissa[k];
                const double u = absorb_partner[i * n_quad + k];
                if (u < std::max(rho, r) - slack || u > rho + r + slack)
                    throw NumericError("absorb partner violates the triangle relation");
                if (!(absorb_weight[i * n_quad + k] >= 0.0)) throw NumericError("negative absorb weight");
            }
        }
    }
};

inline KernelTable build_kernel_table(const GridPtr& grid, const DispersionParams& params, std::size_t n_quad = 0) {
    if (!grid) throw ConfigError("kernel table: missing grid");
    params.validate();
    const std::size_t n = grid->size();
    if (n_quad == 0) n_quad = 2 * n;
    if (n_quad < n) throw ConfigError("kernel table: n_quad must be at least the grid size");

    KernelTable t;
    t.grid = grid;
    t.params = params;
    t.n_quad = n_quad;
    const double r_max = grid->r_max();

    t.decay_offset.assign(n + 1, 0);
    t.decay_step.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double rho = grid->node(i);
        const auto count = std::max<std::size_t>(
            8, static_cast<std::size_t>(std::ceil(static_cast<double>(n_quad) * rho / r_max)));
        t.decay_offset[i + 1] = t.decay_offset[i] + count;
        t.decay_step[i] = rho / static_cast<double>(count);
    }
    t.decay_partner.resize(t.decay_offset[n]);
    t.decay_weight.resize(t.decay_offset[n]);
    for (std::size_t i = 0; i < n; ++i) {
        const double rho = grid->node(i);
        const double e_rho = energy(rho, params);
        for (std::size_t k = 0; k < t.decay_count(i); ++k) {
            const double r = t.decay_abscissa(i, k);
            const double s = energy_inverse(std::max(0.0, e_rho - energy(r, params)), params);
            t.decay_partner[t.decay_offset[i] + k] = s;
            t.decay_weight[t.decay_offset[i] + k] = resonance_weight(r, s, params);
        }
    }

    t.absorb_step = r_max / static_cast<double>(n_quad);
    t.absorb_abscissa.resize(n_quad);
    std::vector<double> e_abscissa(n_quad);
    for (std::size_t k = 0; k < n_quad; ++k) {
        t.absorb_abscissa[k] = (static_cast<double>(k) + 0.5) * t.absorb_step;
        e_abscissa[k] = energy(t.absorb_abscissa[k], params);
    }
    t.absorb_partner.resize(n * n_quad);
    t.absorb_weight.resize(n * n_quad);
    t.absorb_valid.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double e_rho = energy(grid->node(i), params);
        std::size_t valid = 0;
        for (std::size_t k = 0; k < n_quad; ++k) {
            const double u = energy_inverse(e_rho + e_abscissa[k], params);
            t.absorb_partner[i * n_quad + k] = u;
            t.absorb_weight[i * n_quad + k] = resonance_weight(t.absorb_abscissa[k], u, params);
            if (u <= r_max) valid = k + 1;
        }
        t.absorb_valid[i] = valid;
    }
    return t;
}

/// Gain term and loss frequency nu with Q = gain - nu f.
struct GainLoss {
    std::vector<double> gain;
    std::vector<double> loss_frequency;
};

namespace detail {

inline void require_matching(const RadialState& state, const KernelTable& table) {
    state.validate();
    if (!table.grid) throw ConfigError("kernel table is empty");
    if (!(*state.grid == *table.grid)) throw ConfigError("state and kernel table live on different grids");
}

}  // namespace detail

/// Evaluates gain and loss frequency at every node. Each node is an independent fixed-order sum.
inline GainLoss gain_loss(const RadialState& state, const KernelTable& table) {
    detail::require_matching(state, table);
    const std::size_t n = table.size();
    const std::size_t nq = table.n_quad;
    const double k0 = table.params.kappa0;
    const ProfileInterpolant f(state);

    std::vector<double> f_abscissa(nq);
    for (std::size_t k = 0; k < nq; ++k) f_abscissa[k] = f(table.absorb_abscissa[k]);

    GainLoss out;
    out.gain.resize(n);
    out.loss_frequency.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f_rho = state.values[i];

        double decay_gain = 0.0;
        double decay_loss = 0.0;
        const std::size_t off = table.decay_offset[i];
        for (std::size_t k = 0; k < table.decay_count(i); ++k) {
            const double w = table.decay_weight[off + k];
            const double fr = f(table.decay_abscissa(i, k));
            const double fs = f(table.decay_partner[off + k]);
            decay_gain += w * fr * fs;
            decay_loss += w * (fr + fs + 1.0);
        }
        const double dr = table.decay_step[i];

        double absorb_gain = 0.0;
        double absorb_loss = 0.0;
        const double* w = table.absorb_weight.data() + i * nq;
        const double* u = table.absorb_partner.data() + i * nq;
        const std::size_t valid = table.absorb_valid[i];
        for (std::size_t k = 0; k < valid; ++k) {
            absorb_gain += w[k] * f(u[k]) * (f_rho + f_abscissa[k] + 1.0);
            absorb_loss += w[k] * f_abscissa[k];
        }
        for (std::size_t k = valid; k < nq; ++k) absorb_loss += w[k] * f_abscissa[k];

        const double c1 = 2.0 * std::numbers::pi * k0;
        const double c2 = 4.0 * std::numbers::pi * k0 * table.absorb_step;
        out.gain[i] = c1 * dr * decay_gain + c2 * absorb_gain;
        out.loss_frequency[i] = c1 * dr * decay_loss + c2 * absorb_loss;
        if (!std::isfinite(out.gain[i]) || !std::isfinite(out.loss_frequency[i]))
            throw NumericError("collision operator produced a non-finite value");
    }
    return out;
}

inline std::vector<double> gain(const RadialState& state, const KernelTable& table) {
    return gain_loss(state, table).gain;
}

inline std::vector<double> loss_frequency(const RadialState& state, const KernelTable& table) {
    return gain_loss(state, table).loss_frequency;
}

/// Q[f] = gain - nu f at every node.
inline std::vector<double> apply(const RadialState& state, const KernelTable& table) {
    auto gl = gain_loss(state, table);
    std::vector<double> q(gl.gain.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = gl.gain[i] - gl.loss_frequency[i] * state.values[i];
    return q;
}

/// Value of a weak-form functional and the magnitude it should be compared against.
struct WeakForm {
    double value = 0.0;
    double scale = 0.0;  // same sum with every term replaced by its absolute value
};

/// 8 pi^2 k0 int rho^2 d rho int_0^rho r^2 s*^2/E'(s*) Rt(rho, r, s*) B(rho, r, s*) dr with
/// Rt = f(r) f(s*) (1 + f(rho)) - (1 + f(r)) (1 + f(s*)) f(rho). The bracket B returns its value
/// and a magnitude for the scale.
template <class Bracket>
WeakForm weak_form_bracket(const RadialState& state, const KernelTable& table, Bracket&& bracket) {
    detail::require_matching(state, table);
    const ProfileInterpolant f(state);
    const auto weights = table.grid->weights();
    WeakForm out;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const double rho = table.grid->node(i);
        const double f_rho = state.values[i];
        const std::size_t off = table.decay_offset[i];
        double row = 0.0;
        double row_abs = 0.0;
        for (std::size_t k = 0; k < table.decay_count(i); ++k) {
            const double r = table.decay_abscissa(i, k);
            const double s = table.decay_partner[off + k];
            const double fr = f(r);
            const double fs = f(s);
            const double rt = fr * fs * (1.0 + f_rho) - (1.0 + fr) * (1.0 + fs) * f_rho;
            const auto [b, b_abs] = bracket(rho, r, s);
            const double w = table.decay_weight[off + k];
            row += w * rt * b;
            row_abs += w * std::abs(rt) * b_abs;
        }
        out.value += weights[i] * table.decay_step[i] * row;
        out.scale += weights[i] * table.decay_step[i] * row_abs;
    }
    const double c = 8.0 * std::numbers::pi * std::numbers::pi * table.params.kappa0;
    out.value *= c;
    out.scale *= c;
    return out;
}

/// int Q[f] phi dp through the symmetrised form with bracket phi(rho) - phi(r) - phi(s*).
template <class Phi>
WeakForm weak_form(const RadialState& state, const KernelTable& table, Phi&& phi) {
    return weak_form_bracket(state, table, [&](double rho, double r, double s) {
        const double a = phi(rho), b = phi(r), c = phi(s);
        return std::array<double, 2>{a - b - c, std::abs(a) + std::abs(b) + std::abs(c)};
    });
}

/// Gain, loss frequency and Q at one radius for a profile given as a function.
struct PointCollision {
    double gain = 0.0;
    double loss_frequency = 0.0;
    double value = 0.0;  // gain - loss_frequency * f(rho)
};

namespace detail {

// 4-point Gauss-Legendre nodes and weights on [-1, 1].
inline constexpr std::array<double, 4> gl4_x = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                                0.8611363115940526};
inline constexpr std::array<double, 4> gl4_w = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                                0.3478548451374538};

template <class Integrand>
double composite_gauss(double a, double b, std::size_t panels, Integrand&& g) {
    if (!(b > a)) return 0.0;
    const double h = (b - a) / static_cast<double>(panels);
    double sum = 0.0;
    for (std::size_t j = 0; j < panels; ++j) {
        const double mid = a + (static_cast<double>(j) + 0.5) * h;
        for (std::size_t q = 0; q < 4; ++q) sum += gl4_w[q] * g(mid + 0.5 * h * gl4_x[q]);
    }
    return 0.5 * h * sum;
}

}  // namespace detail

/// Reduced operator at a single radius with composite Gauss-Legendre quadrature (panels per
/// channel). The profile is treated as zero beyond r_max, matching the grid truncation.
template <class Profile>
PointCollision collision_at(Profile&& f, double rho, const DispersionParams& params, double r_max,
                            std::size_t panels = 2000) {
    if (!(rho > 0.0)) throw DomainError("collision_at: rho must be positive");
    const double e_rho = energy(rho, params);
    const double f_rho = f(rho);
    auto fc = [&](double x) { return x <= r_max ? f(x) : 0.0; };

    const double decay_gain = detail::composite_gauss(0.0, rho, panels, [&](double r) {
        const double s = energy_inverse(std::max(0.0, e_rho - energy(r, params)), params);
        return resonance_weight(r, s, params) * fc(r) * fc(s);
    });
    const double decay_loss = detail::composite_gauss(0.0, rho, panels, [&](double r) {
        const double s = energy_inverse(std::max(0.0, e_rho - energy(r, params)), params);
        return resonance_weight(r, s, params) * (fc(r) + fc(s) + 1.0);
    });
    const double absorb_gain = detail::composite_gauss(0.0, r_max, panels, [&](double r) {
        const double u = energy_inverse(e_rho + energy(r, params), params);
        return resonance_weight(r, u, params) * fc(u) * (f_rho + fc(r) + 1.0);
    });
    const double absorb_loss = detail::composite_gauss(0.0, r_max, panels, [&](double r) {
        const double u = energy_inverse(e_rho + energy(r, params), params);
        return resonance_weight(r, u, params) * fc(r);
    });
    PointCollision out;
    const double c1 = 2.0 * std::numbers::pi * params.kappa0;
    const double c2 = 4.0 * std::numbers::pi * params.kappa0;
    out.gain = c1 * decay_gain + c2 * absorb_gain;
    out.loss_frequency = c1 * decay_loss + c2 * absorb_loss;
    out.value = out.gain - out.loss_frequency * f_rho;
    return out;
}

/// 2 pi k0 int_0^rho r^2 s*^2/E'(s*) h(r, s*) dr for a weight h on the decay resonance.
template <class Weight>
double decay_channel_integral(double rho, Weight&& h, const DispersionParams& params, std::size_t panels = 2000) {
    if (!(rho > 0.0)) throw DomainError("decay_channel_integral: rho must be positive");
    const double e_rho = energy(rho, params);
    return 2.0 * std::numbers::pi * params.kappa0 *
           detail::composite_gauss(0.0, rho, panels, [&](double r) {
               const double s = energy_inverse(std::max(0.0, e_rho - energy(r, params)), params);
               return resonance_weight(r, s, params) * h(r, s);
           });
}

}  // namespace qbe
