#pragma once

// Resonance surfaces of the 1 <-> 2 interaction for a pivot momentum p (|p| = rho):
//
//   Decay          S_p   = { w : E(p - w) + E(w) = E(p) }
//   Absorb         S'_p  = { w : E(p + w) = E(p) + E(w) }
//   AbsorbShifted  S''_p = { w : E(w) = E(p) + E(w - p) } = p + S'_p
//
// Every surface is a union of rings w = alpha p + q_alpha e_theta perpendicular to p. The ring
// radius is found by bisection on q^2; slopes d(q^2)/dalpha come from implicit differentiation
// of the defining relation, so no numerical differencing enters the surface measure.

#include <cmath>
#include <numbers>
#include <string>

#include "qbe/dispersion.hpp"
#include "qbe/errors.hpp"

namespace qbe {

enum class SurfaceKind { Decay, Absorb, AbsorbShifted };

enum class SurfaceWeight {
    Euclidean,  // plain surface measure d sigma
    Coarea      // d sigma / |grad G|, the reduction of a Dirac delta in energy
};

inline const char* to_string(SurfaceKind k) {
    switch (k) {
        case SurfaceKind::Decay: return "decay";
        case SurfaceKind::Absorb: return "absorb";
        case SurfaceKind::AbsorbShifted: return "absorb_shifted";
    }
    return "?";
}

inline SurfaceKind parse_surface_kind(const std::string& s) {
    if (s == "decay" || s == "Decay") return SurfaceKind::Decay;
    if (s == "absorb" || s == "Absorb") return SurfaceKind::Absorb;
    if (s == "absorb_shifted" || s == "AbsorbShifted") return SurfaceKind::AbsorbShifted;
    throw ConfigError("unknown surface kind '" + s + "' (expected decay, absorb or absorb_shifted)");
}

struct RingSample {
    double alpha = 0.0;
    double ring_radius = 0.0;           // |q_alpha|
    double ring_radius_sq_slope = 0.0;  // d|q_alpha|^2 / d alpha
    double measure_density = 0.0;       // d sigma / (d alpha d theta)
    double grad_norm = 0.0;             // |grad G| on the ring
};

namespace detail {

inline void require_pivot(double rho) {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("pivot momentum rho must be positive and finite");
}

}  // namespace detail

/// Largest axial coordinate reached by S'_p: rings exist exactly for alpha in [0, alpha_p).
inline double alpha_max(double rho, const DispersionParams& p) {
    detail::require_pivot(rho);
    return 0.5 * p.kappa1 / (p.kappa2 * rho * rho + std::sqrt(p.kappa2) * energy(rho, p));
}

/// G(alpha p + q) for the decay surface as a function of q^2. Increasing in q^2.
inline double decay_residual(double rho, double alpha, double q_sq, const DispersionParams& p) {
    const double rho2 = rho * rho;
    const double a = (1.0 - alpha) * (1.0 - alpha) * rho2 + q_sq;
    const double b = alpha * alpha * rho2 + q_sq;
    return energy_from_sq(a, p) + energy_from_sq(b, p) - energy(rho, p);
}

/// Gbar(alpha p + q) = E(p + w) - E(w) - E(p) as a function of q^2. Decreasing in q^2.
/// The difference E(p + w) - E(w) is formed from E^2 differences so large |q| does not cancel.
inline double absorb_residual(double rho, double alpha, double q_sq, const DispersionParams& p) {
    const double rho2 = rho * rho;
    const double a = (1.0 + alpha) * (1.0 + alpha) * rho2 + q_sq;
    const double b = alpha * alpha * rho2 + q_sq;
    const double diff = (1.0 + 2.0 * alpha) * rho2 * (p.kappa1 + p.kappa2 * (a + b)) /
                        (energy_from_sq(a, p) + energy_from_sq(b, p));
    return diff - energy(rho, p);
}

namespace detail {

inline double base_kind_alpha_check(SurfaceKind kind, double rho, double alpha, const DispersionParams& p) {
    require_pivot(rho);
    if (!std::isfinite(alpha)) throw DomainError("alpha must be finite");
    if (kind == SurfaceKind::Decay) {
        if (alpha < 0.0 || alpha > 1.0) throw DomainError("decay surface: alpha must lie in [0, 1]");
        return 1.0;
    }
    const double amax = alpha_max(rho, p);
    if (alpha < 0.0 || alpha >= amax) throw DomainError("absorb surface: alpha must lie in [0, alpha_p)");
    return amax;
}

// Bisection on a monotone function of q^2 until the bracket is 1e-14 relative.
template <class Residual>
double bisect_q_sq(Residual&& g, double lo, double hi, bool increasing) {
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double v = g(mid);
        if (!std::isfinite(v)) throw NumericError("ring residual is not finite");
        if ((v < 0.0) == increasing)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-14 * hi) break;
    }
    return 0.5 * (lo + hi);
}

inline double ring_radius_sq(SurfaceKind kind, double rho, double alpha, const DispersionParams& p) {
    base_kind_alpha_check(kind, rho, alpha, p);
    if (kind == SurfaceKind::Decay) {
        if (alpha == 0.0 || alpha == 1.0) return 0.0;
        auto g = [&](double q2) { return decay_residual(rho, alpha, q2, p); };
        return bisect_q_sq(g, 0.0, rho * rho, true);
    }
    if (alpha == 0.0) return 0.0;
    auto g = [&](double q2) { return absorb_residual(rho, alpha, q2, p); };
    double hi = rho * rho;
    while (g(hi) >= 0.0) {
        hi *= 4.0;
        if (hi > 1e300) throw NumericError("absorb ring: no sign change of Gbar before overflow");
    }
    return bisect_q_sq(g, 0.0, hi, false);
}

// The three axial and transverse ingredients of grad G on a ring.
struct RingGeometry {
    double q_sq;
    double slope_w;      // E'(|w|)/|w|
    double slope_other;  // E'(|p - w|)/|p - w| for Decay, E'(|p + w|)/|p + w| for Absorb
};

inline RingGeometry ring_geometry(SurfaceKind kind, double rho, double alpha, const DispersionParams& p) {
    const double q_sq = ring_radius_sq(kind, rho, alpha, p);
    const double rho2 = rho * rho;
    const double w_sq = alpha * alpha * rho2 + q_sq;
    if (!(w_sq > 0.0)) throw DomainError("ring point coincides with a pole of the surface");
    const double other_axial = (kind == SurfaceKind::Decay) ? (1.0 - alpha) : (1.0 + alpha);
    const double other_sq = other_axial * other_axial * rho2 + q_sq;
    if (!(other_sq > 0.0)) throw DomainError("ring point coincides with a pole of the surface");
    return {q_sq, slope_over_radius(std::sqrt(w_sq), p), slope_over_radius(std::sqrt(other_sq), p)};
}

// Poles are excluded with a margin of 1e-6 of the alpha-domain length `top`.
inline void require_interior(SurfaceKind kind, double alpha, double top) {
    const double margin = 1e-6 * top;
    if (alpha < margin) throw DomainError("alpha too close to the pole at alpha = 0");
    if (kind == SurfaceKind::Decay && alpha > 1.0 - margin)
        throw DomainError("alpha too close to the pole at alpha = 1");
}

inline double slope_from_geometry(SurfaceKind kind, double rho, double alpha, const RingGeometry& g) {
    const double rho2 = rho * rho;
    if (kind == SurfaceKind::Decay) {
        // 0 = (1/2)(q^2)' (S_other + S_w) + alpha rho^2 S_w - (1 - alpha) rho^2 S_other
        return 2.0 * rho2 * ((1.0 - alpha) * g.slope_other - alpha * g.slope_w) / (g.slope_other + g.slope_w);
    }
    // (1/2)(q^2)' (S_w - S_other) = (1 + alpha) rho^2 S_other - alpha rho^2 S_w
    return 2.0 * rho2 * ((1.0 + alpha) * g.slope_other - alpha * g.slope_w) / (g.slope_w - g.slope_other);
}

inline double grad_from_geometry(SurfaceKind kind, double rho, double alpha, const RingGeometry& g) {
    const double q = std::sqrt(g.q_sq);
    if (kind == SurfaceKind::Decay)
        return std::hypot((alpha - 1.0) * rho * g.slope_other + alpha * rho * g.slope_w,
                          q * (g.slope_other + g.slope_w));
    return std::hypot((1.0 + alpha) * rho * g.slope_other - alpha * rho * g.slope_w,
                      q * (g.slope_other - g.slope_w));
}

}  // namespace detail

inline double ring_radius(SurfaceKind kind, double rho, double alpha, const DispersionParams& p) {
    return std::sqrt(detail::ring_radius_sq(kind, rho, alpha, p));
}

inline double ring_radius_sq_slope(SurfaceKind kind, double rho, double alpha, const DispersionParams& p) {
    detail::require_interior(kind, alpha, detail::base_kind_alpha_check(kind, rho, alpha, p));
    return detail::slope_from_geometry(kind, rho, alpha, detail::ring_geometry(kind, rho, alpha, p));
}

/// d sigma / (d alpha d theta) = sqrt(rho^2 q^2 + (1/4) ((q^2)')^2).
inline double measure_density(SurfaceKind kind, double rho, double alpha, const DispersionParams& p) {
    detail::require_interior(kind, alpha, detail::base_kind_alpha_check(kind, rho, alpha, p));
    const auto g = detail::ring_geometry(kind, rho, alpha, p);
    const double dq2 = detail::slope_from_geometry(kind, rho, alpha, g);
    return std::sqrt(rho * rho * g.q_sq + 0.25 * dq2 * dq2);
}

/// |grad G| at the ring; independent of theta by rotational symmetry about p.
inline double grad_norm(SurfaceKind kind, double rho, double alpha, const DispersionParams& p) {
    detail::base_kind_alpha_check(kind, rho, alpha, p);
    if (alpha == 0.0 || (kind == SurfaceKind::Decay && alpha == 1.0))
        throw DomainError("grad_norm: G is not differentiable at the poles");
    return detail::grad_from_geometry(kind, rho, alpha, detail::ring_geometry(kind, rho, alpha, p));
}

inline RingSample ring_sample(SurfaceKind kind, double rho, double alpha, const DispersionParams& p) {
    detail::require_interior(kind, alpha, detail::base_kind_alpha_check(kind, rho, alpha, p));
    const auto g = detail::ring_geometry(kind, rho, alpha, p);
    RingSample s;
    s.alpha = alpha;
    s.ring_radius = std::sqrt(g.q_sq);
    s.ring_radius_sq_slope = detail::slope_from_geometry(kind, rho, alpha, g);
    s.measure_density = std::sqrt(rho * rho * g.q_sq + 0.25 * s.ring_radius_sq_slope * s.ring_radius_sq_slope);
    s.grad_norm = detail::grad_from_geometry(kind, rho, alpha, g);
    return s;
}

/// 2 pi * int_0^1 density d alpha over S_p, composite midpoint.
inline double surface_area(double rho, const DispersionParams& p, int n_alpha = 512) {
    detail::require_pivot(rho);
    if (n_alpha < 16) throw ConfigError("surface_area: n_alpha must be >= 16");
    const double h = 1.0 / n_alpha;
    double sum = 0.0;
    for (int k = 0; k < n_alpha; ++k) sum += measure_density(SurfaceKind::Decay, rho, (k + 0.5) * h, p);
    return 2.0 * std::numbers::pi * sum * h;
}

/// 2 pi * int F(radius) * density [/ |grad G|] d alpha.
///
/// The radius handed to F is |w| for Decay and Absorb, and |p + w| for AbsorbShifted. Decay uses
/// midpoints on (0, 1). The absorb surfaces are unbounded as alpha -> alpha_p, so their midpoints
/// are graded towards alpha_p via alpha = alpha_p (1 - (1 - t)^3).
template <class Profile>
double surface_integral(SurfaceKind kind, double rho, Profile&& F, SurfaceWeight weight,
                        const DispersionParams& p, int n_alpha = 512) {
    detail::require_pivot(rho);
    if (n_alpha < 16) throw ConfigError("surface_integral: n_alpha must be >= 16");
    const double rho2 = rho * rho;
    const double h = 1.0 / n_alpha;
    const bool decay = kind == SurfaceKind::Decay;
    const double amax = decay ? 1.0 : alpha_max(rho, p);
    double sum = 0.0;
    for (int k = 0; k < n_alpha; ++k) {
        const double t = (k + 0.5) * h;
        double alpha = t;
        double jac = 1.0;
        if (!decay) {
            const double s = 1.0 - t;
            alpha = amax * (1.0 - s * s * s);
            jac = 3.0 * amax * s * s;
        }
        detail::require_interior(kind, alpha, amax);
        const auto g = detail::ring_geometry(kind, rho, alpha, p);
        const double axial = (kind == SurfaceKind::AbsorbShifted) ? (1.0 + alpha) : alpha;
        const double value = F(std::sqrt(axial * axial * rho2 + g.q_sq));
        if (!std::isfinite(value)) throw NumericError("surface_integral: profile returned a non-finite value");
        // Far out on the absorb surfaces the density overflows; a vanishing profile contributes nothing.
        if (value == 0.0) continue;
        const double dq2 = detail::slope_from_geometry(kind, rho, alpha, g);
        double term = value * std::sqrt(rho2 * g.q_sq + 0.25 * dq2 * dq2) * jac;
        if (weight == SurfaceWeight::Coarea) term /= detail::grad_from_geometry(kind, rho, alpha, g);
        if (!std::isfinite(term)) throw NumericError("surface_integral: non-finite integrand");
        sum += term;
    }
    return 2.0 * std::numbers::pi * sum * h;
}

}  // namespace qbe
