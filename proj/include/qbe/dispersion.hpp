#pragma once

// Bogoliubov dispersion E(r) = sqrt(k1 r^2 + k2 r^4) and the scalar maps derived from it.

#include <cmath>
#include <string>

#include "qbe/errors.hpp"

namespace qbe {

struct DispersionParams {
    double kappa0 = 1.0;  // transition-probability prefactor
    double kappa1 = 1.0;  // energy^2 / momentum^2
    double kappa2 = 1.0;  // energy^2 / momentum^4

    /// kappa1 = g n_c / m, kappa2 = 1 / (4 m^2).
    static DispersionParams from_physical(double mass, double coupling, double condensate_density,
                                          double kappa0 = 1.0) {
        if (!(mass > 0.0) || !(coupling > 0.0) || !(condensate_density > 0.0))
            throw DomainError("physical constants m, g, n_c must be positive");
        DispersionParams p;
        p.kappa0 = kappa0;
        p.kappa1 = coupling * condensate_density / mass;
        p.kappa2 = 1.0 / (4.0 * mass * mass);
        p.validate();
        return p;
    }

    void validate() const {
        if (!(kappa0 > 0.0) || !(kappa1 > 0.0) || !(kappa2 > 0.0) || !std::isfinite(kappa0) ||
            !std::isfinite(kappa1) || !std::isfinite(kappa2))
            throw DomainError("dispersion constants kappa0, kappa1, kappa2 must be positive and finite");
    }

    friend bool operator==(const DispersionParams&, const DispersionParams&) = default;
};

/// Energy as a function of the squared momentum; avoids a sqrt/square round trip.
inline double energy_from_sq(double r_sq, const DispersionParams& p) {
    return std::sqrt(r_sq * (p.kappa1 + p.kappa2 * r_sq));
}

inline double energy(double r, const DispersionParams& p) {
    if (!(r >= 0.0)) throw DomainError("energy: momentum magnitude must be >= 0");
    return r * std::sqrt(p.kappa1 + p.kappa2 * r * r);
}

/// Squared momentum with energy e. Written as 2e^2 / (k1 + sqrt(k1^2 + 4 k2 e^2)) so that
/// small energies do not cancel.
inline double energy_inverse_sq(double e, const DispersionParams& p) {
    if (!(e >= 0.0)) throw DomainError("energy_inverse: energy must be >= 0");
    const double e2 = e * e;
    return 2.0 * e2 / (p.kappa1 + std::sqrt(p.kappa1 * p.kappa1 + 4.0 * p.kappa2 * e2));
}

inline double energy_inverse(double e, const DispersionParams& p) {
    return std::sqrt(energy_inverse_sq(e, p));
}

/// dE/dr = (k1 + 2 k2 r^2) / sqrt(k1 + k2 r^2).
inline double energy_slope(double r, const DispersionParams& p) {
    if (!(r >= 0.0)) throw DomainError("energy_slope: momentum magnitude must be >= 0");
    const double r2 = r * r;
    return (p.kappa1 + 2.0 * p.kappa2 * r2) / std::sqrt(p.kappa1 + p.kappa2 * r2);
}

/// (dE/dr) / r, strictly decreasing on (0, inf); diverges like sqrt(k1)/r at the origin.
inline double slope_over_radius(double r, const DispersionParams& p) {
    if (!(r > 0.0)) throw DomainError("slope_over_radius: momentum magnitude must be > 0");
    const double r2 = r * r;
    return (p.kappa1 + 2.0 * p.kappa2 * r2) / (r * std::sqrt(p.kappa1 + p.kappa2 * r2));
}

}  // namespace qbe
