#pragma once

// Radial discretization of an isotropic occupation number f(|p|) on (0, R_max].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qbe/errors.hpp"

namespace qbe {

enum class GridSpacing { Uniform, Log };

inline const char* to_string(GridSpacing s) { return s == GridSpacing::Uniform ? "uniform" : "log"; }

/// Cell-centred nodes; the origin is never a node. Weights integrate g(rho) rho^2 d rho by the
/// midpoint rule in the cell coordinate (rho for uniform, log rho for log spacing).
class RadialGrid {
public:
    static RadialGrid uniform(std::size_t n, double r_max) {
        check(n, r_max);
        RadialGrid g;
        g.spacing_ = GridSpacing::Uniform;
        g.r_max_ = r_max;
        g.r_min_ = 0.0;
        g.step_ = r_max / static_cast<double>(n);
        g.nodes_.resize(n);
        g.line_weights_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            g.nodes_[i] = (static_cast<double>(i) + 0.5) * g.step_;
            g.line_weights_[i] = g.step_;
        }
        g.finish();
        return g;
    }

    /// Log-spaced cells on [r_min, r_max]; the sliver [0, r_min] is not covered.
    static RadialGrid logarithmic(std::size_t n, double r_max, double r_min) {
        check(n, r_max);
        if (!(r_min > 0.0) || !(r_min < r_max)) throw ConfigError("log grid: need 0 < r_min < r_max");
        RadialGrid g;
        g.spacing_ = GridSpacing::Log;
        g.r_max_ = r_max;
        g.r_min_ = r_min;
        g.step_ = std::log(r_max / r_min) / static_cast<double>(n);
        g.nodes_.resize(n);
        g.line_weights_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            g.nodes_[i] = r_min * std::exp((static_cast<double>(i) + 0.5) * g.step_);
            g.line_weights_[i] = g.step_ * g.nodes_[i];
        }
        g.finish();
        return g;
    }

    std::size_t size() const noexcept { return nodes_.size(); }
    double r_max() const noexcept { return r_max_; }
    double r_min() const noexcept { return r_min_; }
    GridSpacing spacing() const noexcept { return spacing_; }
    std::span<const double> nodes() const noexcept { return nodes_; }
    double node(std::size_t i) const { return nodes_[i]; }
    /// Weights for int g(rho) rho^2 d rho.
    std::span<const double> weights() const noexcept { return weights_; }
    /// Weights for int g(rho) d rho.
    std::span<const double> line_weights() const noexcept { return line_weights_; }

    /// Continuous node coordinate: coordinate(node(i)) == i.
    double coordinate(double x) const noexcept {
        if (spacing_ == GridSpacing::Uniform) return x / step_ - 0.5;
        return std::log(x / r_min_) / step_ - 0.5;
    }

    friend bool operator==(const RadialGrid& a, const RadialGrid& b) {
        return a.spacing_ == b.spacing_ && a.r_max_ == b.r_max_ && a.r_min_ == b.r_min_ &&
               a.nodes_.size() == b.nodes_.size();
    }

private:
    RadialGrid() = default;

    static void check(std::size_t n, double r_max) {
        if (n < 4) throw ConfigError("radial grid needs at least 4 nodes");
        if (!(r_max > 0.0) || !std::isfinite(r_max)) throw ConfigError("radial grid: R_max must be positive");
    }

    void finish() {
        weights_.resize(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) weights_[i] = line_weights_[i] * nodes_[i] * nodes_[i];
    }

    GridSpacing spacing_ = GridSpacing::Uniform;
    double r_max_ = 0.0;
    double r_min_ = 0.0;
    double step_ = 0.0;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> line_weights_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_grid(RadialGrid g) { return std::make_shared<const RadialGrid>(std::move(g)); }

/// Occupation numbers f_i >= 0 on the nodes of a grid at time t.
struct RadialState {
    GridPtr grid;
    std::vector<double> values;
    double time = 0.0;

    RadialState() = default;
    RadialState(GridPtr g, std::vector<double> v, double t = 0.0) : grid(std::move(g)), values(std::move(v)), time(t) {
        validate();
    }

    std::size_t size() const noexcept { return values.size(); }

    void validate() const {
        if (!grid) throw ConfigError("radial state without a grid");
        if (values.size() != grid->size()) throw ConfigError("radial state size does not match its grid");
        for (double v : values) {
            if (!std::isfinite(v)) throw NumericError("radial state holds a non-finite value");
            if (v < 0.0) throw DomainError("radial state holds a negative occupation number");
        }
    }
};

/// Samples a radial profile on the nodes of a grid.
template <class Profile>
RadialState sample_state(const GridPtr& grid, Profile&& profile, double t = 0.0) {
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = profile(grid->node(i));
    return RadialState(grid, std::move(v), t);
}

/// Monotone piecewise-cubic (Fritsch-Carlson) interpolation of rho * f(rho), clamped at zero.
///
/// Working with rho f keeps the 1/rho behaviour of Bose-Einstein equilibria near the origin smooth.
/// Below the first node and above the last node the end cubics are extended; beyond R_max the
/// profile is zero.
class ProfileInterpolant {
public:
    explicit ProfileInterpolant(const RadialState& state) : grid_(state.grid.get()) {
        const auto x = grid_->nodes();
        const std::size_t n = x.size();
        x_.assign(x.begin(), x.end());
        y_.resize(n);
        for (std::size_t i = 0; i < n; ++i) y_[i] = x[i] * state.values[i];
        d_ = pchip_slopes(x_, y_);
        h_.resize(n - 1);
        inv_h_.resize(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h_[i] = x_[i + 1] - x_[i];
            inv_h_[i] = 1.0 / h_[i];
        }
        uniform_ = grid_->spacing() == GridSpacing::Uniform;
        r_max_ = grid_->r_max();
        inv_step_ = uniform_ ? static_cast<double>(n) / r_max_ : 0.0;
    }

    double operator()(double r) const noexcept {
        if (!(r > 0.0) || r > r_max_) return 0.0;
        const double t = uniform_ ? r * inv_step_ - 0.5 : grid_->coordinate(r);
        const std::size_t n = x_.size();
        std::size_t i = 0;
        if (t >= 0.0) i = std::min(static_cast<std::size_t>(t), n - 2);
        const double h = h_[i];
        const double s = uniform_ ? t - static_cast<double>(i) : (r - x_[i]) * inv_h_[i];
        const double s2 = s * s;
        const double s3 = s2 * s;
        const double y = (2.0 * s3 - 3.0 * s2 + 1.0) * y_[i] + (s3 - 2.0 * s2 + s) * h * d_[i] +
                         (-2.0 * s3 + 3.0 * s2) * y_[i + 1] + (s3 - s2) * h * d_[i + 1];
        return y > 0.0 ? y / r : 0.0;
    }

    /// Value at a node, without interpolation.
    double at_node(std::size_t i) const noexcept { return y_[i] / x_[i]; }

private:
    static std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
        const std::size_t n = x.size();
        std::vector<double> h(n - 1), delta(n - 1), d(n, 0.0);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            h[k] = x[k + 1] - x[k];
            delta[k] = (y[k + 1] - y[k]) / h[k];
        }
        for (std::size_t k = 1; k + 1 < n; ++k) {
            if (delta[k - 1] * delta[k] > 0.0) {
                const double w1 = 2.0 * h[k] + h[k - 1];
                const double w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        return d;
    }

    // One-sided three-point end slope with the usual shape-preserving limits.
    static double end_slope(double h0, double h1, double del0, double del1) {
        double d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
        if (d * del0 <= 0.0)
            d = 0.0;
        else if (del0 * del1 <= 0.0 && std::abs(d) > std::abs(3.0 * del0))
            d = 3.0 * del0;
        return d;
    }

    const RadialGrid* grid_;
    std::vector<double> x_, y_, d_, h_, inv_h_;
    bool uniform_ = true;
    double r_max_ = 0.0;
    double inv_step_ = 0.0;
};

}  // namespace qbe
