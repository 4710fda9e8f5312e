#include <catch_amalgamated.hpp>

#include <cmath>

#include "qbe/diagnostics.hpp"

using namespace qbe;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const DispersionParams unit{};

double gauss(double r) { return std::exp(-r * r); }

Trajectory trajectory_of(std::vector<RadialState> snaps) {
    Trajectory t;
    for (auto& s : snaps) {
        t.reports.push_back(make_report(s, unit, std::nullopt));
        t.snapshots.push_back(std::move(s));
    }
    return t;
}

}  // namespace

TEST_CASE("moments converge under refinement") {
    const auto coarse = make_grid(RadialGrid::uniform(512, 8.0));
    const auto fine = make_grid(RadialGrid::uniform(8192, 8.0));
    for (int k = 0; k <= 3; ++k) {
        const double a = moment(sample_state(coarse, gauss), k, unit);
        const double b = moment(sample_state(fine, gauss), k, unit);
        CHECK_THAT(a, WithinRel(b, 1e-4));
    }
    // Mass of exp(-r^2) is pi^(3/2).
    CHECK_THAT(mass(sample_state(fine, gauss), unit), WithinRel(std::pow(std::numbers::pi, 1.5), 1e-7));
    CHECK_THROWS_AS(moment(sample_state(coarse, gauss), 4, unit), DomainError);

    // Cauchy-Schwarz between neighbouring moments.
    const auto s = sample_state(coarse, [](double r) { return std::exp(-(r - 2.0) * (r - 2.0)); });
    const double m1 = moment(s, 1, unit), m2 = moment(s, 2, unit), m3 = moment(s, 3, unit);
    CHECK(m2 * m2 <= m1 * m3);
}

TEST_CASE("entropy") {
    CHECK(entropy_density(0.0) == 0.0);
    CHECK_THAT(entropy_density(1.0), WithinAbs(-2.0 * std::log(2.0), 1e-15));
    CHECK_THROWS_AS(entropy_density(-1.0), DomainError);
    for (double f = 1e-6; f < 1e6; f *= 3.0) CHECK(entropy_density(f) < 0.0);
    const auto g = make_grid(RadialGrid::uniform(64, 4.0));
    CHECK(entropy(sample_state(g, gauss)) < 0.0);
}

TEST_CASE("equilibrium values") {
    // 1 / (e^sqrt 2 - 1) to 17 digits.
    CHECK_THAT(equilibrium_value(1.0, 1.0, unit), WithinRel(0.32120770202585924, 1e-14));
    CHECK_THROWS_AS(equilibrium_value(0.0, 1.0, unit), DomainError);
    const auto g = make_grid(RadialGrid::uniform(32, 4.0));
    const auto s = equilibrium_state(2.0, g, unit);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.values[i] == equilibrium_value(2.0, g->node(i), unit));
}

TEST_CASE("envelope fit") {
    const auto g = make_grid(RadialGrid::uniform(64, 4.0));
    const auto s = sample_state(g, gauss);
    const auto one = envelope_fit(s, {1.0});
    CHECK_THAT(one.theta1, WithinRel(1.0, 1e-12));
    CHECK(one.theta2 == 1.0);
    CHECK(envelope_holds(s, one));

    // The default grid finds a rate at least as good as the true one.
    const auto fit = envelope_fit(s);
    CHECK(fit.theta1 >= one.theta1 * (1.0 - 1e-12));
    CHECK(envelope_holds(s, fit));
    CHECK(fit.valid_radius == g->node(63));

    std::vector<double> v = s.values;
    v[10] = 0.0;
    CHECK(envelope_fit(RadialState(g, v)).theta1 == 0.0);
    CHECK_THROWS_AS(envelope_fit(s, {}), ConfigError);
    CHECK_THROWS_AS(envelope_fit(s, {2.0, 1.0}), ConfigError);
}

TEST_CASE("lower bound over a window") {
    const auto g = make_grid(RadialGrid::uniform(64, 4.0));
    auto at = [&](double t, double a) {
        auto s = sample_state(g, [a](double r) { return a * gauss(r); });
        s.time = t;
        return s;
    };
    const auto tr = trajectory_of({at(0.0, 1.0), at(1.0, 0.5), at(2.0, 0.8)});
    const auto v = lower_bound_report(tr, 1.0, {0.5, 1.0, 2.0});
    CHECK(v.holds);
    CHECK(v.window_size == 2);
    CHECK(v.theta2 >= 1.0);
    CHECK(v.theta1 >= 0.5 * (1.0 - 1e-12));
    CHECK_THROWS_AS(lower_bound_report(tr, 3.0), ConfigError);

    auto z = at(1.5, 1.0);
    z.values[0] = 0.0;
    const auto tz = trajectory_of({at(0.0, 1.0), z, at(2.0, 1.0)});
    CHECK_FALSE(lower_bound_report(tz, 1.0).holds);
    CHECK(lower_bound_report(tz, 1.75).holds);
}

TEST_CASE("conservation report") {
    const auto g = make_grid(RadialGrid::uniform(64, 4.0));
    std::vector<RadialState> snaps;
    for (int k = 0; k <= 10; ++k) {
        auto s = sample_state(g, gauss);
        s.time = 0.2 * k;
        snaps.push_back(s);
    }
    const auto tr = trajectory_of(snaps);
    const auto c = conservation_report(tr);
    CHECK(c.ok());
    CHECK(c.max_abs_energy_drift == 0.0);
    CHECK(c.sup_m2 == c.m2_reference);
    CHECK(c.momentum == std::array<double, 3>{0.0, 0.0, 0.0});

    ConservationOptions tight;
    tight.mass_bound = 0.5 * c.sup_mass;
    CHECK(conservation_report(tr, tight).mass_bound_exceeded);

    // A late spike in M2 counts as unsaturated growth.
    auto grown = tr;
    grown.reports.back().moments[1] *= 3.0;
    CHECK(conservation_report(grown).m2_unsaturated);
    CHECK_FALSE(conservation_report(grown).ok());

    CHECK(worst_entropy_increase(tr) == 0.0);
    grown.reports[5].entropy *= 0.5;
    CHECK(worst_entropy_increase(grown) > 0.0);
}

TEST_CASE("loss shape and production terms") {
    const auto g = make_grid(RadialGrid::uniform(256, 8.0));
    const auto t = build_kernel_table(g, unit);
    const auto s = sample_state(g, [](double r) { return std::exp(-(r - 1.0) * (r - 1.0)); });

    const auto shape = loss_shape_monitor(s, t);
    CHECK(shape.ratio > 0.0);
    CHECK(std::isfinite(shape.ratio));
    CHECK(shape.moment_bound > 0.0);

    const auto m1 = moment_production(s, t, 1);
    CHECK(std::abs(m1.value) <= 1e-12 * m1.scale);
    // On the resonance the two second-moment brackets agree.
    const auto m2 = moment_production(s, t, 2);
    const auto m2p = second_moment_production_product_form(s, t);
    CHECK(std::abs(m2.value - m2p.value) <= 1e-10 * std::max(m2.scale, m2p.scale));
    CHECK_THROWS_AS(moment_production(s, t, 4), DomainError);

    CHECK(tail_loss_rate(s, t) >= 0.0);
    const auto wide = sample_state(g, [](double r) { return std::exp(-0.1 * r * r); });
    CHECK(tail_loss_rate(wide, t) > tail_loss_rate(s, t));
}

TEST_CASE("report assembly") {
    const auto g = make_grid(RadialGrid::uniform(64, 4.0));
    auto s = sample_state(g, gauss);
    s.time = 0.5;
    const auto r = make_report(s, unit, 2.0 * moment(s, 1, unit));
    CHECK(r.t == 0.5);
    CHECK_THAT(r.energy_drift, WithinAbs(-0.5, 1e-15));
    CHECK(r.moments[0] == moment(s, 1, unit));
    CHECK(r.tail_loss == 0.0);
}
