#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "harvest/gait.hpp"
#include "harvest/generator.hpp"
#include "oracles.hpp"

using namespace harvest;

namespace {
HarvesterDesign small_moment_design() {
    HarvesterDesign d;
    d.coil_turns = 1000;
    d.magnet_moment = 0.1;
    d.coil_radius = 0.008;
    return d;
}
}  // namespace

TEST_CASE("flux linkage at the coil centre") {
    const HarvesterDesign d = small_moment_design();
    const double expected = 1000 * kMu0 * 0.1 / (2 * 0.008);
    CHECK(flux_linkage(d, 0.0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(flux_linkage(d, 0.0) == doctest::Approx(7.853981638e-3).epsilon(1e-9));
}

TEST_CASE("flux linkage is even, positive and decays away from the coil") {
    const HarvesterDesign d = small_moment_design();
    double prev = flux_linkage(d, 0.0);
    for (int k = 1; k <= 200; ++k) {
        const double x = 1e-4 * k;
        const double lam = flux_linkage(d, x);
        CHECK(lam > 0.0);
        CHECK(lam < prev);
        CHECK(flux_linkage(d, -x) == lam);
        prev = lam;
    }
    CHECK(flux_linkage(d, 10 * d.coil_radius) < 0.002 * flux_linkage(d, 0.0));
}

TEST_CASE("flux gradient matches central differences") {
    const HarvesterDesign d = reference_design().design;
    CHECK(dflux_dx(d, 0.0) == 0.0);
    const auto lam = [&](double x) { return flux_linkage(d, x); };
    const double at4 = oracle::central_difference(lam, 0.004, 1e-7);
    CHECK(std::abs(dflux_dx(d, 0.004) - at4) / std::abs(at4) < 1e-6);

    constexpr double h = 1e-6;
    const double lim = d.stroke_limit - 10 * h;
    for (int k = 0; k < 1000; ++k) {
        const double x = -lim + 2 * lim * (k + 0.5) / 1000;
        const double fd = oracle::central_difference(lam, x, h);
        const double an = dflux_dx(d, x);
        CHECK(dflux_dx(d, -x) == -an);
        if (std::abs(fd) > 1e-12) CHECK(std::abs(an - fd) / std::abs(fd) < 1e-6);
    }
}

TEST_CASE("emf vanishes at rest and at the flux extremum") {
    const HarvesterDesign d = reference_design().design;
    CHECK(emf(d, 0.003, 0.0) == 0.0);
    CHECK(emf(d, 0.0, 0.7) == 0.0);
}

TEST_CASE("emf peak under sinusoidal motion matches a brute-force time derivative") {
    const HarvesterDesign d = reference_design().design;
    const double amp = 0.004;
    const double w = 2 * std::numbers::pi * 5.0;
    const double period = 2 * std::numbers::pi / w;
    const auto implemented = [&](double t) {
        return emf(d, amp * std::sin(w * t), amp * w * std::cos(w * t));
    };
    const auto independent = [&](double t) {
        const auto lam_t = [&](double s) { return flux_linkage(d, amp * std::sin(w * s)); };
        return -oracle::central_difference(lam_t, t, 1e-8);
    };
    const double got = oracle::grid_max_abs(implemented, 0.0, period, 20000);
    const double want = oracle::grid_max_abs(independent, 0.0, period, 200000);
    CHECK(std::abs(got - want) / want < 1e-3);
}

TEST_CASE("latch force") {
    HarvesterDesign d = reference_design().design;
    d.end_magnet_moment = 0.0;
    CHECK(magnetic_latch_force(d, 0.002) == 0.0);

    d.end_magnet_moment = 0.5;
    CHECK(magnetic_latch_force(d, 0.0) == 0.0);
    CHECK(magnetic_latch_force(d, 0.001) > 0.0);
    for (double x : {0.0005, 0.001, 0.003, 0.0049}) CHECK(magnetic_latch_force(d, -x) == -magnetic_latch_force(d, x));

    // Closed form toward the top magnet minus toward the bottom one.
    const double x = 0.001;
    const double c = 3 * kMu0 * d.magnet_moment * d.end_magnet_moment / (2 * std::numbers::pi);
    const double expected = c / std::pow(d.end_gap - x, 4) - c / std::pow(d.end_gap + x, 4);
    CHECK(magnetic_latch_force(d, x) == doctest::Approx(expected).epsilon(1e-12));

    // Near-magnet distance floored at the closest physical approach.
    const double d_min = d.end_gap - d.stroke_limit;
    const double beyond = d.stroke_limit + 0.0005;
    const double capped = c / std::pow(d_min, 4) - c / std::pow(d.end_gap + beyond, 4);
    CHECK(magnetic_latch_force(d, beyond) == doctest::Approx(capped).epsilon(1e-12));
    CHECK(std::isfinite(magnetic_latch_force(d, d.end_gap)));
}

TEST_CASE("latch potential is the antiderivative of the latch force") {
    HarvesterDesign d = reference_design().design;
    d.end_magnet_moment = 0.5;
    CHECK(latch_potential(d, 0.0) == 0.0);
    const auto u = [&](double x) { return latch_potential(d, x); };
    for (double x : {-0.004, -0.001, 0.0005, 0.002, 0.0045}) {
        const double f = magnetic_latch_force(d, x);
        CHECK(-oracle::central_difference(u, x, 1e-7) == doctest::Approx(f).epsilon(1e-6));
    }
}

TEST_CASE("acceleration examples") {
    const HarvesterDesign d = reference_design().design;
    CHECK(mech_acceleration(d, {0.0, 0.0}, 0.0, 0.0) == 0.0);
    CHECK(mech_acceleration(d, {0.0, 0.0}, 700.0, 0.0) == doctest::Approx(35000.0));
}

TEST_CASE("electrical power equals mechanical power taken by the reaction force") {
    const HarvesterDesign d = reference_design().design;
    for (double x : {-0.004, -0.001, 0.002, 0.0035}) {
        for (double v : {-0.3, 0.05, 0.9}) {
            for (double i : {-0.02, 0.001, 0.1}) {
                const double pe = emf(d, x, v) * i;
                const double pm = reaction_force(d, x, i) * v;
                CHECK(std::abs(pe + pm) <= 1e-15 * std::max(1.0, std::abs(pe)));
            }
        }
    }
}

TEST_CASE("reaction force enters the acceleration") {
    const HarvesterDesign d = reference_design().design;
    const MechState s{0.002, 0.1};
    const double with_i = mech_acceleration(d, s, 0.0, 0.05);
    const double without = mech_acceleration(d, s, 0.0, 0.0);
    CHECK(with_i - without == doctest::Approx(reaction_force(d, s.x, 0.05) / d.moving_mass));
}

TEST_CASE("stops only push back into the stroke") {
    const HarvesterDesign d = reference_design().design;
    CHECK(stop_force(d, 0.004, 1.0) == 0.0);
    CHECK(stop_force(d, 0.0051, 0.0) < 0.0);
    CHECK(stop_force(d, -0.0051, 0.0) > 0.0);
    CHECK(stop_force(d, 0.0051, -10.0) <= 0.0);
    CHECK(stop_force(d, -0.0051, 10.0) >= 0.0);
    CHECK(stop_stiffness(d) == 100 * d.spring_k);
    CHECK(stop_damping(d) == doctest::Approx(2 * std::sqrt(stop_stiffness(d) * d.moving_mass)));
}

TEST_CASE("unforced mechanics never gain energy") {
    const HarvesterDesign d = reference_design().design;
    MechState s{0.004, 0.0};
    const double dt = 1e-5;
    const auto energy = [&](MechState q) { return 0.5 * d.moving_mass * q.v * q.v + 0.5 * d.spring_k * q.x * q.x; };
    const auto f = [&](MechState q) { return mech_acceleration(d, q, 0.0, 0.0); };
    double prev = energy(s);
    for (int k = 0; k < 20000; ++k) {
        // Midpoint step; passivity is a property of the vector field, not of RK4.
        const MechState mid{s.x + 0.5 * dt * s.v, s.v + 0.5 * dt * f(s)};
        s = {s.x + dt * mid.v, s.v + dt * f(mid)};
        const double e = energy(s);
        CHECK(e <= prev * (1 + 1e-12));
        prev = e;
    }
}

TEST_CASE("weak spring with strong end magnets is bistable") {
    HarvesterDesign d = reference_design().design;
    d.spring_k = 50.0;
    d.end_magnet_moment = 1.0;
    const auto net = [&](double x) { return -d.spring_k * x + magnetic_latch_force(d, x); };
    bool somewhere = false;
    int stable = 0;
    constexpr int n = 20000;
    const double lim = d.stroke_limit;
    double prev = net(-lim);
    for (int k = 1; k <= n; ++k) {
        const double x = -lim + 2 * lim * k / n;
        const double f = net(x);
        somewhere |= std::abs(magnetic_latch_force(d, x)) > d.spring_k * std::abs(x);
        if (prev > 0.0 && f <= 0.0) ++stable;  // restoring crossing
        prev = f;
    }
    // The stroke ends act as walls: a net force into the wall latches there.
    if (net(lim) > 0.0) ++stable;
    if (net(-lim) < 0.0) ++stable;
    CHECK(somewhere);
    CHECK(stable >= 2);
}

TEST_CASE("stage classification") {
    GaitProfile p;
    p.duty = 0.1;
    CHECK(classify_stage(p, 0.5, {0.0, 0.0}) == Stage::neutral);
    CHECK(classify_stage(p, 0.05, {0.0, -0.2}) == Stage::compression);
    CHECK(classify_stage(p, 0.5, {-0.002, 0.2}) == Stage::recovery);
    CHECK(classify_stage(p, 0.5, {0.002, 0.2}) == Stage::induction);
    CHECK(classify_stage(p, 0.05, {-0.002, 0.2}) == Stage::induction);
    CHECK(std::string(to_string(Stage::recovery)) == "recovery");
}
