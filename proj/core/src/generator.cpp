#include "harvest/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "harvest/gait.hpp"

namespace harvest {
namespace {

double latch_constant(const HarvesterDesign& d) noexcept {
    return 3.0 * kMu0 * d.magnet_moment * d.end_magnet_moment / (2.0 * std::numbers::pi);
}

// Attraction toward one end magnet at center distance `dist`, with the distance floored.
double pull(double k, double dist, double d_min) noexcept {
    const double d = std::max(dist, d_min);
    const double d2 = d * d;
    return k / (d2 * d2);
}

// Potential of one attraction as a function of the distance to that magnet: dU/d(dist) = pull.
double pull_potential(double k, double dist, double d_min) noexcept {
    if (dist >= d_min) return -k / (3.0 * dist * dist * dist);
    return -k / (3.0 * d_min * d_min * d_min) - pull(k, d_min, d_min) * (d_min - dist);
}

}  // namespace

const char* to_string(Stage stage) noexcept {
    switch (stage) {
        case Stage::neutral: return "neutral";
        case Stage::compression: return "compression";
        case Stage::induction: return "induction";
        case Stage::recovery: return "recovery";
    }
    return "neutral";
}

double flux_linkage(const HarvesterDesign& d, double x) noexcept {
    const double a2 = d.coil_radius * d.coil_radius;
    const double r2 = a2 + x * x;
    return d.coil_turns * kMu0 * d.magnet_moment * a2 / (2.0 * r2 * std::sqrt(r2));
}

double dflux_dx(const HarvesterDesign& d, double x) noexcept {
    const double a2 = d.coil_radius * d.coil_radius;
    const double r2 = a2 + x * x;
    return -3.0 * d.coil_turns * kMu0 * d.magnet_moment * a2 * x / (2.0 * r2 * r2 * std::sqrt(r2));
}

double emf(const HarvesterDesign& d, double x, double v) noexcept { return -dflux_dx(d, x) * v; }

double magnetic_latch_force(const HarvesterDesign& d, double x) noexcept {
    if (d.end_magnet_moment == 0.0 || d.magnet_moment == 0.0) return 0.0;
    const double k = latch_constant(d);
    const double d_min = d.end_gap - d.stroke_limit;
    return pull(k, d.end_gap - x, d_min) - pull(k, d.end_gap + x, d_min);
}

double latch_potential(const HarvesterDesign& d, double x) noexcept {
    if (d.end_magnet_moment == 0.0 || d.magnet_moment == 0.0) return 0.0;
    const double k = latch_constant(d);
    const double d_min = d.end_gap - d.stroke_limit;
    auto u = [&](double at) {
        return pull_potential(k, d.end_gap - at, d_min) + pull_potential(k, d.end_gap + at, d_min);
    };
    return u(x) - u(0.0);
}

double stop_stiffness(const HarvesterDesign& d) noexcept { return kStopStiffnessRatio * d.spring_k; }

double stop_damping(const HarvesterDesign& d) noexcept {
    return 2.0 * std::sqrt(stop_stiffness(d) * d.moving_mass);
}

double stop_force(const HarvesterDesign& d, double x, double v) noexcept {
    const double penetration = std::abs(x) - d.stroke_limit;
    if (penetration <= 0.0) return 0.0;
    const double outward = x > 0.0 ? 1.0 : -1.0;
    const double push = stop_stiffness(d) * penetration + stop_damping(d) * v * outward;
    return push > 0.0 ? -outward * push : 0.0;
}

double reaction_force(const HarvesterDesign& d, double x, double coil_current) noexcept {
    return dflux_dx(d, x) * coil_current;
}

double passive_force(const HarvesterDesign& d, MechState s, double f_ext) noexcept {
    return f_ext - d.spring_k * s.x - d.mech_damping * s.v + magnetic_latch_force(d, s.x) +
           stop_force(d, s.x, s.v);
}

double mech_acceleration(const HarvesterDesign& d, MechState s, double f_ext, double coil_current) noexcept {
    return (passive_force(d, s, f_ext) + reaction_force(d, s.x, coil_current)) / d.moving_mass;
}

Stage classify_stage(const GaitProfile& profile, double t, MechState s, double v_threshold) noexcept {
    const bool loaded = force_at(profile, t) > 0.0;
    const bool fast = std::abs(s.v) >= v_threshold;
    if (loaded) {
        if (s.v < 0.0 || !fast) return Stage::compression;
        return Stage::induction;
    }
    if (!fast) return Stage::neutral;
    if (s.x * s.v < 0.0) return Stage::recovery;
    return Stage::induction;
}

}  // namespace harvest
