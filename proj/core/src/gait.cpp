#include "harvest/gait.hpp"

#include <cmath>
#include <numbers>

namespace harvest {
namespace {

// Trapezoid: 20% rise, 60% hold, 20% fall of the loaded window.
constexpr double kRise = 0.2;
constexpr double kFallStart = 0.8;

}  // namespace

double gait_phase(const GaitProfile& profile, double t) noexcept {
    return std::fmod(t, profile.period());
}

double force_at(const GaitProfile& profile, double t) noexcept {
    const double period = profile.period();
    const double window = profile.duty * period;
    const double phase = gait_phase(profile, t);
    if (phase >= window) return 0.0;

    const double amplitude = profile.peak_force * profile.force_fraction;
    const double u = phase / window;
    switch (profile.shape) {
        case PulseShape::half_sine:
            return amplitude * std::sin(std::numbers::pi * u);
        case PulseShape::trapezoid:
            if (u < kRise) return amplitude * (u / kRise);
            if (u < kFallStart) return amplitude;
            return amplitude * ((1.0 - u) / (1.0 - kFallStart));
    }
    return 0.0;
}

double pulse_energy_bound(const GaitProfile& profile, double stroke) noexcept {
    return profile.peak_force * profile.force_fraction * stroke;
}

}  // namespace harvest
