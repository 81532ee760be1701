#pragma once

#include "harvest/model.hpp"

namespace harvest {

/// Phase of t within the gait period, t mod (1/cadence), in [0, period).
[[nodiscard]] double gait_phase(const GaitProfile& profile, double t) noexcept;

/// Heel force reaching the generator at time t >= 0, N. Nonnegative; the engine applies it
/// in the compressive (-x) direction.
[[nodiscard]] double force_at(const GaitProfile& profile, double t) noexcept;

/// peak_force * force_fraction * stroke: upper bound on mechanical work per step, J.
[[nodiscard]] double pulse_energy_bound(const GaitProfile& profile, double stroke) noexcept;

}  // namespace harvest
