#pragma once

// Rectification network, one backward-Euler step at a time:
//
//   emf --[coil_R]--[coil_L]--+--|>|--+--------+--------+
//                             |  full | smoothing C    load (R | battery | open)
//                             +-bridge+--------+--------+
//
// The bridge is reduced to two series diode pairs, one per polarity, with the pair sharing
// its voltage equally. Bridge output current j >= 0 charges the smoothing node.

#include "harvest/model.hpp"

namespace harvest {

struct CircuitState {
    double cap_voltage = 0.0;        // V
    double coil_current = 0.0;       // A, positive in the direction of the EMF
    double battery_charge = 0.0;     // C
    double last_diode_losses = 0.0;  // W, averaged over the last step
    double last_load_power = 0.0;    // W
    double last_output_current = 0.0;  // A, bridge output into the smoothing node
    int last_iterations = 0;
};

/// Energy moved during one step, J. source = coil + inductor + diode + cap + load up to the
/// Newton residual and the backward-Euler terms ½C·ΔV² and ½L·Δi².
struct StepEnergy {
    double source = 0.0;     // emf * i * dt
    double coil = 0.0;       // i² R dt
    double inductor = 0.0;   // Δ(½ L i²)
    double diode = 0.0;
    double cap = 0.0;        // Δ(½ C V²)
    double load = 0.0;
};

struct StepResult {
    CircuitState state;
    StepEnergy energy;
};

[[nodiscard]] CircuitState initial_state(const CircuitConfig& cfg);

/// Shockley law; the exponent is clamped at 40 and continued linearly past the clamp so the
/// curve stays monotone and differentiable. For constant_drop this returns 0 below
/// forward_drop; conduction above it is resolved inside solve_step.
[[nodiscard]] double diode_current(const DiodeModel& model, double v) noexcept;
[[nodiscard]] double diode_conductance(const DiodeModel& model, double v) noexcept;

/// Advances the network by dt. Throws SolverError (time 0) if Newton does not reach the
/// 1e-9 A residual in 100 iterations.
[[nodiscard]] StepResult solve_step(const CircuitConfig& cfg, double coil_R, double coil_L, double emf,
                                    const CircuitState& state, double dt);

/// First-order capacitor-input filter ripple, V: dc * period / (load_R * cap).
[[nodiscard]] double ripple_estimate(double cap, double load_R, double dc, double period) noexcept;

/// Coulomb counting: clamp(charge + current_in * dt, 0, capacity).
[[nodiscard]] double battery_step(const BatteryModel& model, double charge, double current_in, double dt) noexcept;
[[nodiscard]] double battery_terminal_voltage(const BatteryModel& model, double current_in) noexcept;

}  // namespace harvest
