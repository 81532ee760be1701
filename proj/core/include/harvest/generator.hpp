#pragma once

// Magnet-in-coil generator: lumped coaxial dipole flux model, Faraday EMF, bistable end
// magnets, spring, penalty end stops and the electromagnetic reaction force.
//
// Sign convention: x > 0 is toward the top end magnet; heel force pushes toward -x.
// EMF e = -dλ/dx * v, coil current i is positive in the direction of e, and the reaction
// force on the magnet is +dλ/dx * i, so e*i + F_reaction*v = 0.

#include "harvest/model.hpp"

namespace harvest {

struct MechState {
    double x = 0.0;  // m, magnet displacement from equilibrium
    double v = 0.0;  // m/s
};

enum class Stage { neutral, compression, induction, recovery };

[[nodiscard]] const char* to_string(Stage stage) noexcept;

inline constexpr double kDefaultStageThreshold = 1e-3;  // m/s
inline constexpr double kStopStiffnessRatio = 100.0;    // k_stop / spring_k

/// λ(x) = N μ0 m a² / (2 (a² + x²)^{3/2}), Wb-turns.
[[nodiscard]] double flux_linkage(const HarvesterDesign& design, double x) noexcept;
[[nodiscard]] double dflux_dx(const HarvesterDesign& design, double x) noexcept;
[[nodiscard]] double emf(const HarvesterDesign& design, double x, double v) noexcept;

/// Net coaxial dipole-dipole pull of the two fixed end magnets (positive = toward top).
/// The law 3 μ0 m1 m2 / (2π d⁴) uses d floored at end_gap - stroke_limit.
[[nodiscard]] double magnetic_latch_force(const HarvesterDesign& design, double x) noexcept;
/// Potential of magnetic_latch_force, with U(0) the reference: F = -dU/dx.
[[nodiscard]] double latch_potential(const HarvesterDesign& design, double x) noexcept;

[[nodiscard]] double stop_stiffness(const HarvesterDesign& design) noexcept;
[[nodiscard]] double stop_damping(const HarvesterDesign& design) noexcept;
/// Penalty contact force while |x| > stroke_limit; only ever pushes back into the stroke.
[[nodiscard]] double stop_force(const HarvesterDesign& design, double x, double v) noexcept;

[[nodiscard]] double reaction_force(const HarvesterDesign& design, double x, double coil_current) noexcept;

/// Every force on the magnet except the reaction term.
[[nodiscard]] double passive_force(const HarvesterDesign& design, MechState state, double f_ext) noexcept;

[[nodiscard]] double mech_acceleration(const HarvesterDesign& design, MechState state, double f_ext,
                                       double coil_current) noexcept;

/// Operating stage from gait force and magnet motion.
///  - foot loading and moving down (or held still): compression
///  - foot loading and rebounding fast: induction
///  - unloaded, fast, heading back to x = 0: recovery
///  - unloaded, fast, heading away: induction
///  - unloaded and slow: neutral
[[nodiscard]] Stage classify_stage(const GaitProfile& profile, double t, MechState state,
                                   double v_threshold = kDefaultStageThreshold) noexcept;

}  // namespace harvest
