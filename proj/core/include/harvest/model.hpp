#pragma once

// Domain types shared by every module. All quantities are SI.

#include <stdexcept>
#include <string>

namespace harvest {

/// Raised for malformed config text and for values that break an invariant.
/// The message always names the offending key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a simulation cannot advance (Newton failure, non-finite state).
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double time)
        : std::runtime_error(what), time_(time) {}
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

inline constexpr double kMu0 = 1.25663706212e-6;  // vacuum permeability, H/m

// -----------------------------------------------------------------------------
// Generator
// -----------------------------------------------------------------------------

struct HarvesterDesign {
    double moving_mass = 0.02;        // kg
    double spring_k = 2000.0;         // N/m
    double mech_damping = 0.05;       // N*s/m
    double stroke_limit = 0.005;      // m
    double coil_turns = 1000.0;
    double coil_radius = 0.008;       // m
    double coil_resistance = 50.0;    // ohm
    double coil_inductance = 0.0;     // H
    double magnet_moment = 2.086;     // A*m^2
    double end_magnet_moment = 0.0;   // A*m^2, 0 disables the latch
    double end_gap = 0.008;           // m

    bool operator==(const HarvesterDesign&) const = default;
};

// -----------------------------------------------------------------------------
// Gait
// -----------------------------------------------------------------------------

enum class PulseShape { half_sine, trapezoid };

struct GaitProfile {
    double cadence = 1.0;             // steps/s
    double peak_force = 700.0;        // N, heel force
    double duty = 0.1;                // loaded fraction of each period
    PulseShape shape = PulseShape::trapezoid;
    double force_fraction = 0.02;     // share of heel force reaching the generator

    [[nodiscard]] double period() const noexcept { return 1.0 / cadence; }
    bool operator==(const GaitProfile&) const = default;
};

// -----------------------------------------------------------------------------
// Circuit
// -----------------------------------------------------------------------------

enum class DiodeKind { constant_drop, shockley };

/// Defaults are representative of a small 3 A Schottky rectifier.
/// forward_drop = 0 turns constant_drop into an ideal switch.
struct DiodeModel {
    DiodeKind kind = DiodeKind::constant_drop;
    double forward_drop = 0.45;          // V
    double saturation_current = 1e-6;    // A
    double ideality = 1.05;
    double thermal_voltage = 0.02585;    // V

    bool operator==(const DiodeModel&) const = default;
};

/// Li-ion coin cell, coulomb counted. Charges only.
struct BatteryModel {
    double nominal_voltage = 3.7;        // V
    double internal_resistance = 10.0;   // ohm
    double capacity = 144.0;             // C (40 mAh)
    double initial_charge = 72.0;        // C

    bool operator==(const BatteryModel&) const = default;
};

enum class LoadKind { resistor, battery, open };

struct Load {
    LoadKind kind = LoadKind::resistor;
    double resistance = 170e3;           // ohm, used when kind == resistor
    BatteryModel battery;                // used when kind == battery

    bool operator==(const Load&) const = default;
};

struct CircuitConfig {
    DiodeModel diode;
    double smoothing_cap = 470e-6;       // F
    Load load;
    double cap_initial_voltage = 0.0;    // V

    /// No capacitor and no load: the bridge has no return path, so no current flows.
    [[nodiscard]] bool disconnected() const noexcept {
        return smoothing_cap == 0.0 && load.kind == LoadKind::open;
    }
    bool operator==(const CircuitConfig&) const = default;
};

// -----------------------------------------------------------------------------
// Simulation
// -----------------------------------------------------------------------------

struct SimConfig {
    double dt = 1e-5;                    // s
    double duration = 10.0;              // s
    int record_stride = 100;             // integration steps per recorded sample
    bool coupling = true;                // apply the generator reaction force to the mechanics
    HarvesterDesign design;
    GaitProfile gait;
    CircuitConfig circuit;

    bool operator==(const SimConfig&) const = default;
};

/// Deterministic default configuration used by tests, docs and the CLI.
[[nodiscard]] SimConfig reference_design();

/// Throws ConfigError naming the first key whose constraint fails.
void validate(const HarvesterDesign& design);
void validate(const GaitProfile& gait);
void validate(const DiodeModel& diode);
void validate(const BatteryModel& battery);
void validate(const CircuitConfig& circuit);
void validate(const SimConfig& cfg);

[[nodiscard]] const char* to_string(PulseShape shape) noexcept;
[[nodiscard]] const char* to_string(DiodeKind kind) noexcept;
[[nodiscard]] const char* to_string(LoadKind kind) noexcept;

}  // namespace harvest
