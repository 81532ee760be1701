#include "harvest/model.hpp"

#include <cmath>
#include <sstream>

namespace harvest {
namespace {

[[noreturn]] void fail(const char* key, const char* constraint, double got) {
    std::ostringstream os;
    os.precision(17);
    os << key << ": must be " << constraint << " (got " << got << ")";
    throw ConfigError(os.str());
}

void require_finite(const char* key, double value) {
    if (!std::isfinite(value)) fail(key, "finite", value);
}

void positive(const char* key, double value) {
    require_finite(key, value);
    if (!(value > 0.0)) fail(key, "> 0", value);
}

void nonnegative(const char* key, double value) {
    require_finite(key, value);
    if (!(value >= 0.0)) fail(key, ">= 0", value);
}

}  // namespace

SimConfig reference_design() { return SimConfig{}; }

void validate(const HarvesterDesign& d) {
    positive("design.moving_mass", d.moving_mass);
    positive("design.spring_k", d.spring_k);
    nonnegative("design.mech_damping", d.mech_damping);
    positive("design.stroke_limit", d.stroke_limit);
    positive("design.coil_turns", d.coil_turns);
    positive("design.coil_radius", d.coil_radius);
    positive("design.coil_resistance", d.coil_resistance);
    nonnegative("design.coil_inductance", d.coil_inductance);
    nonnegative("design.magnet_moment", d.magnet_moment);
    nonnegative("design.end_magnet_moment", d.end_magnet_moment);
    positive("design.end_gap", d.end_gap);
    if (!(d.stroke_limit < d.end_gap)) {
        fail("design.stroke_limit", "< design.end_gap", d.stroke_limit);
    }
}

void validate(const GaitProfile& g) {
    positive("gait.cadence", g.cadence);
    nonnegative("gait.peak_force", g.peak_force);
    require_finite("gait.duty", g.duty);
    if (!(g.duty > 0.0 && g.duty < 1.0)) fail("gait.duty", "in (0, 1)", g.duty);
    require_finite("gait.force_fraction", g.force_fraction);
    if (!(g.force_fraction > 0.0 && g.force_fraction <= 1.0)) {
        fail("gait.force_fraction", "in (0, 1]", g.force_fraction);
    }
}

void validate(const DiodeModel& m) {
    nonnegative("circuit.diode.forward_drop", m.forward_drop);
    positive("circuit.diode.saturation_current", m.saturation_current);
    require_finite("circuit.diode.ideality", m.ideality);
    if (!(m.ideality >= 1.0 && m.ideality <= 2.0)) {
        fail("circuit.diode.ideality", "in [1, 2]", m.ideality);
    }
    positive("circuit.diode.thermal_voltage", m.thermal_voltage);
}

void validate(const BatteryModel& b) {
    positive("circuit.battery.nominal_voltage", b.nominal_voltage);
    positive("circuit.battery.internal_resistance", b.internal_resistance);
    positive("circuit.battery.capacity", b.capacity);
    nonnegative("circuit.battery.initial_charge", b.initial_charge);
    if (!(b.initial_charge <= b.capacity)) {
        fail("circuit.battery.initial_charge", "<= circuit.battery.capacity", b.initial_charge);
    }
}

void validate(const CircuitConfig& c) {
    validate(c.diode);
    nonnegative("circuit.smoothing_cap", c.smoothing_cap);
    nonnegative("circuit.cap_initial_voltage", c.cap_initial_voltage);
    switch (c.load.kind) {
        case LoadKind::resistor:
            positive("circuit.load_resistance", c.load.resistance);
            break;
        case LoadKind::battery:
            validate(c.load.battery);
            // A battery straight across the bridge output leaves the node voltage undefined
            // while the bridge blocks.
            positive("circuit.smoothing_cap", c.smoothing_cap);
            break;
        case LoadKind::open:
            break;
    }
}

void validate(const SimConfig& cfg) {
    validate(cfg.design);
    validate(cfg.gait);
    validate(cfg.circuit);
    positive("sim.dt", cfg.dt);
    require_finite("sim.duration", cfg.duration);
    if (!(cfg.duration >= cfg.dt)) fail("sim.duration", ">= sim.dt", cfg.duration);
    if (!(cfg.dt <= 0.1 / cfg.gait.cadence)) fail("sim.dt", "<= 0.1 / gait.cadence", cfg.dt);
    if (cfg.record_stride < 1) fail("sim.record_stride", ">= 1", cfg.record_stride);
}

const char* to_string(PulseShape shape) noexcept {
    return shape == PulseShape::half_sine ? "half_sine" : "trapezoid";
}

const char* to_string(DiodeKind kind) noexcept {
    return kind == DiodeKind::shockley ? "shockley" : "constant_drop";
}

const char* to_string(LoadKind kind) noexcept {
    switch (kind) {
        case LoadKind::resistor: return "resistor";
        case LoadKind::battery: return "battery";
        case LoadKind::open: return "open";
    }
    return "open";
}

}  // namespace harvest
