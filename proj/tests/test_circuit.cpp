#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "harvest/circuit.hpp"

using namespace harvest;

namespace {
DiodeModel shockley() {
    DiodeModel d;
    d.kind = DiodeKind::shockley;
    d.saturation_current = 1e-6;
    d.ideality = 1.05;
    d.thermal_voltage = 0.02585;
    return d;
}

CircuitConfig ideal_resistive(double r_load) {
    CircuitConfig c;
    c.diode.forward_drop = 0.0;
    c.smoothing_cap = 0.0;
    c.load.kind = LoadKind::resistor;
    c.load.resistance = r_load;
    return c;
}
}  // namespace

TEST_CASE("shockley closed form") {
    const DiodeModel d = shockley();
    CHECK(diode_current(d, 0.0) == 0.0);
    const double expected = 1e-6 * (std::exp(0.3 / (1.05 * 0.02585)) - 1.0);
    CHECK(diode_current(d, 0.3) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(diode_current(d, 0.3) == doctest::Approx(0.0633).epsilon(5e-3));
    CHECK(diode_current(d, -1.0) == doctest::Approx(-1e-6).epsilon(1e-9));
}

TEST_CASE("diode current is nondecreasing and finite past the clamp") {
    const DiodeModel d = shockley();
    double prev = diode_current(d, -5.0);
    for (int k = 1; k <= 10000; ++k) {
        const double v = -5.0 + 10.0 * k / 10000;
        const double i = diode_current(d, v);
        CHECK(std::isfinite(i));
        CHECK(i >= prev);
        CHECK(diode_conductance(d, v) > 0.0);
        prev = i;
    }
}

TEST_CASE("constant drop diode conducts only above the drop") {
    DiodeModel d;
    CHECK(diode_current(d, 0.44) == 0.0);
    CHECK(diode_current(d, -3.0) == 0.0);
}

TEST_CASE("two-drop open-load asymptote") {
    CircuitConfig c;
    c.smoothing_cap = 1e-3;
    c.load.kind = LoadKind::open;
    CircuitState s = initial_state(c);
    for (int k = 0; k < 40000; ++k) s = solve_step(c, 50.0, 0.0, 10.0, s, 1e-4).state;
    CHECK(s.cap_voltage == doctest::Approx(9.1).epsilon(1e-9));
    CHECK(std::abs(s.coil_current) < 1e-9);
}

TEST_CASE("below the bridge threshold nothing flows") {
    CircuitConfig c;
    CircuitState s = initial_state(c);
    for (int k = 0; k < 100; ++k) s = solve_step(c, 50.0, 0.0, 0.5, s, 1e-5).state;
    CHECK(s.coil_current == 0.0);
    CHECK(s.cap_voltage == 0.0);
}

TEST_CASE("ideal full-wave rectifier tracks the resistive divider") {
    const double r_load = 1e5;
    const double r_coil = 50.0;
    const CircuitConfig c = ideal_resistive(r_load);
    CircuitState s = initial_state(c);
    const double dt = 1e-5;
    double worst = 0.0;
    for (int k = 1; k <= 100000; ++k) {
        const double e = 10.0 * std::sin(2 * std::numbers::pi * k * dt);
        s = solve_step(c, r_coil, 0.0, e, s, dt).state;
        worst = std::max(worst, std::abs(s.cap_voltage - std::abs(e) * r_load / (r_load + r_coil)));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("open load with a blocking bridge holds the capacitor bit for bit") {
    CircuitConfig c;
    c.load.kind = LoadKind::open;
    c.cap_initial_voltage = 4.2;
    CircuitState s = initial_state(c);
    for (int k = 0; k < 1000; ++k) {
        const double before = s.cap_voltage;
        s = solve_step(c, 50.0, 0.0, 3.0 * std::sin(k * 0.01), s, 1e-5).state;
        CHECK(s.cap_voltage == before);
    }
}

TEST_CASE("resistor load with a blocking bridge decays as the exact backward-Euler RC step") {
    CircuitConfig c;
    c.cap_initial_voltage = 5.0;
    CircuitState s = initial_state(c);
    const double dt = 1e-3;
    const double factor = (c.smoothing_cap / dt) / (c.smoothing_cap / dt + 1.0 / c.load.resistance);
    double expected = 5.0;
    for (int k = 0; k < 1000; ++k) {
        s = solve_step(c, 50.0, 0.0, 0.0, s, dt).state;
        expected *= factor;
        CHECK(s.cap_voltage == doctest::Approx(expected).epsilon(1e-12));
    }
}

namespace {
// Energy the backward-Euler step dissipates numerically: ½C·ΔV² + ½L·Δi².
double euler_dissipation(const CircuitConfig& c, double inductance, const CircuitState& a, const CircuitState& b) {
    const double dv = b.cap_voltage - a.cap_voltage;
    const double di = b.coil_current - a.coil_current;
    return 0.5 * c.smoothing_cap * dv * dv + 0.5 * inductance * di * di;
}
}  // namespace

TEST_CASE("per-step energy audit") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int audited = 0;
    for (int trial = 0; trial < 40; ++trial) {
        CircuitConfig c;
        c.diode = trial % 2 ? shockley() : DiodeModel{};
        c.smoothing_cap = 1e-5 + u(rng) * 1e-3;
        c.load.kind = trial % 3 == 0 ? LoadKind::battery : trial % 3 == 1 ? LoadKind::resistor : LoadKind::open;
        c.load.resistance = 100 + u(rng) * 2e5;
        c.cap_initial_voltage = u(rng) * 5;
        const double inductance = trial % 4 == 0 ? u(rng) * 1e-3 : 0.0;
        CircuitState s = initial_state(c);
        for (int k = 0; k < 2000; ++k) {
            const double e = 12.0 * std::sin(2 * std::numbers::pi * 50 * k * 1e-5 + trial);
            const StepResult r = solve_step(c, 50.0, inductance, e, s, 1e-5);
            const auto& en = r.energy;
            const double parts = en.coil + en.inductor + en.diode + en.cap + en.load + euler_dissipation(c, inductance, s, r.state);
            const double scale =
                std::max({std::abs(en.source), en.coil, std::abs(en.inductor), en.diode, std::abs(en.cap), en.load});
            if (scale > 0.0) {
                CHECK(std::abs(en.source - parts) <= 1e-6 * scale);
                ++audited;
            }
            s = r.state;
        }
    }
    CHECK(audited > 10000);
}

TEST_CASE("without the Euler term the audit residual is first order in dt") {
    const auto worst_residual = [](double dt) {
        CircuitConfig c;
        CircuitState s = initial_state(c);
        double worst = 0.0;
        const int n = static_cast<int>(std::lround(0.02 / dt));
        for (int k = 0; k < n; ++k) {
            const double e = 10.0 * std::sin(2 * std::numbers::pi * 50 * k * dt);
            const StepResult r = solve_step(c, 50.0, 0.0, e, s, dt);
            const auto& en = r.energy;
            if (en.source > 0.0) {
                const double parts = en.coil + en.diode + en.cap + en.load;
                worst = std::max(worst, std::abs(en.source - parts) / en.source);
            }
            s = r.state;
        }
        return worst;
    };
    const double coarse = worst_residual(1e-5);
    const double fine = worst_residual(5e-6);
    CHECK(coarse < 1e-3);
    CHECK(fine / coarse == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("capacitor voltage never goes negative") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 8.0);
    for (int trial = 0; trial < 20; ++trial) {
        CircuitConfig c;
        if (trial % 2) c.diode = shockley();
        c.smoothing_cap = trial % 5 == 0 ? 0.0 : 1e-5 * (1 + trial);
        c.load.kind = trial % 3 == 0 ? LoadKind::open : LoadKind::resistor;
        c.load.resistance = 1e3 * (1 + trial);
        if (c.disconnected()) c.load.kind = LoadKind::resistor;
        CircuitState s = initial_state(c);
        for (int k = 0; k < 5000; ++k) {
            s = solve_step(c, 50.0, 0.0, noise(rng), s, 1e-5).state;
            REQUIRE(s.cap_voltage >= 0.0);
        }
    }
}

TEST_CASE("coil inductance gives the series RL rise") {
    CircuitConfig c = ideal_resistive(950.0);
    const double l = 0.1;
    const double r = 1000.0;
    const double dt = 1e-7;
    CircuitState s = initial_state(c);
    double inductor_energy = 0.0;
    for (int k = 1; k <= 3000; ++k) {
        const StepResult res = solve_step(c, 50.0, l, 10.0, s, dt);
        inductor_energy += res.energy.inductor;
        s = res.state;
        const double exact = 10.0 / r * (1.0 - std::exp(-k * dt * r / l));
        CHECK(s.coil_current == doctest::Approx(exact).epsilon(1e-3));
    }
    CHECK(inductor_energy == doctest::Approx(0.5 * l * s.coil_current * s.coil_current).epsilon(1e-9));
}

TEST_CASE("disconnected network carries no current") {
    CircuitConfig c;
    c.smoothing_cap = 0.0;
    c.load.kind = LoadKind::open;
    const StepResult r = solve_step(c, 50.0, 0.0, 10.0, initial_state(c), 1e-5);
    CHECK(r.state.coil_current == 0.0);
    CHECK(r.state.cap_voltage == 0.0);
    CHECK(r.energy.source == 0.0);
}

TEST_CASE("battery coulomb counting") {
    const BatteryModel b;
    double q = 10.0;
    for (int k = 0; k < 10000; ++k) q = battery_step(b, q, 0.01, 0.01);
    CHECK(q - 10.0 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(battery_step(b, b.capacity, 0.5, 1.0) == b.capacity);
    CHECK(battery_step(b, 12.5, 0.0, 1.0) == 12.5);
    CHECK(battery_terminal_voltage(b, 0.01) == doctest::Approx(3.7 + 0.1));
}

TEST_CASE("battery load charges from a precharged capacitor and stops at nominal voltage") {
    CircuitConfig c;
    c.load.kind = LoadKind::battery;
    c.cap_initial_voltage = 5.0;
    CircuitState s = initial_state(c);
    const double q0 = s.battery_charge;
    const double dt = 1e-4;
    for (int k = 0; k < 200000; ++k) s = solve_step(c, 50.0, 0.0, 0.0, s, dt).state;
    CHECK(s.cap_voltage == doctest::Approx(3.7).epsilon(1e-6));
    // Charge moved equals the capacitor charge released.
    CHECK(s.battery_charge - q0 == doctest::Approx(c.smoothing_cap * (5.0 - 3.7)).epsilon(1e-6));
}

TEST_CASE("ripple estimate") {
    CHECK(ripple_estimate(470e-6, 170e3, 4.0, 1.0) == doctest::Approx(0.0501).epsilon(1e-3));
    CHECK(ripple_estimate(470e-6, 170e3, 4.0, 1e-12) < 1e-12);
}
