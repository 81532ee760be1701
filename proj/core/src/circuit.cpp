#include "harvest/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace harvest {
namespace {

constexpr double kExponentClamp = 40.0;
constexpr double kResidualTol = 1e-9;  // A
constexpr int kMaxIterations = 100;
constexpr int kMaxHalvings = 40;

struct LoadEval {
    double current = 0.0;
    double conductance = 0.0;
};

LoadEval load_current(const Load& load, double v, double charge) noexcept {
    switch (load.kind) {
        case LoadKind::resistor:
            return {v / load.resistance, 1.0 / load.resistance};
        case LoadKind::battery: {
            const auto& b = load.battery;
            if (charge >= b.capacity || v <= b.nominal_voltage) return {};
            return {(v - b.nominal_voltage) / b.internal_resistance, 1.0 / b.internal_resistance};
        }
        case LoadKind::open:
            return {};
    }
    return {};
}

[[noreturn]] void newton_failure(double residual, int iterations) {
    std::ostringstream os;
    os.precision(6);
    os << "circuit Newton did not converge after " << iterations << " iterations (residual " << residual
       << " A); reduce sim.dt or check circuit parameters";
    throw SolverError(os.str(), 0.0);
}

// Solves C/dt (V - V0) + I_load(V) + (V - target) / r_series = 0 for V; r_series = inf drops
// the last term. Piecewise linear and monotone, so Newton terminates in a few iterations.
double solve_node(double c_dt, double v0, const Load& load, double charge, double target, double g_series,
                  int& iterations) {
    // Always take one step: on a linear segment it lands exactly, whatever the start residual.
    double v = v0;
    for (iterations = 0; iterations <= kMaxIterations; ++iterations) {
        const auto l = load_current(load, v, charge);
        const double r = c_dt * (v - v0) + l.current + g_series * (v - target);
        if (iterations > 0 && std::abs(r) < kResidualTol) return v;
        const double slope = c_dt + l.conductance + g_series;
        if (slope <= 0.0) return v;
        v -= r / slope;
    }
    const auto l = load_current(load, v, charge);
    newton_failure(std::abs(c_dt * (v - v0) + l.current + g_series * (v - target)), kMaxIterations);
}

struct Solution {
    double i = 0.0;  // coil current
    double v = 0.0;  // node voltage
    double j = 0.0;  // bridge output current
    double diode_power = 0.0;
    int iterations = 0;
};

Solution solve_constant_drop(const CircuitConfig& cfg, double r_total, double e_eff, double v0, double charge,
                             double c_dt) {
    const double drop = 2.0 * cfg.diode.forward_drop;
    Solution off;
    off.v = solve_node(c_dt, v0, cfg.load, charge, 0.0, 0.0, off.iterations);
    if (std::abs(e_eff) <= off.v + drop) return off;

    // Conducting through the pair matching the sign of the open-circuit bridge voltage:
    // j = (s*e_eff - V - 2Vf) / r_total.
    const double s = e_eff > 0.0 ? 1.0 : -1.0;
    Solution on;
    on.v = solve_node(c_dt, v0, cfg.load, charge, s * e_eff - drop, 1.0 / r_total, on.iterations);
    on.j = (s * e_eff - drop - on.v) / r_total;
    if (on.j < 0.0) return off;
    on.i = s * on.j;
    on.diode_power = drop * on.j;
    return on;
}

Solution solve_shockley(const CircuitConfig& cfg, double r_total, double e_eff, double v0, double i0,
                        double charge, double c_dt) {
    const auto& d = cfg.diode;

    struct Eval {
        double r1, r2, j11, j12, j21, j22, j_out;
    };
    auto eval = [&](double i, double v) {
        const double u = e_eff - r_total * i;
        const double p = 0.5 * (u - v);
        const double q = 0.5 * (-u - v);
        const double ip = diode_current(d, p);
        const double iq = diode_current(d, q);
        const double gp = diode_conductance(d, p);
        const double gq = diode_conductance(d, q);
        const auto l = load_current(cfg.load, v, charge);
        Eval e{};
        e.j_out = ip + iq;
        e.r1 = i - (ip - iq);
        e.r2 = c_dt * (v - v0) + l.current - e.j_out;
        e.j11 = 1.0 + 0.5 * r_total * (gp + gq);
        e.j12 = 0.5 * (gp - gq);
        e.j21 = 0.5 * r_total * (gp - gq);
        e.j22 = c_dt + l.conductance + 0.5 * (gp + gq);
        return e;
    };
    auto norm = [](const Eval& e) { return std::max(std::abs(e.r1), std::abs(e.r2)); };

    double i = i0;
    double v = v0;
    Eval cur = eval(i, v);
    int it = 0;
    for (; norm(cur) >= kResidualTol; ++it) {
        if (it >= kMaxIterations) newton_failure(norm(cur), it);
        const double det = cur.j11 * cur.j22 - cur.j12 * cur.j21;
        if (!(std::abs(det) > 0.0) || !std::isfinite(det)) newton_failure(norm(cur), it);
        const double di = (cur.r1 * cur.j22 - cur.r2 * cur.j12) / det;
        const double dv = (cur.j11 * cur.r2 - cur.j21 * cur.r1) / det;

        // Half the step while the residual grows.
        double scale = 1.0;
        Eval next = eval(i - di, v - dv);
        for (int h = 0; h < kMaxHalvings && !(norm(next) < norm(cur)); ++h) {
            scale *= 0.5;
            next = eval(i - scale * di, v - scale * dv);
        }
        i -= scale * di;
        v -= scale * dv;
        cur = next;
    }

    // One polishing step past the tolerance keeps small-signal steps energy-consistent.
    if (cur.r1 != 0.0 || cur.r2 != 0.0) {
        const double det = cur.j11 * cur.j22 - cur.j12 * cur.j21;
        const double pi = i - (cur.r1 * cur.j22 - cur.r2 * cur.j12) / det;
        const double pv = v - (cur.j11 * cur.r2 - cur.j21 * cur.r1) / det;
        const Eval polished = eval(pi, pv);
        if (norm(polished) < norm(cur)) {
            i = pi;
            v = pv;
            cur = polished;
        }
    }

    Solution s;
    s.i = i;
    s.v = v;
    s.j = cur.j_out;
    s.diode_power = (e_eff - r_total * i) * i - v * cur.j_out;
    s.iterations = it;
    return s;
}

}  // namespace

CircuitState initial_state(const CircuitConfig& cfg) {
    CircuitState s;
    s.cap_voltage = cfg.disconnected() ? 0.0 : cfg.cap_initial_voltage;
    if (cfg.load.kind == LoadKind::battery) s.battery_charge = cfg.load.battery.initial_charge;
    return s;
}

double diode_current(const DiodeModel& m, double v) noexcept {
    if (m.kind == DiodeKind::constant_drop) {
        return v <= m.forward_drop ? 0.0 : std::numeric_limits<double>::infinity();
    }
    const double arg = v / (m.ideality * m.thermal_voltage);
    if (arg <= kExponentClamp) return m.saturation_current * std::expm1(arg);
    return m.saturation_current * (std::exp(kExponentClamp) * (1.0 + (arg - kExponentClamp)) - 1.0);
}

double diode_conductance(const DiodeModel& m, double v) noexcept {
    if (m.kind == DiodeKind::constant_drop) {
        return v <= m.forward_drop ? 0.0 : std::numeric_limits<double>::infinity();
    }
    const double nvt = m.ideality * m.thermal_voltage;
    return m.saturation_current / nvt * std::exp(std::min(v / nvt, kExponentClamp));
}

StepResult solve_step(const CircuitConfig& cfg, double coil_R, double coil_L, double emf,
                      const CircuitState& state, double dt) {
    StepResult out;
    out.state = state;
    out.state.last_iterations = 0;
    if (cfg.disconnected()) {
        out.state.cap_voltage = 0.0;
        out.state.coil_current = 0.0;
        out.state.last_diode_losses = 0.0;
        out.state.last_load_power = 0.0;
        out.state.last_output_current = 0.0;
        return out;
    }

    const double c_dt = cfg.smoothing_cap / dt;
    const double i0 = state.coil_current;
    const double v0 = state.cap_voltage;
    const double r_total = coil_R + coil_L / dt;
    // Bridge input voltage is u = e_eff - r_total * i.
    const double e_eff = emf + coil_L * i0 / dt;

    const Solution sol = cfg.diode.kind == DiodeKind::shockley
                             ? solve_shockley(cfg, r_total, e_eff, v0, i0, state.battery_charge, c_dt)
                             : solve_constant_drop(cfg, r_total, e_eff, v0, state.battery_charge, c_dt);

    const auto load = load_current(cfg.load, sol.v, state.battery_charge);
    auto& s = out.state;
    s.coil_current = sol.i;
    // The exact solution is never negative; rounding can leave -1e-16.
    s.cap_voltage = std::max(sol.v, 0.0);
    s.last_output_current = sol.j;
    s.last_diode_losses = sol.diode_power;
    s.last_load_power = sol.v * load.current;
    s.last_iterations = sol.iterations;
    if (cfg.load.kind == LoadKind::battery) {
        s.battery_charge = battery_step(cfg.load.battery, state.battery_charge, load.current, dt);
    }

    auto& e = out.energy;
    e.source = emf * sol.i * dt;
    e.coil = coil_R * sol.i * sol.i * dt;
    e.inductor = 0.5 * coil_L * (sol.i * sol.i - i0 * i0);
    e.diode = sol.diode_power * dt;
    e.cap = 0.5 * cfg.smoothing_cap * (sol.v * sol.v - v0 * v0);
    e.load = s.last_load_power * dt;
    return out;
}

double ripple_estimate(double cap, double load_R, double dc, double period) noexcept {
    return dc * period / (load_R * cap);
}

double battery_step(const BatteryModel& model, double charge, double current_in, double dt) noexcept {
    return std::clamp(charge + current_in * dt, 0.0, model.capacity);
}

double battery_terminal_voltage(const BatteryModel& model, double current_in) noexcept {
    return model.nominal_voltage + current_in * model.internal_resistance;
}

}  // namespace harvest
