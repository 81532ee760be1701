#include "harvest/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <thread>

#include "harvest/config.hpp"
#include "harvest/gait.hpp"

namespace harvest {
namespace {

double relative_residual(double lhs, std::initializer_list<double> rhs) noexcept {
    double sum = 0.0;
    double scale = std::abs(lhs);
    for (double r : rhs) {
        sum += r;
        scale = std::max(scale, std::abs(r));
    }
    if (scale < 1e-300) return 0.0;
    return std::abs(lhs - sum) / scale;
}

struct Recorder {
    SimResult& out;
    void push(double t, MechState s, double e, double i, double vc, Stage stage) {
        out.time.push_back(t);
        out.x.push_back(s.x);
        out.v.push_back(s.v);
        out.emf.push_back(e);
        out.coil_current.push_back(i);
        out.cap_voltage.push_back(vc);
        out.stage.push_back(stage);
    }
    void reserve(std::size_t n) {
        out.time.reserve(n);
        out.x.reserve(n);
        out.v.reserve(n);
        out.emf.reserve(n);
        out.coil_current.reserve(n);
        out.cap_voltage.reserve(n);
        out.stage.reserve(n);
    }
};

std::size_t step_count(const SimConfig& cfg) {
    return static_cast<std::size_t>(std::max(1.0, std::round(cfg.duration / cfg.dt)));
}

// Work integrals advanced alongside the mechanical state.
struct Works {
    double input = 0.0;
    double damping = 0.0;
    double stop = 0.0;
};

struct StoredTerms {
    double kinetic, spring, latch, cap, inductor;
};

StoredTerms stored_terms(const SimConfig& cfg, MechState s, const CircuitState& c, double v_cap0) {
    const auto& d = cfg.design;
    return {0.5 * d.moving_mass * s.v * s.v, 0.5 * d.spring_k * s.x * s.x, latch_potential(d, s.x),
            0.5 * cfg.circuit.smoothing_cap * (c.cap_voltage * c.cap_voltage - v_cap0 * v_cap0),
            0.5 * d.coil_inductance * c.coil_current * c.coil_current};
}

void fill_stored(EnergyLedger& l, const StoredTerms& st) {
    l.kinetic = st.kinetic;
    l.spring = st.spring;
    l.latch_potential = st.latch;
    l.cap_stored = st.cap;
    l.inductor_stored = st.inductor;
}

void finish(SimResult& out, const RunOptions& options, double v_sum, std::size_t v_count) {
    out.dc_steady = v_count > 0 ? v_sum / static_cast<double>(v_count) : 0.0;
    out.settle_time = settle_time(out.cap_voltage, out.time, options.settle_band);
    if (!options.keep_series) {
        out.time = {};
        out.x = {};
        out.v = {};
        out.emf = {};
        out.coil_current = {};
        out.cap_voltage = {};
        out.stage = {};
    }
}

StepResult circuit_step(const SimConfig& cfg, double e, const CircuitState& c, double t) {
    try {
        return solve_step(cfg.circuit, cfg.design.coil_resistance, cfg.design.coil_inductance, e, c, cfg.dt);
    } catch (const SolverError& err) {
        throw SolverError(std::string(err.what()) + " at t=" + format_double(t) + " s", t);
    }
}

}  // namespace

double EnergyLedger::mechanical_residual() const noexcept {
    return relative_residual(input_work, {kinetic, spring, mech_dissipated, electrical_extracted, stop_loss,
                                          latch_potential});
}

double EnergyLedger::electrical_residual() const noexcept {
    return relative_residual(electrical_extracted, {coil_loss, diode_loss, cap_stored, inductor_stored,
                                                    load_delivered});
}

double EnergyLedger::efficiency() const noexcept {
    return input_work > 0.0 ? load_delivered / input_work : 0.0;
}

EnergyLedger& EnergyLedger::operator-=(const EnergyLedger& o) noexcept {
    input_work -= o.input_work;
    kinetic -= o.kinetic;
    spring -= o.spring;
    mech_dissipated -= o.mech_dissipated;
    electrical_extracted -= o.electrical_extracted;
    coil_loss -= o.coil_loss;
    diode_loss -= o.diode_loss;
    cap_stored -= o.cap_stored;
    load_delivered -= o.load_delivered;
    stop_loss -= o.stop_loss;
    latch_potential -= o.latch_potential;
    inductor_stored -= o.inductor_stored;
    return *this;
}

SimResult run(const SimConfig& cfg, const RunOptions& options) {
    validate(cfg);
    const auto& d = cfg.design;
    const auto& gait = cfg.gait;
    const double dt = cfg.dt;
    const double m = d.moving_mass;
    const double coupling = cfg.coupling ? 1.0 : 0.0;
    const std::size_t n_steps = step_count(cfg);
    const std::size_t steady_from = static_cast<std::size_t>(std::ceil((1.0 - kSteadyFraction) * n_steps));

    SimResult out;
    Recorder rec{out};
    rec.reserve(n_steps / static_cast<std::size_t>(cfg.record_stride) + 1);

    MechState s;
    CircuitState c = initial_state(cfg.circuit);
    const double v_cap0 = c.cap_voltage;
    Works w;
    EnergyLedger sums;  // flow terms only
    EnergyLedger snapshot;
    bool snapshot_taken = false;
    double v_sum = 0.0;
    std::size_t v_count = 0;

    rec.push(0.0, s, 0.0, 0.0, c.cap_voltage, classify_stage(gait, 0.0, s));

    for (std::size_t n = 0; n < n_steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        if (!snapshot_taken && t >= options.measure_from) {
            snapshot = sums;
            snapshot.input_work = w.input;
            snapshot.mech_dissipated = w.damping;
            snapshot.stop_loss = w.stop;
            fill_stored(snapshot, stored_terms(cfg, s, c, v_cap0));
            out.window_duration = cfg.duration - t;
            snapshot_taken = true;
        }

        // Mid-step EMF from a first-order predictor using the previous coil current.
        const double f0 = -force_at(gait, t);
        const double passive0 = passive_force(d, s, f0);
        const double a_pred = (passive0 + coupling * reaction_force(d, s.x, c.coil_current)) / m;
        const double e_mid = emf(d, s.x + 0.5 * dt * s.v + 0.125 * dt * dt * a_pred, s.v + 0.5 * dt * a_pred);

        const StepResult step = circuit_step(cfg, e_mid, c, t);
        c = step.state;
        sums.electrical_extracted += step.energy.source;
        sums.coil_loss += step.energy.coil;
        sums.diode_loss += step.energy.diode;
        sums.load_delivered += step.energy.load;

        // RK4 with the coil current held over the step.
        const double i = coupling * c.coil_current;
        struct Deriv {
            double dx, dv, p_in, p_damp, p_stop;
        };
        auto deriv = [&](MechState st, double f, double passive) {
            const double a = (passive + reaction_force(d, st.x, i)) / m;
            return Deriv{st.v, a, f * st.v, d.mech_damping * st.v * st.v, -stop_force(d, st.x, st.v) * st.v};
        };
        auto deriv_at = [&](double tt, MechState st) {
            const double f = -force_at(gait, tt);
            return deriv(st, f, passive_force(d, st, f));
        };
        const Deriv k1 = deriv(s, f0, passive0);
        const Deriv k2 = deriv_at(t + 0.5 * dt, {s.x + 0.5 * dt * k1.dx, s.v + 0.5 * dt * k1.dv});
        const Deriv k3 = deriv_at(t + 0.5 * dt, {s.x + 0.5 * dt * k2.dx, s.v + 0.5 * dt * k2.dv});
        const Deriv k4 = deriv_at(t + dt, {s.x + dt * k3.dx, s.v + dt * k3.dv});
        const double h6 = dt / 6.0;
        s.x += h6 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
        s.v += h6 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
        w.input += h6 * (k1.p_in + 2.0 * k2.p_in + 2.0 * k3.p_in + k4.p_in);
        w.damping += h6 * (k1.p_damp + 2.0 * k2.p_damp + 2.0 * k3.p_damp + k4.p_damp);
        w.stop += h6 * (k1.p_stop + 2.0 * k2.p_stop + 2.0 * k3.p_stop + k4.p_stop);

        const double t1 = static_cast<double>(n + 1) * dt;
        if (!std::isfinite(s.x) || !std::isfinite(s.v)) {
            throw SolverError("non-finite mechanical state at t=" + format_double(t1) +
                                  " s; reduce sim.dt",
                              t1);
        }

        const double e_now = emf(d, s.x, s.v);
        out.peak_emf = std::max(out.peak_emf, std::abs(e_now));
        out.max_excursion = std::max(out.max_excursion, std::abs(s.x));
        out.peak_cap_voltage = std::max(out.peak_cap_voltage, c.cap_voltage);
        if (n + 1 >= steady_from) {
            v_sum += c.cap_voltage;
            ++v_count;
        }
        if ((n + 1) % static_cast<std::size_t>(cfg.record_stride) == 0) {
            rec.push(t1, s, e_now, c.coil_current, c.cap_voltage, classify_stage(gait, t1, s));
        }
    }

    out.steps = n_steps;
    out.ledger = sums;
    out.ledger.input_work = w.input;
    out.ledger.mech_dissipated = w.damping;
    out.ledger.stop_loss = w.stop;
    fill_stored(out.ledger, stored_terms(cfg, s, c, v_cap0));
    out.window_ledger = out.ledger;
    out.window_ledger -= snapshot;
    if (!snapshot_taken) out.window_duration = 0.0;

    finish(out, options, v_sum, v_count);
    return out;
}

SimResult run_pulse_source(const SimConfig& cfg, double amplitude, double width, const RunOptions& options) {
    validate(cfg);
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
        throw ConfigError("pulse amplitude: must be >= 0 (got " + format_double(amplitude) + ")");
    }
    if (!(width > 0.0 && width < cfg.gait.period())) {
        throw ConfigError("pulse width: must be in (0, 1/gait.cadence) (got " + format_double(width) + ")");
    }
    const auto& gait = cfg.gait;
    const double dt = cfg.dt;
    const std::size_t n_steps = step_count(cfg);
    const std::size_t steady_from = static_cast<std::size_t>(std::ceil((1.0 - kSteadyFraction) * n_steps));
    auto source = [&](double t) { return gait_phase(gait, t) < width ? amplitude : 0.0; };

    SimResult out;
    Recorder rec{out};
    rec.reserve(n_steps / static_cast<std::size_t>(cfg.record_stride) + 1);

    const MechState rest;
    CircuitState c = initial_state(cfg.circuit);
    const double v_cap0 = c.cap_voltage;
    EnergyLedger sums;
    EnergyLedger snapshot;
    bool snapshot_taken = false;
    double v_sum = 0.0;
    std::size_t v_count = 0;

    rec.push(0.0, rest, source(0.0), 0.0, c.cap_voltage, classify_stage(gait, 0.0, rest));
    out.peak_emf = source(0.0);

    for (std::size_t n = 0; n < n_steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        if (!snapshot_taken && t >= options.measure_from) {
            snapshot = sums;
            snapshot.input_work = sums.electrical_extracted;
            fill_stored(snapshot, stored_terms(cfg, rest, c, v_cap0));
            out.window_duration = cfg.duration - t;
            snapshot_taken = true;
        }

        const StepResult step = circuit_step(cfg, source(t + 0.5 * dt), c, t);
        c = step.state;
        sums.electrical_extracted += step.energy.source;
        sums.coil_loss += step.energy.coil;
        sums.diode_loss += step.energy.diode;
        sums.load_delivered += step.energy.load;

        const double t1 = static_cast<double>(n + 1) * dt;
        const double e_now = source(t1);
        out.peak_emf = std::max(out.peak_emf, e_now);
        out.peak_cap_voltage = std::max(out.peak_cap_voltage, c.cap_voltage);
        if (n + 1 >= steady_from) {
            v_sum += c.cap_voltage;
            ++v_count;
        }
        if ((n + 1) % static_cast<std::size_t>(cfg.record_stride) == 0) {
            rec.push(t1, rest, e_now, c.coil_current, c.cap_voltage, classify_stage(gait, t1, rest));
        }
    }

    out.steps = n_steps;
    out.ledger = sums;
    out.ledger.input_work = sums.electrical_extracted;
    fill_stored(out.ledger, stored_terms(cfg, rest, c, v_cap0));
    out.window_ledger = out.ledger;
    out.window_ledger -= snapshot;
    if (!snapshot_taken) out.window_duration = 0.0;

    finish(out, options, v_sum, v_count);
    return out;
}

double tail_mean(std::span<const double> series, double fraction) {
    if (series.empty()) return 0.0;
    const auto n = series.size();
    const auto start = std::min(n - 1, static_cast<std::size_t>(std::floor((1.0 - fraction) * n)));
    double sum = 0.0;
    for (auto k = start; k < n; ++k) sum += series[k];
    return sum / static_cast<double>(n - start);
}

std::optional<double> settle_time(std::span<const double> series, std::span<const double> times, double band) {
    if (series.empty() || series.size() != times.size()) return std::nullopt;
    const double final_value = tail_mean(series, kSteadyFraction);
    if (!(final_value > 1e-9)) return std::nullopt;
    const double lo = final_value * (1.0 - band);
    const double hi = final_value * (1.0 + band);
    for (std::size_t k = series.size(); k-- > 0;) {
        if (series[k] < lo || series[k] > hi) {
            if (k + 1 == series.size()) return std::nullopt;
            return times[k + 1];
        }
    }
    return times.front();
}

std::vector<BatchItem> run_batch(std::span<const SimConfig> configs, const RunOptions& options, unsigned threads) {
    std::vector<BatchItem> out(configs.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, configs.size())));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < configs.size(); k = next++) {
            try {
                out[k].result = run(configs[k], options);
            } catch (const std::exception& e) {
                out[k].error = e.what();
            }
        }
    };
    if (threads == 1) {
        worker();
        return out;
    }
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    }
    return out;
}

std::string summary_text(const SimResult& r) {
    std::string out;
    auto put = [&out](std::string_view key, double value) {
        out += key;
        out += '=';
        out += format_double(value);
        out += '\n';
    };
    put("peak_emf", r.peak_emf);
    put("dc_steady", r.dc_steady);
    out += "settle_time=";
    out += r.settle_time ? format_double(*r.settle_time) : std::string("none");
    out += '\n';
    const auto& l = r.ledger;
    put("input_work", l.input_work);
    put("load_delivered", l.load_delivered);
    put("efficiency", l.efficiency());
    put("kinetic", l.kinetic);
    put("spring", l.spring);
    put("mech_dissipated", l.mech_dissipated);
    put("electrical_extracted", l.electrical_extracted);
    put("coil_loss", l.coil_loss);
    put("diode_loss", l.diode_loss);
    put("cap_stored", l.cap_stored);
    put("stop_loss", l.stop_loss);
    put("latch_potential", l.latch_potential);
    put("inductor_stored", l.inductor_stored);
    put("max_excursion", r.max_excursion);
    put("peak_cap_voltage", r.peak_cap_voltage);
    put("mechanical_residual", l.mechanical_residual());
    put("electrical_residual", l.electrical_residual());
    return out;
}

void export_csv(const SimResult& r, const std::filesystem::path& path) {
    std::string text = "t,x,v,emf,i_coil,v_cap,stage\n";
    for (std::size_t k = 0; k < r.size(); ++k) {
        for (double value : {r.time[k], r.x[k], r.v[k], r.emf[k], r.coil_current[k], r.cap_voltage[k]}) {
            text += format_double(value);
            text += ',';
        }
        text += to_string(r.stage[k]);
        text += '\n';
    }
    auto write = [](const std::filesystem::path& p, const std::string& body) {
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open '" + p.string() + "' for writing");
        f << body;
        if (!f) throw std::runtime_error("write failed for '" + p.string() + "'");
    };
    write(path, text);
    auto sidecar = path;
    sidecar += ".summary";
    write(sidecar, summary_text(r));
}

}  // namespace harvest
