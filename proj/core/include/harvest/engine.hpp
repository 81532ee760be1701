#pragma once

// Co-simulation of the generator mechanics (fixed-step RK4) with the rectifier network
// (one implicit step per mechanical step), plus the energy ledger that audits it.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "harvest/circuit.hpp"
#include "harvest/generator.hpp"
#include "harvest/model.hpp"

namespace harvest {

/// Energy bookkeeping, J. Work terms are integrals over the run; stored terms (kinetic,
/// spring, latch_potential, cap_stored, inductor_stored) are net changes since t = 0.
struct EnergyLedger {
    double input_work = 0.0;            // ∫ f_ext v dt (pulse source: ∫ e i dt)
    double kinetic = 0.0;
    double spring = 0.0;
    double mech_dissipated = 0.0;       // ∫ c v² dt
    double electrical_extracted = 0.0;  // ∫ e i dt
    double coil_loss = 0.0;
    double diode_loss = 0.0;
    double cap_stored = 0.0;
    double load_delivered = 0.0;
    double stop_loss = 0.0;             // work absorbed by the end stops
    double latch_potential = 0.0;
    double inductor_stored = 0.0;

    /// |input - (kinetic + spring + mech + electrical + stop + latch)| / scale
    [[nodiscard]] double mechanical_residual() const noexcept;
    /// |electrical - (coil + diode + cap + inductor + load)| / scale
    [[nodiscard]] double electrical_residual() const noexcept;
    [[nodiscard]] double efficiency() const noexcept;

    EnergyLedger& operator-=(const EnergyLedger& other) noexcept;
    bool operator==(const EnergyLedger&) const = default;
};

struct SimResult {
    std::vector<double> time;
    std::vector<double> x;
    std::vector<double> v;
    std::vector<double> emf;
    std::vector<double> coil_current;
    std::vector<double> cap_voltage;
    std::vector<Stage> stage;

    EnergyLedger ledger;
    /// Ledger accumulated after RunOptions::measure_from.
    EnergyLedger window_ledger;
    double window_duration = 0.0;

    double peak_emf = 0.0;               // max |emf| over every integration step
    double dc_steady = 0.0;              // mean node voltage over the final 10% of the run
    std::optional<double> settle_time;   // from the recorded node voltage, 2% band
    double max_excursion = 0.0;          // max |x| over every integration step
    double peak_cap_voltage = 0.0;
    std::size_t steps = 0;

    [[nodiscard]] std::size_t size() const noexcept { return time.size(); }
    bool operator==(const SimResult&) const = default;
};

struct RunOptions {
    double measure_from = 0.0;   // start of window_ledger, s
    bool keep_series = true;
    double settle_band = 0.02;
};

inline constexpr double kSettleBand = 0.02;
inline constexpr double kSteadyFraction = 0.1;

/// Integrates from rest. Throws SolverError carrying the simulation time on failure.
[[nodiscard]] SimResult run(const SimConfig& cfg, const RunOptions& options = {});

/// Same network, but driven by an ideal rectangular pulse source (amplitude for `width`
/// seconds each gait period) in series with the coil resistance and inductance. The
/// mechanics are not integrated.
[[nodiscard]] SimResult run_pulse_source(const SimConfig& cfg, double amplitude, double width,
                                         const RunOptions& options = {});

/// Earliest time after which the series stays in [V∞(1-band), V∞(1+band)], with V∞ the mean
/// of the final 10% of samples. None if it never settles or V∞ <= 1e-9 V.
[[nodiscard]] std::optional<double> settle_time(std::span<const double> series, std::span<const double> times,
                                                double band = kSettleBand);

/// Mean of the final `fraction` of the samples.
[[nodiscard]] double tail_mean(std::span<const double> series, double fraction = kSteadyFraction);

struct BatchItem {
    std::optional<SimResult> result;
    std::string error;  // set when result is empty
};

/// Runs every config, concurrently when threads > 1; results are in input order.
[[nodiscard]] std::vector<BatchItem> run_batch(std::span<const SimConfig> configs, const RunOptions& options = {},
                                               unsigned threads = 0);

/// Writes `t,x,v,emf,i_coil,v_cap,stage` rows and a `<path>.summary` key=value sidecar.
/// Throws std::runtime_error on I/O failure.
void export_csv(const SimResult& result, const std::filesystem::path& path);

/// The key=value summary block (same text as the sidecar).
[[nodiscard]] std::string summary_text(const SimResult& result);

}  // namespace harvest
