#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <optional>
#include <ostream>

#include "harvest/config.hpp"
#include "harvest/engine.hpp"
#include "harvest/optimize.hpp"

namespace harvest::cli {
namespace {

struct RuntimeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

SimConfig load_with_overrides(const std::string& path, const std::vector<std::string>& overrides) {
    SimConfig cfg = path.empty() ? reference_design() : load_config(path);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_setting(cfg, trim(std::string_view(kv).substr(0, eq)), std::string_view(kv).substr(eq + 1));
    }
    validate(cfg);
    return cfg;
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw RuntimeFailure("cannot open '" + path + "' for writing");
    f << body;
    if (!f) throw RuntimeFailure("write failed for '" + path + "'");
}

void emit_result(const SimResult& r, const std::string& out_path, std::ostream& out) {
    if (!out_path.empty()) {
        try {
            export_csv(r, out_path);
        } catch (const std::exception& e) {
            throw RuntimeFailure(e.what());
        }
    }
    out << summary_text(r);
}

std::string report_text(const OptimizationProblem& p, const OptimizationReport& grid, const OptimizationReport& nm,
                        const Evaluation& final_eval) {
    std::string s;
    auto put = [&s](const std::string& key, const std::string& value) { s += key + "=" + value + "\n"; };
    put("objective", to_string(p.objective));
    for (std::size_t k = 0; k < p.variables.size(); ++k) {
        put("best." + p.variables[k].path, format_double(nm.best_point[k]));
    }
    put("best_value", format_double(nm.best_value));
    put("grid_best_value", format_double(grid.best_value));
    put("final_objective", format_double(final_eval.objective));
    put("final_value", format_double(final_eval.value));
    put("evaluations", std::to_string(grid.evaluations + nm.evaluations));
    for (std::size_t k = 0; k < p.constraints.size() && k < nm.constraint_slack.size(); ++k) {
        put(std::string("slack.") + to_string(p.constraints[k].metric), format_double(nm.constraint_slack[k]));
    }
    put("failures", std::to_string(grid.failures.size() + nm.failures.size()));
    return s;
}

std::string trace_text(const OptimizationProblem& p, const OptimizationReport& grid, const OptimizationReport& nm) {
    std::string s = "phase,index";
    for (const auto& v : p.variables) s += "," + v.path;
    s += ",value\n";
    auto rows = [&](const char* phase, const OptimizationReport& r) {
        for (std::size_t k = 0; k < r.trace.size(); ++k) {
            s += phase;
            s += "," + std::to_string(k);
            for (double x : r.trace[k].point) s += "," + format_double(x);
            s += "," + format_double(r.trace[k].value) + "\n";
        }
    };
    rows("grid", grid);
    rows("nelder_mead", nm);
    return s;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Shoe-embedded electromagnetic harvester simulator and design optimizer", "harvest"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::vector<std::string> overrides;
    auto common = [&](CLI::App* sub, bool need_out) {
        sub->add_option("--config", config_path, "Config file (defaults to the reference design)");
        auto* o = sub->add_option("--out", out_path, "Output file");
        if (need_out) o->required();
        sub->add_option("--set", overrides, "Override a config key, key=value (repeatable)");
    };

    auto* simulate = app.add_subcommand("simulate", "Run the generator + rectifier co-simulation");
    common(simulate, false);

    double amplitude = 0.0;
    double width = kDefaultPulseWidth;
    double duration = kDefaultPulseDuration;
    auto* pulse = app.add_subcommand("pulse-source", "Drive the rectifier with an ideal pulsed voltage source");
    pulse->add_option("--amplitude", amplitude, "Pulse amplitude, V")->required();
    pulse->add_option("--width", width, "Pulse width, s")->capture_default_str();
    pulse->add_option("--duration", duration, "Simulated time, s (overrides sim.duration)")->capture_default_str();
    common(pulse, false);

    std::string variable;
    double lo = 0.0;
    double hi = 0.0;
    int steps = 0;
    auto* sweep = app.add_subcommand("sweep", "Evaluate evenly spaced values of one parameter");
    sweep->add_option("--variable", variable, "Dotted parameter path")->required();
    sweep->add_option("--lo", lo, "Lower value")->required();
    sweep->add_option("--hi", hi, "Upper value")->required();
    sweep->add_option("--steps", steps, "Number of values (>= 2)")->required();
    common(sweep, true);

    auto* optimize = app.add_subcommand("optimize", "Grid search followed by Nelder-Mead over optimize.* keys");
    common(optimize, false);

    double target = 0.0;
    std::string cal_variable = "design.magnet_moment";
    double cal_lo = 0.01;
    double cal_hi = 5.0;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Bisect a parameter to hit a target open-circuit peak EMF");
    calibrate_cmd->add_option("--target", target, "Target peak EMF, V")->required();
    calibrate_cmd->add_option("--variable", cal_variable, "Parameter to bisect")->capture_default_str();
    calibrate_cmd->add_option("--lo", cal_lo, "Lower bound")->capture_default_str();
    calibrate_cmd->add_option("--hi", cal_hi, "Upper bound")->capture_default_str();
    common(calibrate_cmd, false);

    std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (simulate->parsed()) {
            emit_result(run(load_with_overrides(config_path, overrides)), out_path, out);
        } else if (pulse->parsed()) {
            SimConfig cfg = load_with_overrides(config_path, overrides);
            cfg.duration = duration;
            validate(cfg);
            emit_result(run_pulse_source(cfg, amplitude, width), out_path, out);
        } else if (sweep->parsed()) {
            SimConfig base = load_with_overrides(config_path, overrides);
            if (steps < 2) throw ConfigError("--steps: must be >= 2");
            if (!(lo < hi)) throw ConfigError("--lo must be < --hi");
            if (!is_numeric_parameter(variable)) throw ConfigError("unknown numeric parameter '" + variable + "'");
            std::vector<SimConfig> cfgs;
            std::vector<double> values;
            for (int k = 0; k < steps; ++k) {
                const double value = k + 1 == steps ? hi : lo + (hi - lo) * k / (steps - 1);
                values.push_back(value);
                SimConfig c = base;
                set_parameter(c, variable, value);
                validate(c);
                cfgs.push_back(c);
            }
            RunOptions opt;
            opt.keep_series = false;
            const auto results = run_batch(cfgs, opt);
            std::string csv = "value,peak_emf,dc_steady,load_delivered,efficiency\n";
            for (std::size_t k = 0; k < results.size(); ++k) {
                if (!results[k].result) {
                    throw SolverError(variable + "=" + format_double(values[k]) + ": " + results[k].error, 0.0);
                }
                const auto& r = *results[k].result;
                csv += format_double(values[k]) + "," + format_double(r.peak_emf) + "," +
                       format_double(r.dc_steady) + "," + format_double(r.ledger.load_delivered) + "," +
                       format_double(r.ledger.efficiency()) + "\n";
            }
            write_file(out_path, csv);
            out << "rows=" << results.size() << "\n";
        } else if (optimize->parsed()) {
            if (config_path.empty()) throw ConfigError("optimize needs --config with optimize.* keys");
            SearchSettings settings;
            OptimizationProblem problem = load_problem(config_path, &settings);
            for (const auto& kv : overrides) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
                apply_setting(problem.base, trim(std::string_view(kv).substr(0, eq)),
                              std::string_view(kv).substr(eq + 1));
            }
            validate(problem);
            const auto grid = grid_search(problem, settings.points_per_axis);
            const auto nm = nelder_mead(problem, grid.best_point, static_cast<std::size_t>(settings.max_evals),
                                        settings.tol);
            const auto final_eval = evaluate_full(problem, nm.best_point);
            const std::string report = report_text(problem, grid, nm, final_eval);
            if (!out_path.empty()) {
                write_file(out_path, report);
                write_file(out_path + ".trace.csv", trace_text(problem, grid, nm));
            }
            out << report;
        } else if (calibrate_cmd->parsed()) {
            const SimConfig base = load_with_overrides(config_path, overrides);
            const SimConfig cal = calibrate(base, target, cal_variable, cal_lo, cal_hi);
            const double peak = open_circuit_peak_emf(cal);
            if (!out_path.empty()) {
                write_file(out_path, "# open-circuit fixture calibrated to peak_emf=" + format_double(target) +
                                         " V via " + cal_variable + "\n" + serialize_config(cal));
            }
            out << cal_variable << "=" << format_double(get_parameter(cal, cal_variable)) << "\n"
                << "peak_emf=" << format_double(peak) << "\n";
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const SolverError& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace harvest::cli
