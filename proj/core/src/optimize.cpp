#include "harvest/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <mutex>
#include <thread>

#include "harvest/config.hpp"
#include "harvest/engine.hpp"

namespace harvest {
namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    while (true) {
        const auto pos = s.find(sep);
        const auto piece = trim(s.substr(0, pos));
        if (!piece.empty()) out.push_back(piece);
        if (pos == std::string_view::npos) break;
        s.remove_prefix(pos + 1);
    }
    return out;
}

Metric parse_metric(std::string_view s) {
    if (s == "max_stroke_excursion") return Metric::max_stroke_excursion;
    if (s == "peak_cap_voltage") return Metric::peak_cap_voltage;
    if (s == "settle_time") return Metric::settle_time;
    throw ConfigError("optimize.constraints: unknown metric '" + std::string(s) + "'");
}

Objective parse_objective(std::string_view s) {
    if (s == "avg_load_power") return Objective::avg_load_power;
    if (s == "energy_per_step") return Objective::energy_per_step;
    if (s == "dc_steady") return Objective::dc_steady;
    throw ConfigError("optimize.objective: unknown objective '" + std::string(s) + "'");
}

int parse_int(std::string_view text, std::string_view key) {
    const double v = parse_double(text, key);
    if (v != std::floor(v) || std::abs(v) > 1e9) {
        throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(text) + "'");
    }
    return static_cast<int>(v);
}

bool in_box(const Box& box, std::span<const double> p) {
    if (p.size() != box.dimension()) return false;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (!(p[k] >= box.lower[k] && p[k] <= box.upper[k])) return false;
    }
    return true;
}

double sanitize(double v) { return std::isnan(v) ? kInfeasible : v; }

}  // namespace

const char* to_string(Objective o) noexcept {
    switch (o) {
        case Objective::avg_load_power: return "avg_load_power";
        case Objective::energy_per_step: return "energy_per_step";
        case Objective::dc_steady: return "dc_steady";
    }
    return "avg_load_power";
}

const char* to_string(Metric m) noexcept {
    switch (m) {
        case Metric::max_stroke_excursion: return "max_stroke_excursion";
        case Metric::peak_cap_voltage: return "peak_cap_voltage";
        case Metric::settle_time: return "settle_time";
    }
    return "max_stroke_excursion";
}

void validate(const OptimizationProblem& p) {
    validate(p.base);
    if (p.variables.empty()) throw ConfigError("optimize.variables: at least one variable is required");
    for (const auto& v : p.variables) {
        if (!is_numeric_parameter(v.path)) {
            throw ConfigError("optimize.variables: unknown numeric parameter '" + v.path + "'");
        }
        if (!std::isfinite(v.lower) || !std::isfinite(v.upper) || !(v.lower < v.upper)) {
            throw ConfigError("optimize.variables: " + v.path + " needs finite bounds with lower < upper");
        }
    }
    if (!(p.penalty_weight > 0.0) || !std::isfinite(p.penalty_weight)) {
        throw ConfigError("optimize.penalty_weight: must be > 0");
    }
    if (p.warmup_periods < 0) throw ConfigError("optimize.warmup_periods: must be >= 0");
    if (p.measure_periods < 1) throw ConfigError("optimize.measure_periods: must be >= 1");
}

OptimizationProblem parse_problem(std::string_view text, SearchSettings* settings) {
    OptimizationProblem p;
    p.base = parse_config(text);
    SearchSettings local;
    for (const auto& kv : parse_key_values(text)) {
        if (kv.key.rfind("optimize.", 0) != 0) continue;
        const std::string_view key = kv.key;
        const std::string_view value = kv.value;
        if (key == "optimize.variables") {
            for (auto item : split(value, ';')) {
                const auto f = split(item, ',');
                if (f.size() != 3) {
                    throw ConfigError("optimize.variables: expected 'path,lo,hi', got '" + std::string(item) + "'");
                }
                p.variables.push_back({std::string(f[0]), parse_double(f[1], key), parse_double(f[2], key)});
            }
        } else if (key == "optimize.constraints") {
            for (auto item : split(value, ';')) {
                auto op = item.find("<=");
                Comparator cmp = Comparator::less_equal;
                if (op == std::string_view::npos) {
                    op = item.find(">=");
                    cmp = Comparator::greater_equal;
                }
                if (op == std::string_view::npos) {
                    throw ConfigError("optimize.constraints: expected 'metric<=limit' or 'metric>=limit', got '" +
                                      std::string(item) + "'");
                }
                p.constraints.push_back(
                    {parse_metric(trim(item.substr(0, op))), cmp, parse_double(item.substr(op + 2), key)});
            }
        } else if (key == "optimize.objective") {
            p.objective = parse_objective(value);
        } else if (key == "optimize.penalty_weight") {
            p.penalty_weight = parse_double(value, key);
        } else if (key == "optimize.warmup_periods") {
            p.warmup_periods = parse_int(value, key);
        } else if (key == "optimize.measure_periods") {
            p.measure_periods = parse_int(value, key);
        } else if (key == "optimize.points_per_axis") {
            local.points_per_axis = parse_int(value, key);
        } else if (key == "optimize.max_evals") {
            local.max_evals = parse_int(value, key);
        } else if (key == "optimize.tol") {
            local.tol = parse_double(value, key);
        } else {
            throw ConfigError("unknown key '" + kv.key + "'");
        }
    }
    validate(p);
    if (local.points_per_axis < 2) throw ConfigError("optimize.points_per_axis: must be >= 2");
    if (local.max_evals < static_cast<int>(p.variables.size()) + 1) {
        throw ConfigError("optimize.max_evals: must be >= number of variables + 1");
    }
    if (settings != nullptr) *settings = local;
    return p;
}

OptimizationProblem load_problem(const std::filesystem::path& path, SearchSettings* settings) {
    const std::string text = read_text_file(path);
    try {
        return parse_problem(text, settings);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

Box bounds_of(const OptimizationProblem& p) {
    Box box;
    for (const auto& v : p.variables) {
        box.lower.push_back(v.lower);
        box.upper.push_back(v.upper);
    }
    return box;
}

SimConfig patch(const OptimizationProblem& p, std::span<const double> point) {
    SimConfig cfg = p.base;
    for (std::size_t k = 0; k < p.variables.size() && k < point.size(); ++k) {
        set_parameter(cfg, p.variables[k].path, point[k]);
    }
    return cfg;
}

SimConfig evaluation_config(const OptimizationProblem& p, std::span<const double> point) {
    SimConfig cfg = patch(p, point);
    cfg.duration = static_cast<double>(p.warmup_periods + p.measure_periods) * cfg.gait.period();
    return cfg;
}

namespace {

Evaluation score(const OptimizationProblem& p, const SimConfig& cfg, double measure_from, double periods) {
    Evaluation ev;
    try {
        RunOptions opt;
        opt.measure_from = measure_from;
        opt.keep_series = false;
        const SimResult r = run(cfg, opt);
        switch (p.objective) {
            case Objective::avg_load_power:
                ev.objective = r.window_duration > 0.0 ? r.window_ledger.load_delivered / r.window_duration : 0.0;
                break;
            case Objective::energy_per_step:
                ev.objective = r.window_ledger.load_delivered / periods;
                break;
            case Objective::dc_steady:
                ev.objective = r.dc_steady;
                break;
        }
        double violation = 0.0;
        for (const auto& c : p.constraints) {
            double m = 0.0;
            switch (c.metric) {
                case Metric::max_stroke_excursion: m = r.max_excursion; break;
                case Metric::peak_cap_voltage: m = r.peak_cap_voltage; break;
                case Metric::settle_time: m = r.settle_time.value_or(cfg.duration); break;
            }
            const double slack = c.comparator == Comparator::less_equal ? c.limit - m : m - c.limit;
            ev.metrics.push_back(m);
            ev.slack.push_back(slack);
            violation += std::max(0.0, -slack);
        }
        ev.value = sanitize(ev.objective - p.penalty_weight * violation);
    } catch (const std::exception& e) {
        ev.failure = e.what();
        ev.value = kInfeasible;
    }
    return ev;
}

}  // namespace

Evaluation evaluate_detailed(const OptimizationProblem& p, std::span<const double> point) {
    if (!in_box(bounds_of(p), point)) {
        Evaluation ev;
        ev.failure = "point outside the variable bounds";
        return ev;
    }
    const SimConfig cfg = evaluation_config(p, point);
    return score(p, cfg, p.warmup_periods * cfg.gait.period(), p.measure_periods);
}

double evaluate(const OptimizationProblem& p, std::span<const double> point) {
    return evaluate_detailed(p, point).value;
}

Evaluation evaluate_full(const OptimizationProblem& p, std::span<const double> point) {
    const SimConfig cfg = patch(p, point);
    const double warmup = std::min(p.warmup_periods * cfg.gait.period(), 0.5 * cfg.duration);
    return score(p, cfg, warmup, (cfg.duration - warmup) / cfg.gait.period());
}

OptimizationReport grid_search(const Box& box, const ObjectiveFn& fn, int points_per_axis, std::size_t cap,
                               unsigned threads) {
    if (points_per_axis < 2) throw OptimizeError("grid_search: points_per_axis must be >= 2");
    const std::size_t dim = box.dimension();
    if (dim == 0) throw OptimizeError("grid_search: empty box");
    std::size_t total = 1;
    for (std::size_t k = 0; k < dim; ++k) {
        if (total > cap / static_cast<std::size_t>(points_per_axis)) {
            throw OptimizeError("grid_search: grid of " + std::to_string(points_per_axis) + "^" +
                                std::to_string(dim) + " points exceeds the cap of " + std::to_string(cap));
        }
        total *= static_cast<std::size_t>(points_per_axis);
    }

    OptimizationReport report;
    report.trace.resize(total);
    const auto ppa = static_cast<std::size_t>(points_per_axis);
    for (std::size_t idx = 0; idx < total; ++idx) {
        auto& pt = report.trace[idx].point;
        pt.resize(dim);
        std::size_t rem = idx;
        for (std::size_t a = dim; a-- > 0;) {
            const std::size_t digit = rem % ppa;
            rem /= ppa;
            pt[a] = digit + 1 == ppa ? box.upper[a]
                                    : box.lower[a] + (box.upper[a] - box.lower[a]) * static_cast<double>(digit) /
                                                         static_cast<double>(ppa - 1);
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < total; k = next++) report.trace[k].value = sanitize(fn(report.trace[k].point));
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(total)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    }

    std::size_t best = 0;
    for (std::size_t k = 1; k < total; ++k) {
        if (report.trace[k].value > report.trace[best].value) best = k;
    }
    report.best_point = report.trace[best].point;
    report.best_value = report.trace[best].value;
    report.evaluations = total;
    return report;
}

OptimizationReport nelder_mead(const Box& box, const ObjectiveFn& fn, std::span<const double> start,
                               std::size_t max_evals, double tol) {
    constexpr double kReflect = 1.0;
    constexpr double kExpand = 2.0;
    constexpr double kContract = 0.5;
    constexpr double kShrink = 0.5;
    constexpr double kInitialEdge = 0.05;

    const std::size_t n = box.dimension();
    if (start.size() != n || n == 0) throw OptimizeError("nelder_mead: start point has the wrong dimension");
    if (!in_box(box, start)) throw OptimizeError("nelder_mead: start point outside the bounds");
    if (max_evals < n + 1) throw OptimizeError("nelder_mead: max_evals must be >= dimension + 1");

    OptimizationReport report;
    auto clamp = [&](std::vector<double> p) {
        for (std::size_t k = 0; k < n; ++k) p[k] = std::clamp(p[k], box.lower[k], box.upper[k]);
        return p;
    };
    // Minimizes cost = -fn.
    auto cost_of = [&](const std::vector<double>& p) {
        const double value = sanitize(fn(p));
        report.trace.push_back({p, value});
        ++report.evaluations;
        if (report.evaluations == 1 || value > report.best_value) {
            report.best_value = value;
            report.best_point = p;
        }
        return -value;
    };
    auto budget = [&] { return report.evaluations < max_evals; };

    struct Vertex {
        std::vector<double> p;
        double cost;
    };
    std::vector<Vertex> simplex;
    {
        std::vector<double> p0(start.begin(), start.end());
        simplex.push_back({p0, cost_of(p0)});
        for (std::size_t k = 0; k < n && budget(); ++k) {
            auto p = p0;
            const double step = kInitialEdge * (box.upper[k] - box.lower[k]);
            p[k] = p0[k] + step <= box.upper[k] ? p0[k] + step : p0[k] - step;
            p = clamp(p);
            simplex.push_back({p, cost_of(p)});
        }
    }
    if (simplex.size() < n + 1) return report;

    auto combine = [&](const std::vector<double>& a, const std::vector<double>& b, double t) {
        std::vector<double> p(n);
        for (std::size_t k = 0; k < n; ++k) p[k] = a[k] + t * (b[k] - a[k]);
        return clamp(std::move(p));
    };

    while (budget()) {
        std::stable_sort(simplex.begin(), simplex.end(),
                         [](const Vertex& a, const Vertex& b) { return a.cost < b.cost; });
        const double spread = simplex.back().cost - simplex.front().cost;
        if (spread < tol) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[v].p[k] / static_cast<double>(n);
        }
        Vertex& worst = simplex.back();

        const auto xr = combine(centroid, worst.p, -kReflect);
        const double cr = cost_of(xr);
        if (cr < simplex.front().cost) {
            if (!budget()) {
                worst = {xr, cr};
                break;
            }
            const auto xe = combine(centroid, xr, kExpand);
            const double ce = cost_of(xe);
            worst = ce < cr ? Vertex{xe, ce} : Vertex{xr, cr};
            continue;
        }
        if (cr < simplex[n - 1].cost) {
            worst = {xr, cr};
            continue;
        }
        if (!budget()) break;
        const bool outside = cr < worst.cost;
        const auto xc = outside ? combine(centroid, xr, kContract) : combine(centroid, worst.p, kContract);
        const double cc = cost_of(xc);
        if (outside ? cc <= cr : cc < worst.cost) {
            worst = {xc, cc};
            continue;
        }
        for (std::size_t v = 1; v <= n && budget(); ++v) {
            simplex[v].p = combine(simplex[0].p, simplex[v].p, kShrink);
            simplex[v].cost = cost_of(simplex[v].p);
        }
    }
    return report;
}

namespace {

ObjectiveFn problem_objective(const OptimizationProblem& p, std::vector<std::string>& failures,
                              std::mutex* mu = nullptr) {
    return [&p, &failures, mu](std::span<const double> point) {
        auto ev = evaluate_detailed(p, point);
        if (!ev.failure.empty()) {
            if (mu != nullptr) mu->lock();
            failures.push_back(ev.failure);
            if (mu != nullptr) mu->unlock();
        }
        return ev.value;
    };
}

void finish_report(const OptimizationProblem& p, OptimizationReport& report) {
    report.constraint_slack = evaluate_detailed(p, report.best_point).slack;
}

}  // namespace

OptimizationReport grid_search(const OptimizationProblem& p, int points_per_axis, std::size_t cap,
                               unsigned threads) {
    validate(p);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::string> failures;
    std::mutex mu;
    auto report = grid_search(bounds_of(p), problem_objective(p, failures, &mu), points_per_axis, cap, threads);
    std::sort(failures.begin(), failures.end());
    report.failures = std::move(failures);
    finish_report(p, report);
    return report;
}

OptimizationReport nelder_mead(const OptimizationProblem& p, std::span<const double> start, std::size_t max_evals,
                               double tol) {
    validate(p);
    std::vector<std::string> failures;
    auto report = nelder_mead(bounds_of(p), problem_objective(p, failures), start, max_evals, tol);
    report.failures = std::move(failures);
    finish_report(p, report);
    return report;
}

double open_circuit_peak_emf(const SimConfig& cfg) {
    SimConfig open = cfg;
    open.circuit.smoothing_cap = 0.0;
    open.circuit.load.kind = LoadKind::open;
    RunOptions opt;
    opt.keep_series = false;
    return run(open, opt).peak_emf;
}

SimConfig calibrate(const SimConfig& base, double target, const std::string& variable, double lo, double hi) {
    if (!is_numeric_parameter(variable)) throw ConfigError("unknown numeric parameter '" + variable + "'");
    if (!(lo < hi)) throw ConfigError("calibration bounds need lo < hi");

    SimConfig cfg = base;
    cfg.circuit.smoothing_cap = 0.0;
    cfg.circuit.load.kind = LoadKind::open;
    auto peak_at = [&](double value) {
        set_parameter(cfg, variable, value);
        return open_circuit_peak_emf(cfg);
    };

    const double p_lo = peak_at(lo);
    const double p_hi = peak_at(hi);
    if (!(target >= std::min(p_lo, p_hi) && target <= std::max(p_lo, p_hi))) {
        throw OptimizeError("calibration target " + format_double(target) + " V is not bracketed: peak EMF is " +
                            format_double(p_lo) + " V at " + variable + "=" + format_double(lo) + " and " +
                            format_double(p_hi) + " V at " + format_double(hi));
    }
    const bool increasing = p_hi >= p_lo;
    double a = lo;
    double b = hi;
    double best = std::abs(p_lo - target) <= std::abs(p_hi - target) ? lo : hi;
    double best_err = std::min(std::abs(p_lo - target), std::abs(p_hi - target));
    for (int it = 0; it < kCalibrationMaxIterations && best_err >= kCalibrationTolerance; ++it) {
        const double mid = 0.5 * (a + b);
        const double pm = peak_at(mid);
        const double err = std::abs(pm - target);
        if (err < best_err) {
            best_err = err;
            best = mid;
        }
        if ((pm < target) == increasing) a = mid;
        else b = mid;
    }
    set_parameter(cfg, variable, best);
    return cfg;
}

}  // namespace harvest
