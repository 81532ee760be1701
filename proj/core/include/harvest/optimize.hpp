#pragma once

// Derivative-free design search over a box of config parameters.
//
// Config keys (same file as the simulation config):
//   optimize.variables = design.spring_k,1000,4000; design.coil_turns,500,1500
//   optimize.objective = avg_load_power | energy_per_step | dc_steady
//   optimize.constraints = max_stroke_excursion<=0.0051; peak_cap_voltage<=6
//   optimize.penalty_weight = 100
//   optimize.points_per_axis = 5
//   optimize.max_evals = 60
//   optimize.tol = 1e-12
//   optimize.warmup_periods = 2
//   optimize.measure_periods = 5

#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "harvest/model.hpp"

namespace harvest {

enum class Objective { avg_load_power, energy_per_step, dc_steady };
enum class Metric { max_stroke_excursion, peak_cap_voltage, settle_time };
enum class Comparator { less_equal, greater_equal };

struct Variable {
    std::string path;
    double lower = 0.0;
    double upper = 0.0;
};

struct Constraint {
    Metric metric = Metric::max_stroke_excursion;
    Comparator comparator = Comparator::less_equal;
    double limit = 0.0;
};

struct OptimizationProblem {
    SimConfig base;
    std::vector<Variable> variables;
    Objective objective = Objective::avg_load_power;
    std::vector<Constraint> constraints;
    double penalty_weight = 1.0;  // objective units per constraint unit
    int warmup_periods = 2;
    int measure_periods = 5;
};

/// Search settings read from `optimize.*` alongside the problem.
struct SearchSettings {
    int points_per_axis = 5;
    int max_evals = 60;
    double tol = 1e-12;
};

inline constexpr double kInfeasible = -std::numeric_limits<double>::infinity();
inline constexpr std::size_t kDefaultGridCap = 10000;

struct TraceEntry {
    std::vector<double> point;
    double value = kInfeasible;
};

struct OptimizationReport {
    std::vector<double> best_point;
    double best_value = kInfeasible;
    std::size_t evaluations = 0;
    std::vector<TraceEntry> trace;
    std::vector<double> constraint_slack;  // at best_point; negative = violated
    std::vector<std::string> failures;     // causes of infeasible evaluations
};

class OptimizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const char* to_string(Objective objective) noexcept;
const char* to_string(Metric metric) noexcept;

/// Throws ConfigError on empty variables, bad bounds, unknown paths or penalty_weight <= 0.
void validate(const OptimizationProblem& problem);

/// Parses optimize.* keys; the base config comes from the same text.
[[nodiscard]] OptimizationProblem parse_problem(std::string_view text, SearchSettings* settings = nullptr);
[[nodiscard]] OptimizationProblem load_problem(const std::filesystem::path& path,
                                               SearchSettings* settings = nullptr);

/// Base config with the point written into the variable paths.
[[nodiscard]] SimConfig patch(const OptimizationProblem& problem, std::span<const double> point);

/// Config actually simulated by evaluate(): the patched config shortened to
/// warmup_periods + measure_periods gait periods.
[[nodiscard]] SimConfig evaluation_config(const OptimizationProblem& problem, std::span<const double> point);

struct Evaluation {
    double objective = kInfeasible;   // raw metric
    double value = kInfeasible;       // objective - penalty
    std::vector<double> metrics;      // one per constraint
    std::vector<double> slack;        // one per constraint, >= 0 when satisfied
    std::string failure;
};

/// Runs the shortened simulation and scores it. Simulation or validation failures give
/// value = kInfeasible and a cause in `failure`; they never throw.
[[nodiscard]] Evaluation evaluate_detailed(const OptimizationProblem& problem, std::span<const double> point);
[[nodiscard]] double evaluate(const OptimizationProblem& problem, std::span<const double> point);

/// Result of re-running a point over the base config's full duration.
[[nodiscard]] Evaluation evaluate_full(const OptimizationProblem& problem, std::span<const double> point);

using ObjectiveFn = std::function<double(std::span<const double>)>;

struct Box {
    std::vector<double> lower;
    std::vector<double> upper;
    [[nodiscard]] std::size_t dimension() const noexcept { return lower.size(); }
};

[[nodiscard]] Box bounds_of(const OptimizationProblem& problem);

/// Full Cartesian grid, bounds inclusive, maximized. Ties go to the lowest lexicographic grid
/// index (first axis most significant). Evaluations may run concurrently.
[[nodiscard]] OptimizationReport grid_search(const Box& box, const ObjectiveFn& fn, int points_per_axis,
                                             std::size_t cap = kDefaultGridCap, unsigned threads = 1);
[[nodiscard]] OptimizationReport grid_search(const OptimizationProblem& problem, int points_per_axis,
                                             std::size_t cap = kDefaultGridCap, unsigned threads = 0);

/// Maximizes fn with a box-clamped Nelder-Mead simplex (coefficients 1, 2, 0.5, 0.5;
/// initial edge 5% of each range). Stops when the simplex value spread < tol or after
/// max_evals evaluations. The start point is always the first evaluation.
[[nodiscard]] OptimizationReport nelder_mead(const Box& box, const ObjectiveFn& fn, std::span<const double> start,
                                             std::size_t max_evals, double tol);
[[nodiscard]] OptimizationReport nelder_mead(const OptimizationProblem& problem, std::span<const double> start,
                                             std::size_t max_evals, double tol);

inline constexpr double kCalibrationTolerance = 0.01;  // V
inline constexpr int kCalibrationMaxIterations = 60;

/// Open-circuit peak EMF for cfg (capacitor and load removed).
[[nodiscard]] double open_circuit_peak_emf(const SimConfig& cfg);

/// Bisects `variable` in [lo, hi] until the open-circuit peak EMF is within 0.01 V of the
/// target. Returns the open-circuit config with the calibrated value. Throws OptimizeError
/// when the endpoints do not bracket the target.
[[nodiscard]] SimConfig calibrate(const SimConfig& base, double target_peak_emf,
                                  const std::string& variable = "design.magnet_moment", double lo = 0.01,
                                  double hi = 5.0);

}  // namespace harvest
