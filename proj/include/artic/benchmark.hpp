#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "artic/joint_estimation.hpp"
#include "artic/planner.hpp"

namespace artic::bench {

struct StateRange {
    double lo = 0.0;  // degrees (revolute) or meters (prismatic)
    double hi = 0.0;
};

struct TaskSpec {
    int id = 0;
    std::string category;
    std::string name;
    std::string scene_file;
    std::vector<std::string> instruction_variants;
    std::map<std::string, StateRange> init_state_sampler;
    std::string target_part;
    double target_delta = 0.0;  // action units
    std::optional<std::string> required_effect;
    std::optional<std::string> manual;
    std::optional<std::string> target_hint;
    std::string rules_file;
    std::size_t trials = 20;
    std::size_t target_states = 1;

    void validate() const;
};

// Paths inside the document are resolved against `base_dir`.
std::vector<TaskSpec> load_specs(const nlohmann::json& doc, const std::string& base_dir);
std::vector<TaskSpec> load_specs_file(const std::string& path);

struct BenchConfig {
    planner::PlannerConfig planner;
    std::size_t threads = 1;
    std::optional<std::size_t> trials_override;
};

struct TrialLog {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::string instruction;
    std::map<std::string, double> initial_states;  // joint units (rad / m)
    bool success = false;
    std::size_t strategies_tried = 0;
    std::size_t backend_calls = 0;
    std::string error;
};

struct TaskReport {
    int id = 0;
    std::string category;
    std::string name;
    std::size_t trials = 0;
    std::size_t successes = 0;
    double rate = 0.0;  // percent
    std::vector<TrialLog> logs;
};

struct CategoryReport {
    std::string category;
    std::size_t trials = 0;
    std::size_t successes = 0;
    double rate = 0.0;  // trial-weighted, percent
};

struct SuccessRateReport {
    std::vector<TaskReport> tasks;
    std::vector<CategoryReport> categories;  // first-appearance order
};

std::uint64_t trial_seed(std::uint64_t seed, int task_id, std::size_t trial);

// Per-trial failures (scene errors, backend errors, ...) count as failed
// trials; the run never aborts midway. Reports do not depend on `threads`.
SuccessRateReport run_benchmark(const std::vector<TaskSpec>& specs, const BenchConfig& cfg, std::uint64_t seed);

// Category / Task ID / success-rate rows, one column per task.
std::string format_report_table(const SuccessRateReport& report);
nlohmann::json report_to_json(const SuccessRateReport& report, bool include_logs = true);

struct EstimationCell {
    double noise_sigma = 0.0;
    double outlier_frac = 0.0;
    std::size_t trials = 0;
    std::size_t kind_errors = 0;
    std::size_t failures = 0;  // estimator threw
    joint::PoseErrorSummary summary;
};

struct PoseErrorReport {
    std::size_t points = 500;
    std::vector<EstimationCell> cells;
};

// Every (noise, outlier) pair gets n_trials random revolute/prismatic box
// motions; cells are seeded independently of the grid order.
PoseErrorReport estimation_benchmark(std::size_t n_trials, const std::vector<double>& noise_grid,
                                     const std::vector<double>& outlier_grid, std::uint64_t seed,
                                     std::size_t points = 500);

std::string format_estimation_table(const PoseErrorReport& report);
nlohmann::json estimation_to_json(const PoseErrorReport& report);

}  // namespace artic::bench
