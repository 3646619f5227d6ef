#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "artic/action_program.hpp"
#include "artic/joint_estimation.hpp"
#include "artic/part_grounding.hpp"
#include "artic/scene_model.hpp"
#include "artic/simulator.hpp"

namespace artic::planner {

using grounding::GAPartClass;
using program::ActionUnit;
using program::Strategy;
using program::StrategySet;
using scene::ArticulatedObject;

struct SceneDescription {
    std::string text;
    std::map<GAPartClass, std::size_t> histogram;
    std::string object_name;
};

std::string describe_histogram(const std::map<GAPartClass, std::size_t>& histogram);
SceneDescription build_scene_description(const ArticulatedObject& obj);

struct InterpretRequest {
    std::string instruction;
    std::string description;
    std::optional<std::string> manual;
    std::optional<std::string> failure_note;
};

// Produces strategy text in the action-program format.
class InterpreterBackend {
public:
    virtual ~InterpreterBackend() = default;
    virtual std::string interpret_text(const InterpretRequest& request) = 0;
};

// Table-driven stand-in for the language model. Rules are tried in order; a
// rule with a failure pattern only answers replanning requests whose failure
// note matches, and a rule without one only answers first-time requests.
class MockBackend : public InterpreterBackend {
public:
    struct Rule {
        std::string instruction_pattern;
        std::vector<GAPartClass> requires_classes;
        std::optional<std::string> failure_pattern;
        std::optional<std::string> manual_pattern;
        std::string strategies;
    };

    explicit MockBackend(std::vector<Rule> rules);
    static MockBackend from_json(const nlohmann::json& rules);
    static MockBackend from_file(const std::string& path);

    // Throws NoRuleMatched.
    std::string interpret_text(const InterpretRequest& request) override;

    const std::vector<Rule>& rules() const { return rules_; }
    std::size_t calls() const { return calls_.load(); }

    MockBackend(const MockBackend& other);

private:
    struct Compiled {
        std::regex instruction;
        std::optional<std::regex> failure;
        std::optional<std::regex> manual;
    };
    std::vector<Rule> rules_;
    std::vector<Compiled> compiled_;
    std::atomic<std::size_t> calls_{0};
};

MockBackend mock_backend(const nlohmann::json& rules);

// Prompt sent to external text-generation services.
std::string build_prompt(const InterpretRequest& request);

// POSTs {"prompt": ...} to an HTTP endpoint and reads {"text": ...}.
class HttpBackend : public InterpreterBackend {
public:
    // url: "http://host:port/path"
    explicit HttpBackend(std::string url, int timeout_seconds = 30);
    std::string interpret_text(const InterpretRequest& request) override;

private:
    std::string host_;
    int port_ = 80;
    std::string path_;
    int timeout_seconds_;
};

struct PlannerObservation {
    double gripper_target = 0.0;    // commanded joint-space change for the unit
    double gripper_progress = 0.0;  // commanded so far
    double part_target = 0.0;
    double part_estimate = 0.0;     // from interactive perception
    std::size_t unit_index = 0;
    std::size_t unit_count = 1;
};

enum class Decision { Continue, TransitionToNextStep, HaltAndReplan, Success };

const char* decision_name(Decision d);

struct DecisionConfig {
    double done_frac = 0.1;
    double check_frac = 0.2;
    double follow_frac = 0.5;
};

// Rule-based decision; every rule compares ratios, so scaling all four
// quantities by c > 0 leaves the result unchanged.
Decision decide(const PlannerObservation& obs, const DecisionConfig& cfg = {});

using DecisionPolicy = std::function<Decision(const PlannerObservation&)>;

struct GroundingContext {
    grounding::FeatureStore store;
    grounding::SyntheticFeatureModel features{16, 0.05, 0};
    std::size_t k = grounding::kDefaultK;

    static GroundingContext synthetic(std::size_t dimension = 16, double sigma = 0.05,
                                      std::size_t per_class = 8, std::uint64_t seed = 0);
};

struct ResolvedPart {
    std::string part_id;
    GAPartClass actionable_class;
    std::string method;  // "semantic_name", "class_name", "synonym", "knn"
};

// Semantic-name match, explicit actionable-class name, synonym table, then
// KNN over synthetic pooled features. `hint` picks among several matches.
// Throws UnknownPart.
ResolvedPart resolve_part(const ArticulatedObject& obj, const ActionUnit& unit,
                          const std::optional<std::string>& hint, const GroundingContext& grounding,
                          std::mt19937_64& rng);

struct PlannerConfig {
    sim::SimConfig sim;
    DecisionConfig decision;
    scene::ObservationConfig observation;
    joint::RansacParams ransac;
    std::size_t observe_every = 50;
    DecisionPolicy policy;  // empty: the rule-based decide()
};

struct TaskTarget {
    std::string part;
    double delta = 0.0;  // action units
    std::optional<std::string> required_effect;
};

struct TaskRequest {
    std::string instruction;
    std::optional<std::string> manual;
    std::optional<std::string> target_hint;  // part id indicated by the user
    std::optional<TaskTarget> target;        // ground-truth success criterion
};

struct DecisionRecord {
    std::size_t attempt = 0;
    std::size_t unit_index = 0;
    std::size_t step = 0;
    std::size_t waypoint = 0;
    PlannerObservation observation;
    Decision decision = Decision::Continue;
};

struct StrategyAttempt {
    Strategy strategy;
    std::size_t round = 0;  // 0 = first interpretation, 1.. = replans
    bool succeeded = false;
    bool halted = false;
    std::string failure;
    std::vector<ResolvedPart> parts;
};

struct TaskResult {
    bool success = false;
    std::string description;
    std::size_t backend_calls = 0;
    std::size_t strategies_tried = 0;
    std::vector<StrategyAttempt> attempts;
    std::vector<DecisionRecord> decisions;
    std::vector<std::string> failure_notes;
    std::vector<std::string> warnings;
    std::set<std::string> triggered_effects;
    std::map<std::string, double> final_states;
    std::size_t steps = 0;
    std::vector<sim::Event> events;
};

// "It fails when opening the door"
std::string failure_note_for(const ActionUnit& unit, const ArticulatedObject& obj, const std::string& part_id);

// Throws NoStrategies and BackendFormatError for the first interpretation;
// later failures are recorded in the result.
TaskResult run_global_plan(ArticulatedObject obj, const TaskRequest& request, InterpreterBackend& backend,
                           const GroundingContext& grounding, const PlannerConfig& cfg, std::uint64_t seed);

nlohmann::json task_result_to_json(const TaskResult& r);

}  // namespace artic::planner
