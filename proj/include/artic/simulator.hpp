#pragma once

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "artic/geometry.hpp"
#include "artic/scene_model.hpp"
#include "artic/trajectory.hpp"

namespace artic::sim {

using geom::PointCloud;
using geom::Pose;
using scene::ArticulatedObject;

struct SimConfig {
    std::size_t max_steps = 1000;
    double grasp_radius = 0.03;      // m
    double slip_tolerance = 0.02;    // m
    double success_fraction = 0.9;
    std::size_t stability_window = 10;
    double stability_eps = 1e-4;

    void validate() const;
};

enum class OutcomeKind { Ok, Blocked, Slipped, GraspFailed };
enum class BlockReason { None, Latch, Limit };

struct StepOutcome {
    OutcomeKind kind = OutcomeKind::Ok;
    BlockReason reason = BlockReason::None;

    static StepOutcome ok() { return {}; }
    static StepOutcome blocked(BlockReason r) { return {OutcomeKind::Blocked, r}; }
    static StepOutcome slipped() { return {OutcomeKind::Slipped, BlockReason::None}; }
    static StepOutcome grasp_failed() { return {OutcomeKind::GraspFailed, BlockReason::None}; }

    bool is_ok() const { return kind == OutcomeKind::Ok; }
    bool operator==(const StepOutcome&) const = default;
};

std::string outcome_name(const StepOutcome& o);  // "ok", "blocked(latch)", ...

enum class EventType { Grasp, Step, Release, LatchReleased, Effect };

struct Event {
    std::size_t step = 0;
    EventType type = EventType::Step;
    StepOutcome outcome;
    std::string part;
    std::map<std::string, double> states;
    std::string note;
};

nlohmann::json event_to_json(const Event& e);
void write_event_log(std::ostream& out, const std::vector<Event>& log);

struct EpisodeState {
    ArticulatedObject object;
    SimConfig config;
    Pose gripper;
    std::optional<std::string> held_part;
    std::optional<std::string> driven_joint;  // joint moved by the held part
    Pose grip_in_part;                        // gripper relative to the held part's motion
    std::size_t step = 0;
    std::set<std::string> effect_flags;       // currently active
    std::set<std::string> triggered_effects;  // ever active during the episode
    std::map<std::string, double> initial_states;
    std::vector<Event> event_log;

    static EpisodeState start(ArticulatedObject obj, SimConfig cfg = {});
};

// Succeeds iff the gripper is within grasp_radius of a grasp site of the part
// (or of its handle children). Throws AlreadyHolding.
StepOutcome grasp(EpisodeState& state, const std::string& part_id);

// Opens the gripper; spring-return joints go back to rest.
void release(EpisodeState& state);

// Projects the commanded gripper motion onto the held part's joint. Throws NotHolding.
StepOutcome step(EpisodeState& state, const Pose& commanded);

struct StepRecord {
    StepOutcome outcome;
    std::optional<std::pair<PointCloud, PointCloud>> clouds;  // (initial, current)
};

// Called for every emitted observation pair; return false to stop early.
using ObservationHook = std::function<bool(std::size_t waypoint, const PointCloud& initial,
                                           const PointCloud& current)>;

// Steps through waypoints 1..N (waypoint 0 is the grasp pose). Every
// `observe_every` steps the moving part is observed before and now with the
// same sampling seed. Stops early on Slipped or when the hook says so.
std::vector<StepRecord> run_trajectory(EpisodeState& state, const traj::Trajectory& traj,
                                       std::size_t observe_every, const scene::ObservationConfig& obs,
                                       const ObservationHook& hook = {});

// Commands the current gripper pose `n` times.
void settle(EpisodeState& state, std::size_t n);

// |s_final - s_initial| >= fraction * |delta| within max_steps and with the
// state still over the last stability_window steps. Throws UnknownPart.
bool check_success(const EpisodeState& state, const std::string& target_part, double delta_target);

}  // namespace artic::sim
