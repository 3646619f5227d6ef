#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "artic/action_program.hpp"
#include "artic/geometry.hpp"
#include "artic/part_grounding.hpp"

namespace artic::scene {

using geom::OrientedBox;
using geom::PointCloud;
using geom::Pose;
using geom::Vec3;
using grounding::GAPartClass;
using program::JointKind;

struct JointSpec {
    JointKind kind = JointKind::Revolute;
    Vec3 axis_point;          // object frame, rest configuration
    Vec3 axis_dir{0, 0, 1};   // unit
    double lower = 0.0;       // rad or m
    double upper = 0.0;
    int open_sign = 1;        // state direction that moves the part away from the body
    bool spring_return = false;  // state snaps back to 0 when released

    // Rigid motion of the attached part for joint state `s`.
    Pose motion(double s) const;
    double clamp(double s) const;
};

struct Part {
    std::string id;
    std::string semantic_name;
    GAPartClass gapart_class = GAPartClass::HingeDoor;
    OrientedBox box;                       // object frame at rest
    std::optional<JointSpec> joint;        // nullopt = fixed to parent (or body)
    std::optional<std::string> parent;
    std::vector<Vec3> grasp_sites;         // object frame at rest
};

// "Past" a threshold means beyond it, away from the rest state 0.
bool past_threshold(double state, double threshold);

struct LatchRule {
    std::string locked_joint;
    std::string unlocking_joint;
    double threshold = 0.0;
    double release_offset = 0.05;
};

struct EffectRule {
    std::string trigger_joint;
    double threshold = 0.0;
    std::string effect;
};

class ArticulatedObject {
public:
    std::string name;

    ArticulatedObject() = default;
    ArticulatedObject(std::string name, std::vector<Part> parts, std::vector<LatchRule> latches,
                      std::vector<EffectRule> effects, std::map<std::string, double> states);

    const std::vector<Part>& parts() const { return parts_; }
    const std::vector<LatchRule>& latches() const { return latches_; }
    const std::vector<EffectRule>& effects() const { return effects_; }
    const std::map<std::string, double>& states() const { return states_; }

    bool has_part(const std::string& id) const;
    const Part& part(const std::string& id) const;  // throws UnknownPart
    std::vector<std::string> children_of(const std::string& id) const;

    double state(const std::string& id) const;  // 0 for fixed parts
    // Sets a joint state. Throws InvariantViolation when out of limits or
    // the part has no joint.
    void set_state(const std::string& id, double s);

    // Latch bookkeeping: a latch is engaged while its locked joint has not
    // been released. `reset_latches` re-derives engagement from the states
    // (engaged iff the locked joint sits at rest and the unlocking joint is
    // not past its threshold).
    bool latch_engaged(std::size_t latch_index) const { return !released_.at(latch_index); }
    bool is_locked(const std::string& joint_id) const;
    void reset_latches();
    // Releases latches whose unlocking joint is past threshold, moving the
    // locked joint to its release offset. Returns the indices released.
    std::vector<std::size_t> apply_latch_rules();

    std::set<std::string> active_effects() const;

    // Part whose joint moves `id`: itself if jointed, else the nearest jointed ancestor.
    std::optional<std::string> driving_joint(const std::string& id) const;
    // Rest-to-current rigid motion of a part (composes through parents).
    Pose part_motion(const std::string& id) const;
    // The part's own joint expressed in the current world frame.
    JointSpec world_joint(const std::string& id) const;
    OrientedBox current_box(const std::string& id) const;

    // Axis-aligned bounds of all current part boxes, grown by `margin`.
    std::pair<Vec3, Vec3> bounds(double margin = 0.0) const;

private:
    std::vector<Part> parts_;
    std::vector<LatchRule> latches_;
    std::vector<EffectRule> effects_;
    std::map<std::string, double> states_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<bool> released_;

    void validate();
};

// World pose of every part's box.
std::map<std::string, Pose> forward_state(const ArticulatedObject& obj);

struct ObservationConfig {
    std::size_t points = 500;
    double noise_sigma = 0.0;     // m, per axis
    double outlier_frac = 0.0;    // [0, 1)
    std::uint64_t seed = 0;       // surface sampling and outlier indices
    std::optional<std::uint64_t> noise_seed;  // noise and outlier positions; defaults to seed
};

// Points keep their index across calls with the same seed, so two
// observations at different states are index-corresponded.
PointCloud observe_part(const ArticulatedObject& obj, const std::string& part_id,
                        const ObservationConfig& cfg);

// Indices replaced by outliers for a given configuration.
std::vector<std::size_t> outlier_indices(const ObservationConfig& cfg);

std::map<GAPartClass, std::size_t> part_histogram(const ArticulatedObject& obj);

ArticulatedObject load_scene(const nlohmann::json& doc);
ArticulatedObject load_scene_file(const std::string& path);
nlohmann::json scene_to_json(const ArticulatedObject& obj);

}  // namespace artic::scene
