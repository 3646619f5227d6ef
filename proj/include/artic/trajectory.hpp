#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "artic/geometry.hpp"
#include "artic/scene_model.hpp"

namespace artic::traj {

using geom::Pose;
using scene::ArticulatedObject;
using scene::JointSpec;

// Interpolation intervals per action unit (time step 1/250).
inline constexpr std::size_t kIntervals = 250;
inline constexpr std::size_t kWaypointCount = kIntervals + 1;

enum class GripperCommand { Closed, Open };

struct Waypoint {
    double time = 0.0;  // normalized [0, 1]
    Pose pose;          // world frame
    GripperCommand gripper = GripperCommand::Closed;
};

struct Trajectory {
    std::vector<Waypoint> waypoints;
    double requested_joint_delta = 0.0;  // rad or m, before limit clamping
    double joint_delta = 0.0;            // rad or m, what the waypoints realize
    bool clamped = false;
    std::vector<std::string> warnings;
};

struct GraspChoice {
    Pose pose;               // gripper pose; +z approaches the surface
    std::string site_part;   // part that owns the chosen site (the handle, if any)
};

// Handle child center if the part has a handle; else the grasp site farthest
// from the driving joint axis. Throws NoGraspSite.
GraspChoice choose_grasp(const ArticulatedObject& obj, const std::string& part_id);
Pose select_grasp(const ArticulatedObject& obj, const std::string& part_id);

struct TrajectoryOptions {
    double current_state = 0.0;     // joint state at the start of the motion
    double prismatic_extent = 1.0;  // m per unit of prismatic delta (part extent along the axis)
};

// `joint` must be expressed in the current world frame. `delta` is in action
// units (degrees for revolute, fraction of extent for prismatic) and is
// multiplied by the joint's open_sign. Throws ZeroDelta.
Trajectory generate_trajectory(const Pose& grasp, const JointSpec& joint, double delta,
                               const TrajectoryOptions& opts = {});

// Joint-space change for an action-unit delta, before clamping.
double joint_delta_for(const JointSpec& joint, double delta, double prismatic_extent);

// Convenience for a part of a scene: grasp, world joint, extent and current
// state are taken from the object.
Trajectory plan_for_part(const ArticulatedObject& obj, const std::string& part_id, double delta);

nlohmann::json trajectory_to_json(const Trajectory& t);

}  // namespace artic::traj
