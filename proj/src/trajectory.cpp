#include "artic/trajectory.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "artic/error.hpp"

namespace artic::traj {

using geom::OrientedBox;
using geom::Vec3;

namespace {

// Outward normal of the face of `b` nearest to `site`, judged in normalized box coordinates.
Vec3 face_normal(const OrientedBox& b, const Vec3& site) {
    const Vec3 local = geom::pose_apply(geom::pose_inverse(b.pose()), site);
    const double r[3] = {std::abs(local.x) / b.half_extents.x, std::abs(local.y) / b.half_extents.y,
                         std::abs(local.z) / b.half_extents.z};
    int k = 0;
    for (int i = 1; i < 3; ++i) {
        if (r[i] > r[k]) {
            k = i;
        }
    }
    const double s = local[k] < 0.0 ? -1.0 : 1.0;
    return b.axis(k) * s;
}

Pose gripper_pose(const Vec3& site, const Vec3& normal, const OrientedBox& grasped) {
    const Vec3 approach = -normal.normalized();
    const double hs[3] = {grasped.half_extents.x, grasped.half_extents.y, grasped.half_extents.z};
    int best = -1;
    for (int k = 0; k < 3; ++k) {
        if (std::abs(grasped.axis(k).dot(approach)) < 0.5 && (best < 0 || hs[k] < hs[best])) {
            best = k;
        }
    }
    Vec3 closing = best >= 0 ? grasped.axis(best) : Vec3{1, 0, 0};
    closing = closing - approach * approach.dot(closing);
    if (closing.norm() < 1e-9) {
        closing = std::abs(approach.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        closing = closing - approach * approach.dot(closing);
    }
    closing = closing.normalized();
    const Vec3 side = approach.cross(closing);
    const geom::Mat3 m = {{{closing.x, side.x, approach.x},
                           {closing.y, side.y, approach.y},
                           {closing.z, side.z, approach.z}}};
    return {geom::Rotation::from_matrix(m), site};
}

double distance_to_line(const Vec3& p, const Vec3& point, const Vec3& dir) {
    const Vec3 u = dir.normalized();
    const Vec3 w = p - point;
    return (w - u * u.dot(w)).norm();
}

}  // namespace

GraspChoice choose_grasp(const ArticulatedObject& obj, const std::string& part_id) {
    const auto& part = obj.part(part_id);
    const OrientedBox part_box = obj.current_box(part_id);

    if (grounding::is_handle(part.gapart_class) && part.grasp_sites.empty()) {
        const auto parent = part.parent ? obj.current_box(*part.parent) : part_box;
        return {gripper_pose(part_box.center, face_normal(parent, part_box.center), part_box), part_id};
    }
    for (const auto& child_id : obj.children_of(part_id)) {
        const auto& child = obj.part(child_id);
        if (grounding::is_handle(child.gapart_class)) {
            const OrientedBox handle = obj.current_box(child_id);
            return {gripper_pose(handle.center, face_normal(part_box, handle.center), handle), child_id};
        }
    }

    if (part.grasp_sites.empty()) {
        throw Error(ErrorCode::NoGraspSite, "part '" + part_id + "' has no grasp site and no handle");
    }
    const Pose motion = obj.part_motion(part_id);
    const auto driver = obj.driving_joint(part_id);
    std::optional<JointSpec> axis;
    if (driver) {
        axis = obj.world_joint(*driver);
    }
    Vec3 best_site;
    double best_dist = -1.0;
    for (const auto& s : part.grasp_sites) {
        const Vec3 w = geom::pose_apply(motion, s);
        const double d = axis ? distance_to_line(w, axis->axis_point, axis->axis_dir) : (w - part_box.center).norm();
        if (d > best_dist) {
            best_dist = d;
            best_site = w;
        }
    }
    return {gripper_pose(best_site, face_normal(part_box, best_site), part_box), part_id};
}

Pose select_grasp(const ArticulatedObject& obj, const std::string& part_id) {
    return choose_grasp(obj, part_id).pose;
}

double joint_delta_for(const JointSpec& joint, double delta, double prismatic_extent) {
    const double magnitude = joint.kind == program::JointKind::Revolute ? geom::deg_to_rad(delta)
                                                                        : delta * prismatic_extent;
    return joint.open_sign * magnitude;
}

Trajectory generate_trajectory(const Pose& grasp, const JointSpec& joint, double delta,
                               const TrajectoryOptions& opts) {
    if (delta == 0.0) {
        throw Error(ErrorCode::ZeroDelta, "action delta must be non-zero");
    }
    Trajectory traj;
    traj.requested_joint_delta = joint_delta_for(joint, delta, opts.prismatic_extent);
    const double target = opts.current_state + traj.requested_joint_delta;
    const double reachable = joint.clamp(target);
    traj.joint_delta = reachable - opts.current_state;
    if (reachable != target) {
        traj.clamped = true;
        std::ostringstream msg;
        msg << "joint target " << target << " outside [" << joint.lower << ", " << joint.upper
            << "]; motion truncated to " << traj.joint_delta;
        traj.warnings.push_back(msg.str());
    }

    traj.waypoints.reserve(kWaypointCount);
    for (std::size_t i = 0; i <= kIntervals; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(kIntervals);
        Pose motion;
        if (joint.kind == program::JointKind::Revolute) {
            motion = geom::rotation_about_line(joint.axis_point, joint.axis_dir, f * traj.joint_delta);
        } else {
            motion = {geom::Rotation::identity(), joint.axis_dir.normalized() * (f * traj.joint_delta)};
        }
        traj.waypoints.push_back({f, geom::pose_compose(motion, grasp),
                                  i == kIntervals ? GripperCommand::Open : GripperCommand::Closed});
    }
    return traj;
}

Trajectory plan_for_part(const ArticulatedObject& obj, const std::string& part_id, double delta) {
    const auto driver = obj.driving_joint(part_id);
    if (!driver) {
        throw Error(ErrorCode::InvariantViolation, "part '" + part_id + "' is not articulated");
    }
    const JointSpec joint = obj.world_joint(*driver);
    TrajectoryOptions opts;
    opts.current_state = obj.state(*driver);
    opts.prismatic_extent = obj.current_box(*driver).extent_along(joint.axis_dir);
    return generate_trajectory(select_grasp(obj, part_id), joint, delta, opts);
}

nlohmann::json trajectory_to_json(const Trajectory& t) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& w : t.waypoints) {
        arr.push_back({{"t", w.time},
                       {"position", w.pose.translation},
                       {"rotation", w.pose.rotation},
                       {"gripper", w.gripper == GripperCommand::Closed ? "closed" : "open"}});
    }
    return arr;
}

}  // namespace artic::traj
