#include "artic/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "artic/error.hpp"

namespace artic::sim {

using geom::Vec3;
using nlohmann::json;

void SimConfig::validate() const {
    if (!(success_fraction > 0.0 && success_fraction <= 1.0)) {
        throw std::invalid_argument("success_fraction must lie in (0, 1]");
    }
    if (max_steps < 1) {
        throw std::invalid_argument("max_steps must be >= 1");
    }
}

std::string outcome_name(const StepOutcome& o) {
    switch (o.kind) {
    case OutcomeKind::Ok: return "ok";
    case OutcomeKind::Blocked: return o.reason == BlockReason::Latch ? "blocked(latch)" : "blocked(limit)";
    case OutcomeKind::Slipped: return "slipped";
    case OutcomeKind::GraspFailed: return "grasp_failed";
    }
    return "ok";
}

namespace {

const char* event_type_name(EventType t) {
    switch (t) {
    case EventType::Grasp: return "grasp";
    case EventType::Step: return "step";
    case EventType::Release: return "release";
    case EventType::LatchReleased: return "latch_released";
    case EventType::Effect: return "effect";
    }
    return "step";
}

void log_event(EpisodeState& st, EventType type, StepOutcome outcome, std::string part, std::string note = {}) {
    st.event_log.push_back({st.step, type, outcome, std::move(part), st.object.states(), std::move(note)});
}

void refresh_effects(EpisodeState& st) {
    const auto active = st.object.active_effects();
    for (const auto& e : active) {
        if (!st.effect_flags.count(e)) {
            log_event(st, EventType::Effect, StepOutcome::ok(), "", e + " on");
        }
        st.triggered_effects.insert(e);
    }
    for (const auto& e : st.effect_flags) {
        if (!active.count(e)) {
            log_event(st, EventType::Effect, StepOutcome::ok(), "", e + " off");
        }
    }
    st.effect_flags = active;
}

void apply_latches(EpisodeState& st) {
    for (std::size_t idx : st.object.apply_latch_rules()) {
        const auto& l = st.object.latches()[idx];
        log_event(st, EventType::LatchReleased, StepOutcome::ok(), l.locked_joint,
                  "released by " + l.unlocking_joint);
    }
}

std::vector<Vec3> contact_points(const ArticulatedObject& obj, const std::string& part_id) {
    std::vector<Vec3> pts;
    auto add_part = [&](const std::string& id) {
        const auto& p = obj.part(id);
        const Pose m = obj.part_motion(id);
        for (const auto& s : p.grasp_sites) {
            pts.push_back(geom::pose_apply(m, s));
        }
        if (grounding::is_handle(p.gapart_class)) {
            pts.push_back(obj.current_box(id).center);
        }
    };
    add_part(part_id);
    for (const auto& child : obj.children_of(part_id)) {
        if (grounding::is_handle(obj.part(child).gapart_class)) {
            add_part(child);
        }
    }
    return pts;
}

}  // namespace

json event_to_json(const Event& e) {
    json j{{"step", e.step}, {"event", event_type_name(e.type)}, {"outcome", outcome_name(e.outcome)}, {"states", e.states}};
    if (!e.part.empty()) {
        j["part"] = e.part;
    }
    if (!e.note.empty()) {
        j["note"] = e.note;
    }
    return j;
}

void write_event_log(std::ostream& out, const std::vector<Event>& log) {
    for (const auto& e : log) {
        out << event_to_json(e).dump() << '\n';
    }
}

EpisodeState EpisodeState::start(ArticulatedObject obj, SimConfig cfg) {
    cfg.validate();
    EpisodeState st;
    st.object = std::move(obj);
    st.config = cfg;
    st.initial_states = st.object.states();
    st.effect_flags = st.object.active_effects();
    st.triggered_effects = st.effect_flags;
    return st;
}

StepOutcome grasp(EpisodeState& st, const std::string& part_id) {
    if (st.held_part) {
        throw Error(ErrorCode::AlreadyHolding, "already holding '" + *st.held_part + "'");
    }
    const auto pts = contact_points(st.object, part_id);
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) {
        nearest = std::min(nearest, (p - st.gripper.translation).norm());
    }
    if (!(nearest <= st.config.grasp_radius)) {
        log_event(st, EventType::Grasp, StepOutcome::grasp_failed(), part_id);
        return StepOutcome::grasp_failed();
    }
    st.held_part = part_id;
    st.driven_joint = st.object.driving_joint(part_id);
    st.grip_in_part = geom::pose_compose(geom::pose_inverse(st.object.part_motion(part_id)), st.gripper);
    log_event(st, EventType::Grasp, StepOutcome::ok(), part_id);
    return StepOutcome::ok();
}

void release(EpisodeState& st) {
    if (!st.held_part) {
        return;
    }
    const std::string part = *st.held_part;
    if (st.driven_joint) {
        const auto& j = st.object.part(*st.driven_joint).joint;
        if (j && j->spring_return) {
            st.object.set_state(*st.driven_joint, 0.0);
        }
    }
    st.held_part.reset();
    st.driven_joint.reset();
    log_event(st, EventType::Release, StepOutcome::ok(), part);
    apply_latches(st);
    refresh_effects(st);
}

StepOutcome step(EpisodeState& st, const Pose& commanded) {
    if (!st.held_part) {
        throw Error(ErrorCode::NotHolding, "step requires a held part");
    }
    auto& obj = st.object;
    const Vec3 here = st.gripper.translation;
    const Vec3 target = commanded.translation;
    StepOutcome out = StepOutcome::ok();

    if (!st.driven_joint) {
        if ((target - here).norm() > 1e-12) {
            out = StepOutcome::blocked(BlockReason::Limit);
        }
    } else {
        const std::string& id = *st.driven_joint;
        const scene::JointSpec j = obj.world_joint(id);
        double requested = 0.0;
        if (j.kind == program::JointKind::Revolute) {
            const Vec3& u = j.axis_dir;
            Vec3 a = here - j.axis_point;
            Vec3 b = target - j.axis_point;
            a = a - u * u.dot(a);
            b = b - u * u.dot(b);
            if (a.norm() > 1e-12 && b.norm() > 1e-12) {
                requested = std::atan2(u.dot(a.cross(b)), a.dot(b));
            }
        } else {
            requested = (target - here).dot(j.axis_dir);
        }
        if (std::abs(requested) > 1e-15) {
            if (obj.is_locked(id)) {
                out = StepOutcome::blocked(BlockReason::Latch);
            } else {
                const double s = obj.state(id);
                const double wanted = s + requested;
                const double reachable = j.clamp(wanted);
                if (std::abs(reachable - wanted) > 1e-12) {
                    out = StepOutcome::blocked(BlockReason::Limit);
                }
                obj.set_state(id, reachable);
            }
        }
    }
    ++st.step;
    st.gripper = geom::pose_compose(obj.part_motion(*st.held_part), st.grip_in_part);
    if (out.is_ok() && (target - st.gripper.translation).norm() > st.config.slip_tolerance) {
        out = StepOutcome::slipped();
    }
    log_event(st, EventType::Step, out, *st.held_part);
    apply_latches(st);
    refresh_effects(st);
    if (out.kind == OutcomeKind::Slipped) {
        st.held_part.reset();
        st.driven_joint.reset();
    }
    return out;
}

void settle(EpisodeState& st, std::size_t n) {
    for (std::size_t i = 0; i < n && st.held_part; ++i) {
        step(st, st.gripper);
    }
}

std::vector<StepRecord> run_trajectory(EpisodeState& st, const traj::Trajectory& traj,
                                       std::size_t observe_every, const scene::ObservationConfig& obs,
                                       const ObservationHook& hook) {
    if (!st.held_part) {
        throw Error(ErrorCode::NotHolding, "run_trajectory requires an established grasp");
    }
    const std::string observed = st.driven_joint.value_or(*st.held_part);
    const std::uint64_t noise_base = obs.noise_seed.value_or(obs.seed);
    std::uint64_t observation = 0;
    auto observe = [&]() {
        scene::ObservationConfig cfg = obs;
        cfg.noise_seed = noise_base + observation++;
        return scene::observe_part(st.object, observed, cfg);
    };
    const PointCloud initial = observe_every > 0 ? observe() : PointCloud{};

    std::vector<StepRecord> records;
    for (std::size_t i = 1; i < traj.waypoints.size(); ++i) {
        StepRecord rec{step(st, traj.waypoints[i].pose), std::nullopt};
        bool keep_going = rec.outcome.kind != OutcomeKind::Slipped;
        if (keep_going && observe_every > 0 && i % observe_every == 0) {
            rec.clouds = std::make_pair(initial, observe());
            if (hook && !hook(i, rec.clouds->first, rec.clouds->second)) {
                keep_going = false;
            }
        }
        records.push_back(std::move(rec));
        if (!keep_going) {
            break;
        }
    }
    return records;
}

bool check_success(const EpisodeState& st, const std::string& target_part, double delta_target) {
    const auto driver = st.object.driving_joint(target_part);
    const std::string id = driver.value_or(target_part);
    const double s_final = st.object.state(id);
    const auto it = st.initial_states.find(id);
    const double s_initial = it == st.initial_states.end() ? 0.0 : it->second;

    const double needed = st.config.success_fraction * std::abs(delta_target);
    // 1e-9 slack keeps the boundary case (exactly the required fraction) inclusive under rounding.
    if (std::abs(s_final - s_initial) < needed - 1e-9) {
        return false;
    }
    if (st.step > st.config.max_steps) {
        return false;
    }
    std::vector<double> history;
    for (const auto& e : st.event_log) {
        if (e.type == EventType::Step) {
            const auto s = e.states.find(id);
            history.push_back(s == e.states.end() ? 0.0 : s->second);
        }
    }
    const std::size_t window = st.config.stability_window;
    if (history.size() < window + 1) {
        return false;
    }
    double worst = 0.0;
    for (std::size_t k = history.size() - window; k < history.size(); ++k) {
        worst = std::max(worst, std::abs(history[k] - history[k - 1]));
    }
    return worst < st.config.stability_eps;
}

}  // namespace artic::sim
