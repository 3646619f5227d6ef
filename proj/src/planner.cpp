#include "artic/planner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "artic/error.hpp"
#include "artic/trajectory.hpp"

namespace artic::planner {

using geom::PointCloud;
using geom::Vec3;
using nlohmann::json;

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::regex icase(const std::string& pattern) {
    return std::regex(pattern, std::regex::ECMAScript | std::regex::icase);
}

}  // namespace

std::string describe_histogram(const std::map<GAPartClass, std::size_t>& histogram) {
    std::vector<std::string> items;
    for (GAPartClass c : grounding::kAllClasses) {
        const auto it = histogram.find(c);
        if (it != histogram.end() && it->second > 0) {
            items.push_back(std::to_string(it->second) + " " + grounding::class_hyphenated(c));
        }
    }
    if (items.empty()) {
        return "There are no actionable parts on the object.";
    }
    std::string joined = items[0];
    if (items.size() == 2) {
        joined += " and " + items[1];
    } else if (items.size() > 2) {
        for (std::size_t i = 1; i + 1 < items.size(); ++i) {
            joined += ", " + items[i];
        }
        joined += " and " + items.back();
    }
    return "There are " + joined + " on the object.";
}

SceneDescription build_scene_description(const ArticulatedObject& obj) {
    SceneDescription d;
    d.histogram = scene::part_histogram(obj);
    d.text = describe_histogram(d.histogram);
    d.object_name = obj.name;
    return d;
}

// ---- mock backend

MockBackend::MockBackend(std::vector<Rule> rules) : rules_(std::move(rules)) {
    compiled_.reserve(rules_.size());
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        const auto& r = rules_[i];
        try {
            Compiled c{icase(r.instruction_pattern), std::nullopt, std::nullopt};
            if (r.failure_pattern) {
                c.failure = icase(*r.failure_pattern);
            }
            if (r.manual_pattern) {
                c.manual = icase(*r.manual_pattern);
            }
            compiled_.push_back(std::move(c));
        } catch (const std::regex_error& e) {
            throw SchemaError("/" + std::to_string(i), std::string("invalid regex: ") + e.what());
        }
    }
}

MockBackend::MockBackend(const MockBackend& other)
    : rules_(other.rules_), compiled_(other.compiled_), calls_(other.calls_.load()) {}

MockBackend MockBackend::from_json(const json& doc) {
    if (!doc.is_array()) {
        throw SchemaError("", "rules document must be an array");
    }
    std::vector<Rule> rules;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& r = doc[i];
        const std::string at = "/" + std::to_string(i);
        if (!r.is_object()) {
            throw SchemaError(at, "rule must be an object");
        }
        auto string_field = [&](const char* key, bool required) -> std::optional<std::string> {
            if (!r.contains(key)) {
                if (required) {
                    throw SchemaError(at + "/" + key, "missing field");
                }
                return std::nullopt;
            }
            if (!r.at(key).is_string()) {
                throw SchemaError(at + "/" + key, "expected a string");
            }
            return r.at(key).get<std::string>();
        };
        Rule rule;
        rule.instruction_pattern = *string_field("instruction_regex", true);
        rule.strategies = *string_field("strategies", true);
        rule.failure_pattern = string_field("failure_regex", false);
        rule.manual_pattern = string_field("manual_regex", false);
        if (r.contains("requires_classes")) {
            const auto& rc = r.at("requires_classes");
            if (!rc.is_array()) {
                throw SchemaError(at + "/requires_classes", "expected an array");
            }
            for (std::size_t k = 0; k < rc.size(); ++k) {
                const auto c = rc[k].is_string() ? grounding::parse_class(rc[k].get<std::string>()) : std::nullopt;
                if (!c) {
                    throw SchemaError(at + "/requires_classes/" + std::to_string(k), "unknown actionable class");
                }
                rule.requires_classes.push_back(*c);
            }
        }
        rules.push_back(std::move(rule));
    }
    return MockBackend(std::move(rules));
}

MockBackend MockBackend::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open rules file '" + path + "'");
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("", std::string("rules file is not JSON: ") + e.what());
    }
    return from_json(doc);
}

std::string MockBackend::interpret_text(const InterpretRequest& request) {
    ++calls_;
    const std::string description = lower(request.description);
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        const auto& r = rules_[i];
        const auto& c = compiled_[i];
        if (!std::regex_search(request.instruction, c.instruction)) {
            continue;
        }
        if (c.failure.has_value() != request.failure_note.has_value()) {
            continue;
        }
        if (c.failure && !std::regex_search(*request.failure_note, *c.failure)) {
            continue;
        }
        if (c.manual && !(request.manual && std::regex_search(*request.manual, *c.manual))) {
            continue;
        }
        const bool has_classes = std::all_of(r.requires_classes.begin(), r.requires_classes.end(), [&](GAPartClass k) {
            return description.find(" " + grounding::class_hyphenated(k)) != std::string::npos;
        });
        if (!has_classes) {
            continue;
        }
        return r.strategies;
    }
    throw Error(ErrorCode::NoRuleMatched, "no rule matches instruction '" + request.instruction + "'");
}

MockBackend mock_backend(const json& rules) { return MockBackend::from_json(rules); }

std::string build_prompt(const InterpretRequest& request) {
    std::ostringstream p;
    p << "Scene: " << request.description << "\n";
    p << "Instruction: " << request.instruction << "\n";
    if (request.manual) {
        p << "Manual: " << *request.manual << "\n";
    }
    if (request.failure_note) {
        p << "Failure: " << *request.failure_note << "\n";
    }
    p << "Answer with strategies in the form \"Strategy 1: 1 step: (1) (Door, revolute, +90)\", one per line.\n";
    return p.str();
}

// ---- decisions

const char* decision_name(Decision d) {
    switch (d) {
    case Decision::Continue: return "continue";
    case Decision::TransitionToNextStep: return "transition";
    case Decision::HaltAndReplan: return "halt_and_replan";
    case Decision::Success: return "success";
    }
    return "continue";
}

Decision decide(const PlannerObservation& obs, const DecisionConfig& cfg) {
    // Signed quantities are aligned with the commanded direction first, so
    // closing motions (negative targets) follow the same rules as opening.
    const double sign = (obs.part_target != 0.0 ? obs.part_target : obs.gripper_target) < 0.0 ? -1.0 : 1.0;
    const double target = std::abs(obs.part_target);
    const double estimate = sign * obs.part_estimate;
    const double progress = std::abs(obs.gripper_progress);
    const bool final_unit = obs.unit_index + 1 >= obs.unit_count;

    if (std::abs(estimate - target) <= cfg.done_frac * target) {
        return final_unit ? Decision::Success : Decision::TransitionToNextStep;
    }
    if (progress > 0.0 && progress >= cfg.check_frac * std::abs(obs.gripper_target) &&
        estimate < cfg.follow_frac * progress) {
        return Decision::HaltAndReplan;
    }
    return Decision::Continue;
}

// ---- grounding

GroundingContext GroundingContext::synthetic(std::size_t dimension, double sigma, std::size_t per_class,
                                             std::uint64_t seed) {
    GroundingContext ctx;
    ctx.features = grounding::SyntheticFeatureModel(dimension, sigma, seed);
    ctx.store = ctx.features.make_store(per_class, seed + 1);
    return ctx;
}

namespace {

std::vector<GAPartClass> synonym_classes(const std::string& word) {
    using C = GAPartClass;
    static const std::map<std::string, std::vector<GAPartClass>> table = {
        {"door", {C::HingeDoor}},
        {"drawer", {C::SliderDrawer}},
        {"button", {C::SliderButton}},
        {"handle", {C::LineFixedHandle, C::RoundFixedHandle}},
        {"lid", {C::HingeLid, C::SliderLid}},
        {"knob", {C::HingeKnob}},
    };
    std::string w = lower(trim(word));
    auto it = table.find(w);
    if (it == table.end() && w.size() > 1 && w.back() == 's') {
        it = table.find(w.substr(0, w.size() - 1));
    }
    if (it == table.end()) {
        // last word of a compound name ("microwave door")
        const auto sp = w.find_last_of(' ');
        if (sp != std::string::npos) {
            return synonym_classes(w.substr(sp + 1));
        }
        return {};
    }
    return it->second;
}

// Joint kind that moves the part, through its parents for fixed parts.
std::optional<program::JointKind> effective_kind(const ArticulatedObject& obj, const std::string& id) {
    const auto driver = obj.driving_joint(id);
    if (!driver) {
        return std::nullopt;
    }
    return obj.part(*driver).joint->kind;
}

std::string pick(const std::vector<std::string>& ids, const std::optional<std::string>& hint) {
    if (hint && std::find(ids.begin(), ids.end(), *hint) != ids.end()) {
        return *hint;
    }
    return ids.front();
}

}  // namespace

ResolvedPart resolve_part(const ArticulatedObject& obj, const ActionUnit& unit,
                          const std::optional<std::string>& hint, const GroundingContext& grounding,
                          std::mt19937_64& rng) {
    const std::string name = lower(trim(unit.part_name));
    std::vector<std::string> matches;

    for (const auto& p : obj.parts()) {
        if (lower(p.semantic_name) == name || lower(p.id) == name) {
            matches.push_back(p.id);
        }
    }
    if (!matches.empty()) {
        const std::string id = pick(matches, hint);
        return {id, obj.part(id).gapart_class, "semantic_name"};
    }

    // An explicit actionable-part name ("hinge-door") bypasses grounding.
    if (const auto cls = grounding::parse_class(name)) {
        for (const auto& p : obj.parts()) {
            if (p.gapart_class == *cls) {
                matches.push_back(p.id);
            }
        }
        if (!matches.empty()) {
            const std::string id = pick(matches, hint);
            return {id, *cls, "class_name"};
        }
    }

    const auto classes = synonym_classes(name);
    for (const auto& p : obj.parts()) {
        if (std::find(classes.begin(), classes.end(), p.gapart_class) != classes.end()) {
            matches.push_back(p.id);
        }
    }
    if (!matches.empty()) {
        const std::string id = pick(matches, hint);
        return {id, obj.part(id).gapart_class, "synonym"};
    }

    // Fall back to classifying each movable candidate from its pooled feature.
    if (!grounding.store.empty()) {
        std::vector<std::string> candidates;
        if (hint && obj.has_part(*hint)) {
            candidates.push_back(*hint);
        }
        for (const auto& p : obj.parts()) {
            if (!hint || p.id != *hint) {
                candidates.push_back(p.id);
            }
        }
        for (const auto& id : candidates) {
            const auto kind = effective_kind(obj, id);
            if (!kind || *kind != unit.joint) {
                continue;
            }
            const auto feature = grounding.features.sample(obj.part(id).gapart_class, rng);
            const auto g = grounding::knn_ground(grounding.store, feature, grounding.k);
            const auto label_kind = grounding::class_joint(g.label);
            if (!label_kind || *label_kind == unit.joint) {
                return {id, g.label, "knn"};
            }
        }
    }
    throw Error(ErrorCode::UnknownPart, "cannot resolve part '" + unit.part_name + "'");
}

std::string failure_note_for(const ActionUnit& unit, const ArticulatedObject& obj, const std::string& part_id) {
    const std::string name = lower(trim(unit.part_name));
    bool button = name.find("button") != std::string::npos;
    if (obj.has_part(part_id)) {
        button = button || obj.part(part_id).gapart_class == GAPartClass::SliderButton;
    }
    const char* verb = unit.delta > 0.0 ? "opening" : (button ? "pressing" : "closing");
    return std::string("It fails when ") + verb + " the " + name;
}

// ---- execution

namespace {

enum class UnitStatus { Done, Halted, Failed };

struct UnitResult {
    UnitStatus status = UnitStatus::Failed;
    std::string reason;
    std::string part_id;
    double joint_delta = 0.0;
};

// Rotation angle of the rigid estimate about `axis` (signed), or the
// translation along it: the displacement the estimate implies for the
// expected degree of freedom.
double project_estimate(const joint::RigidTransformEstimate& est, program::JointKind kind, const Vec3& axis) {
    if (kind == program::JointKind::Prismatic) {
        return est.translation.dot(axis);
    }
    const auto aa = geom::rotation_angle_axis(est.rotation);
    return aa.axis.dot(axis) < 0.0 ? -aa.angle : aa.angle;
}

struct PlanRun {
    sim::EpisodeState& ep;
    const PlannerConfig& cfg;
    TaskResult& result;
    std::uint64_t seed;
    std::uint64_t observations = 0;

    Decision decide_with(const PlannerObservation& obs) const {
        return cfg.policy ? cfg.policy(obs) : decide(obs, cfg.decision);
    }

    UnitResult execute(const ActionUnit& unit, const std::string& part_id, std::size_t unit_index,
                       std::size_t unit_count, std::size_t attempt) {
        UnitResult ur;
        ur.part_id = part_id;
        auto& obj = ep.object;
        const auto driver = obj.driving_joint(part_id);
        if (!driver) {
            ur.reason = "part '" + part_id + "' is not articulated";
            return ur;
        }
        const scene::JointSpec joint = obj.world_joint(*driver);
        if (joint.kind != unit.joint) {
            ur.reason = "part '" + part_id + "' moves on a " + program::joint_kind_name(joint.kind) + " joint";
            return ur;
        }

        const auto grasp_choice = traj::choose_grasp(obj, part_id);
        ep.gripper = grasp_choice.pose;
        if (!sim::grasp(ep, part_id).is_ok()) {
            ur.reason = "grasp failed on '" + part_id + "'";
            return ur;
        }

        traj::TrajectoryOptions topts;
        topts.current_state = obj.state(*driver);
        topts.prismatic_extent = obj.current_box(*driver).extent_along(joint.axis_dir);
        const traj::Trajectory t = traj::generate_trajectory(ep.gripper, joint, unit.delta, topts);
        for (const auto& w : t.warnings) {
            result.warnings.push_back(w);
        }
        ur.joint_delta = t.joint_delta;

        PlannerObservation obs;
        obs.gripper_target = t.joint_delta;
        obs.part_target = t.joint_delta;
        obs.unit_index = unit_index;
        obs.unit_count = unit_count;

        auto record = [&](std::size_t waypoint, Decision d) {
            result.decisions.push_back({attempt, unit_index, ep.step, waypoint, obs, d});
            return d;
        };

        if (std::abs(t.joint_delta) < 1e-12) {
            // Already at the limit in the requested direction.
            obs.gripper_progress = 0.0;
            obs.part_estimate = 0.0;
            record(0, unit_index + 1 >= unit_count ? Decision::Success : Decision::TransitionToNextStep);
            ur.status = UnitStatus::Done;
            sim::settle(ep, ep.config.stability_window);
            return ur;
        }

        const Vec3 axis = joint.axis_dir;
        const Vec3 reference = obj.current_box(part_id).center;
        joint::RansacParams ransac = cfg.ransac;
        std::optional<Decision> terminal;
        std::size_t last_waypoint = 0;

        auto estimate = [&](const PointCloud& x0, const PointCloud& xt) -> std::optional<double> {
            ransac.seed = seed + 7919 * (observations + 1);
            try {
                const auto rigid = joint::ransac_align(x0, xt, ransac);
                const auto je = joint::infer_joint(rigid, reference, axis);
                const bool same_kind = (je.kind == joint::MotionKind::Revolute) == (unit.joint == program::JointKind::Revolute) &&
                                       je.kind != joint::MotionKind::Stationary;
                return same_kind ? je.displacement : project_estimate(rigid, unit.joint, axis);
            } catch (const Error&) {
                return std::nullopt;
            }
        };

        scene::ObservationConfig ocfg = cfg.observation;
        ocfg.seed = seed + 104729 * (observations + 1);
        ocfg.noise_seed = ocfg.seed + 1;
        ++observations;

        const auto hook = [&](std::size_t waypoint, const PointCloud& x0, const PointCloud& xt) {
            last_waypoint = waypoint;
            const auto s = estimate(x0, xt);
            ++observations;
            if (!s) {
                return true;
            }
            obs.gripper_progress = t.joint_delta * static_cast<double>(waypoint) / static_cast<double>(traj::kIntervals);
            obs.part_estimate = *s;
            const Decision d = record(waypoint, decide_with(obs));
            if (d == Decision::Continue) {
                return true;
            }
            terminal = d;
            return false;
        };
        const auto records = sim::run_trajectory(ep, t, cfg.observe_every, ocfg, hook);
        const bool slipped = !records.empty() && records.back().outcome.kind == sim::OutcomeKind::Slipped;

        if (!terminal) {
            // Commanded motion exhausted (or the grip was lost) without a
            // verdict: the part did not follow.
            obs.gripper_progress = t.joint_delta * static_cast<double>(records.size()) / static_cast<double>(traj::kIntervals);
            const double s_now = obj.state(*driver) - topts.current_state;
            obs.part_estimate = s_now;
            Decision d = decide_with(obs);
            if (d == Decision::Continue) {
                d = Decision::HaltAndReplan;
            }
            record(std::max(last_waypoint, records.size()), d);
            terminal = d;
        }
        if (*terminal == Decision::HaltAndReplan) {
            ur.status = UnitStatus::Halted;
            ur.reason = slipped ? "gripper slipped off '" + part_id + "'" : "part '" + part_id + "' did not follow the gripper";
            return ur;
        }
        if (slipped) {
            ur.reason = "gripper slipped off '" + part_id + "'";
            return ur;
        }
        sim::settle(ep, ep.config.stability_window);
        ur.status = UnitStatus::Done;
        return ur;
    }
};

void ingest(std::vector<std::pair<Strategy, std::size_t>>& queue, const std::string& text, std::size_t round) {
    StrategySet set;
    try {
        set = program::parse_strategies(text);
    } catch (const SyntaxError& e) {
        throw Error(ErrorCode::BackendFormatError, std::string("backend output does not parse: ") + e.what());
    }
    for (auto& s : set.strategies) {
        queue.emplace_back(std::move(s), round);
    }
}

}  // namespace

TaskResult run_global_plan(ArticulatedObject obj, const TaskRequest& request, InterpreterBackend& backend,
                           const GroundingContext& grounding, const PlannerConfig& cfg, std::uint64_t seed) {
    TaskResult result;
    const SceneDescription description = build_scene_description(obj);
    result.description = description.text;

    // Ground-truth target, fixed at the initial state.
    std::optional<std::pair<std::string, double>> truth;
    if (request.target) {
        const auto driver = obj.driving_joint(request.target->part);
        if (!driver) {
            throw Error(ErrorCode::InvariantViolation, "target part '" + request.target->part + "' is not articulated");
        }
        const auto joint = obj.world_joint(*driver);
        const double s0 = obj.state(*driver);
        const double want =
            traj::joint_delta_for(joint, request.target->delta, obj.current_box(*driver).extent_along(joint.axis_dir));
        truth = std::make_pair(request.target->part, joint.clamp(s0 + want) - s0);
    }

    sim::EpisodeState ep = sim::EpisodeState::start(std::move(obj), cfg.sim);
    std::mt19937_64 rng(seed);

    InterpretRequest ask{request.instruction, description.text, request.manual, std::nullopt};
    std::vector<std::pair<Strategy, std::size_t>> queue;
    ++result.backend_calls;
    std::string text;
    try {
        text = backend.interpret_text(ask);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NoRuleMatched || e.code() == ErrorCode::BackendUnavailable) {
            throw Error(ErrorCode::NoStrategies, std::string("interpreter produced no strategies: ") + e.what());
        }
        throw;
    }
    ingest(queue, text, 0);
    if (queue.empty()) {
        throw Error(ErrorCode::NoStrategies, "interpreter produced no strategies");
    }

    PlanRun run{ep, cfg, result, seed};
    std::size_t round = 0;
    for (std::size_t next = 0; next < queue.size() && !result.success; ++next) {
        if (ep.step >= ep.config.max_steps) {
            result.failure_notes.push_back("step budget exhausted");
            break;
        }
        StrategyAttempt attempt;
        attempt.strategy = queue[next].first;
        attempt.round = queue[next].second;
        ++result.strategies_tried;
        const std::size_t attempt_index = result.attempts.size();

        std::optional<ActionUnit> failed_unit;
        std::string failed_part;
        std::string last_part;
        double last_delta = 0.0;
        bool completed = true;
        const auto& steps = attempt.strategy.steps;
        for (std::size_t u = 0; u < steps.size(); ++u) {
            UnitResult ur;
            try {
                const ResolvedPart rp = resolve_part(ep.object, steps[u], request.target_hint, grounding, rng);
                attempt.parts.push_back(rp);
                ur = run.execute(steps[u], rp.part_id, u, steps.size(), attempt_index);
            } catch (const Error& e) {
                ur.status = UnitStatus::Failed;
                ur.reason = e.what();
            }
            if (ur.status != UnitStatus::Done) {
                completed = false;
                attempt.halted = ur.status == UnitStatus::Halted;
                attempt.failure = ur.reason;
                failed_unit = steps[u];
                failed_part = ur.part_id;
                break;
            }
            last_part = ur.part_id;
            last_delta = ur.joint_delta;
            if (u + 1 < steps.size()) {
                sim::release(ep);
            }
        }

        if (completed) {
            const std::string part = truth ? truth->first : last_part;
            const double delta = truth ? truth->second : last_delta;
            bool ok = sim::check_success(ep, part, delta);
            if (ok && request.target && request.target->required_effect) {
                ok = ep.triggered_effects.count(*request.target->required_effect) > 0;
            }
            attempt.succeeded = ok;
            if (!ok) {
                attempt.failure = "strategy finished but the task goal was not reached";
            }
        }
        sim::release(ep);
        result.success = attempt.succeeded;
        result.attempts.push_back(attempt);

        if (attempt.halted && failed_unit) {
            const std::string note = failure_note_for(*failed_unit, ep.object, failed_part);
            result.failure_notes.push_back(note);
            InterpretRequest retry = ask;
            retry.failure_note = note;
            ++result.backend_calls;
            ++round;
            try {
                ingest(queue, backend.interpret_text(retry), round);
            } catch (const Error& e) {
                result.failure_notes.push_back(std::string("replanning failed: ") + e.what());
            }
        }
    }

    result.triggered_effects = ep.triggered_effects;
    result.final_states = ep.object.states();
    result.steps = ep.step;
    result.events = std::move(ep.event_log);
    return result;
}

json task_result_to_json(const TaskResult& r) {
    json attempts = json::array();
    for (const auto& a : r.attempts) {
        json parts = json::array();
        for (const auto& p : a.parts) {
            parts.push_back({{"part", p.part_id}, {"class", grounding::class_label(p.actionable_class)}, {"method", p.method}});
        }
        StrategySet one{{a.strategy}};
        one.strategies[0].index = 1;
        std::string text = program::serialize_strategies(one);
        const auto colon = text.find(':');
        text = "Strategy " + std::to_string(a.strategy.index) + text.substr(colon);
        attempts.push_back({{"strategy", text},
                            {"round", a.round},
                            {"succeeded", a.succeeded},
                            {"halted", a.halted},
                            {"failure", a.failure},
                            {"parts", parts}});
    }
    json decisions = json::array();
    for (const auto& d : r.decisions) {
        decisions.push_back({{"attempt", d.attempt},
                             {"unit", d.unit_index},
                             {"step", d.step},
                             {"waypoint", d.waypoint},
                             {"gripper_target", d.observation.gripper_target},
                             {"gripper_progress", d.observation.gripper_progress},
                             {"part_target", d.observation.part_target},
                             {"part_estimate", d.observation.part_estimate},
                             {"decision", decision_name(d.decision)}});
    }
    return {{"success", r.success},
            {"description", r.description},
            {"backend_calls", r.backend_calls},
            {"strategies_tried", r.strategies_tried},
            {"attempts", attempts},
            {"decisions", decisions},
            {"failure_notes", r.failure_notes},
            {"warnings", r.warnings},
            {"effects", r.triggered_effects},
            {"final_states", r.final_states},
            {"steps", r.steps}};
}

}  // namespace artic::planner
