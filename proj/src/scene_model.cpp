#include "artic/scene_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "artic/error.hpp"

namespace artic::scene {

using nlohmann::json;

Pose JointSpec::motion(double s) const {
    if (kind == JointKind::Revolute) {
        return geom::rotation_about_line(axis_point, axis_dir, s);
    }
    return {geom::Rotation::identity(), axis_dir * s};
}

double JointSpec::clamp(double s) const { return std::clamp(s, lower, upper); }

bool past_threshold(double state, double threshold) {
    return threshold >= 0.0 ? state >= threshold : state <= threshold;
}

ArticulatedObject::ArticulatedObject(std::string name_, std::vector<Part> parts,
                                     std::vector<LatchRule> latches, std::vector<EffectRule> effects,
                                     std::map<std::string, double> states)
    : name(std::move(name_)), parts_(std::move(parts)), latches_(std::move(latches)),
      effects_(std::move(effects)), states_(std::move(states)) {
    validate();
    reset_latches();
}

void ArticulatedObject::validate() {
    index_.clear();
    for (std::size_t i = 0; i < parts_.size(); ++i) {
        auto& p = parts_[i];
        if (p.id.empty()) {
            throw Error(ErrorCode::InvariantViolation, "part id must be non-empty");
        }
        if (!index_.emplace(p.id, i).second) {
            throw Error(ErrorCode::InvariantViolation, "duplicate part id '" + p.id + "'");
        }
        geom::validate_box(p.box);
        if (p.joint) {
            auto& j = *p.joint;
            const double n = j.axis_dir.norm();
            if (!(n > 0.0) || !std::isfinite(n)) {
                throw Error(ErrorCode::InvariantViolation, "part '" + p.id + "': axis_dir must be non-zero");
            }
            j.axis_dir = j.axis_dir / n;
            if (!(j.lower < j.upper)) {
                throw Error(ErrorCode::InvariantViolation, "part '" + p.id + "': joint limits need lo < hi");
            }
            if (j.lower > 0.0 || j.upper < 0.0) {
                throw Error(ErrorCode::InvariantViolation, "part '" + p.id + "': zero state outside limits");
            }
            if (j.open_sign != 1 && j.open_sign != -1) {
                throw Error(ErrorCode::InvariantViolation, "part '" + p.id + "': open_sign must be +1 or -1");
            }
        }
    }
    for (const auto& p : parts_) {
        if (p.parent && !index_.count(*p.parent)) {
            throw Error(ErrorCode::InvariantViolation, "part '" + p.id + "' has unknown parent '" + *p.parent + "'");
        }
    }
    // Parent chains must terminate.
    for (const auto& p : parts_) {
        std::size_t hops = 0;
        const Part* cur = &p;
        while (cur->parent) {
            if (++hops > parts_.size()) {
                throw Error(ErrorCode::InvariantViolation, "parent cycle through part '" + p.id + "'");
            }
            cur = &parts_[index_.at(*cur->parent)];
        }
    }
    for (auto& [id, s] : states_) {
        if (!index_.count(id)) {
            throw Error(ErrorCode::InvariantViolation, "state given for unknown part '" + id + "'");
        }
        const Part& p = parts_[index_.at(id)];
        if (!p.joint) {
            throw Error(ErrorCode::InvariantViolation, "state given for fixed part '" + id + "'");
        }
        if (!std::isfinite(s) || s < p.joint->lower || s > p.joint->upper) {
            throw Error(ErrorCode::InvariantViolation, "state of '" + id + "' outside its limits");
        }
    }
    for (const auto& p : parts_) {
        if (p.joint) {
            states_.emplace(p.id, 0.0);
        }
    }
    auto jointed = [&](const std::string& id) { return index_.count(id) && parts_[index_.at(id)].joint; };
    for (const auto& l : latches_) {
        if (!jointed(l.locked_joint) || !jointed(l.unlocking_joint)) {
            throw Error(ErrorCode::InvariantViolation,
                        "latch references missing or fixed part ('" + l.locked_joint + "', '" +
                            l.unlocking_joint + "')");
        }
        if (l.locked_joint == l.unlocking_joint) {
            throw Error(ErrorCode::InvariantViolation, "latch locks its own unlocking joint");
        }
        if (l.release_offset < 0.0) {
            throw Error(ErrorCode::InvariantViolation, "latch release_offset must be >= 0");
        }
    }
    for (const auto& e : effects_) {
        if (!jointed(e.trigger_joint)) {
            throw Error(ErrorCode::InvariantViolation, "effect references missing or fixed part '" + e.trigger_joint + "'");
        }
        if (e.effect.empty()) {
            throw Error(ErrorCode::InvariantViolation, "effect name must be non-empty");
        }
    }
}

bool ArticulatedObject::has_part(const std::string& id) const { return index_.count(id) > 0; }

const Part& ArticulatedObject::part(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) {
        throw Error(ErrorCode::UnknownPart, "no part '" + id + "' in '" + name + "'");
    }
    return parts_[it->second];
}

std::vector<std::string> ArticulatedObject::children_of(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& p : parts_) {
        if (p.parent && *p.parent == id) {
            out.push_back(p.id);
        }
    }
    return out;
}

double ArticulatedObject::state(const std::string& id) const {
    part(id);
    const auto it = states_.find(id);
    return it == states_.end() ? 0.0 : it->second;
}

void ArticulatedObject::set_state(const std::string& id, double s) {
    const Part& p = part(id);
    if (!p.joint) {
        throw Error(ErrorCode::InvariantViolation, "part '" + id + "' has no joint");
    }
    if (!std::isfinite(s) || s < p.joint->lower || s > p.joint->upper) {
        throw Error(ErrorCode::InvariantViolation, "state " + std::to_string(s) + " of '" + id + "' outside its limits");
    }
    states_[id] = s;
}

bool ArticulatedObject::is_locked(const std::string& joint_id) const {
    for (std::size_t i = 0; i < latches_.size(); ++i) {
        if (!released_[i] && latches_[i].locked_joint == joint_id) {
            return true;
        }
    }
    return false;
}

void ArticulatedObject::reset_latches() {
    released_.assign(latches_.size(), false);
    for (std::size_t i = 0; i < latches_.size(); ++i) {
        const auto& l = latches_[i];
        released_[i] = std::abs(state(l.locked_joint)) > 1e-12 ||
                       past_threshold(state(l.unlocking_joint), l.threshold);
    }
}

std::vector<std::size_t> ArticulatedObject::apply_latch_rules() {
    std::vector<std::size_t> released_now;
    for (std::size_t i = 0; i < latches_.size(); ++i) {
        const auto& l = latches_[i];
        if (released_[i] || !past_threshold(state(l.unlocking_joint), l.threshold)) {
            continue;
        }
        released_[i] = true;
        released_now.push_back(i);
        const JointSpec& j = *part(l.locked_joint).joint;
        const double openness = j.open_sign * state(l.locked_joint);
        if (openness < l.release_offset) {
            states_[l.locked_joint] = j.clamp(j.open_sign * l.release_offset);
        }
    }
    return released_now;
}

std::set<std::string> ArticulatedObject::active_effects() const {
    std::set<std::string> out;
    for (const auto& e : effects_) {
        if (past_threshold(state(e.trigger_joint), e.threshold)) {
            out.insert(e.effect);
        }
    }
    return out;
}

std::optional<std::string> ArticulatedObject::driving_joint(const std::string& id) const {
    const Part* cur = &part(id);
    while (true) {
        if (cur->joint) {
            return cur->id;
        }
        if (!cur->parent) {
            return std::nullopt;
        }
        cur = &part(*cur->parent);
    }
}

Pose ArticulatedObject::part_motion(const std::string& id) const {
    const Part& p = part(id);
    Pose m = p.parent ? part_motion(*p.parent) : Pose::identity();
    if (p.joint) {
        m = geom::pose_compose(m, p.joint->motion(state(id)));
    }
    return m;
}

JointSpec ArticulatedObject::world_joint(const std::string& id) const {
    const Part& p = part(id);
    if (!p.joint) {
        throw Error(ErrorCode::InvariantViolation, "part '" + id + "' has no joint");
    }
    JointSpec j = *p.joint;
    if (p.parent) {
        const Pose pm = part_motion(*p.parent);
        j.axis_point = geom::pose_apply(pm, j.axis_point);
        j.axis_dir = pm.rotation.rotate(j.axis_dir);
    }
    return j;
}

OrientedBox ArticulatedObject::current_box(const std::string& id) const {
    return geom::transform_box(part_motion(id), part(id).box);
}

std::pair<Vec3, Vec3> ArticulatedObject::bounds(double margin) const {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};
    if (parts_.empty()) {
        return {Vec3{-margin, -margin, -margin}, Vec3{margin, margin, margin}};
    }
    for (const auto& p : parts_) {
        const OrientedBox b = current_box(p.id);
        for (int corner = 0; corner < 8; ++corner) {
            const Vec3 local{(corner & 1 ? 1.0 : -1.0) * b.half_extents.x,
                             (corner & 2 ? 1.0 : -1.0) * b.half_extents.y,
                             (corner & 4 ? 1.0 : -1.0) * b.half_extents.z};
            const Vec3 w = geom::pose_apply(b.pose(), local);
            lo = {std::min(lo.x, w.x), std::min(lo.y, w.y), std::min(lo.z, w.z)};
            hi = {std::max(hi.x, w.x), std::max(hi.y, w.y), std::max(hi.z, w.z)};
        }
    }
    const Vec3 m{margin, margin, margin};
    return {lo - m, hi + m};
}

std::map<std::string, Pose> forward_state(const ArticulatedObject& obj) {
    std::map<std::string, Pose> out;
    for (const auto& p : obj.parts()) {
        out.emplace(p.id, obj.current_box(p.id).pose());
    }
    return out;
}

std::vector<std::size_t> outlier_indices(const ObservationConfig& cfg) {
    if (!(cfg.outlier_frac >= 0.0 && cfg.outlier_frac < 1.0)) {
        throw std::invalid_argument("outlier_frac must lie in [0, 1)");
    }
    const auto count = static_cast<std::size_t>(std::llround(cfg.outlier_frac * static_cast<double>(cfg.points)));
    std::vector<std::size_t> idx(cfg.points);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

PointCloud observe_part(const ArticulatedObject& obj, const std::string& part_id,
                        const ObservationConfig& cfg) {
    const Part& p = obj.part(part_id);
    if (cfg.points < 3) {
        throw std::invalid_argument("observe_part: at least 3 points required");
    }
    PointCloud cloud = geom::transform_cloud(obj.part_motion(part_id),
                                             geom::sample_box_surface(p.box, cfg.points, cfg.seed));
    std::mt19937_64 rng(cfg.noise_seed.value_or(cfg.seed) + 0x51ed2701u);
    if (cfg.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
        for (auto& pt : cloud.points) {
            pt += Vec3{noise(rng), noise(rng), noise(rng)};
        }
    }
    const auto outliers = outlier_indices(cfg);
    if (!outliers.empty()) {
        const auto [lo, hi] = obj.bounds(0.1);
        std::uniform_real_distribution<double> ux(lo.x, hi.x), uy(lo.y, hi.y), uz(lo.z, hi.z);
        for (std::size_t i : outliers) {
            cloud[i] = {ux(rng), uy(rng), uz(rng)};
        }
    }
    return cloud;
}

std::map<GAPartClass, std::size_t> part_histogram(const ArticulatedObject& obj) {
    std::map<GAPartClass, std::size_t> h;
    for (const auto& p : obj.parts()) {
        ++h[p.gapart_class];
    }
    return h;
}

namespace {

const json& field(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) {
        throw SchemaError(path, "expected an object");
    }
    const auto it = j.find(key);
    if (it == j.end()) {
        throw SchemaError(path + "." + key, "missing required field");
    }
    return *it;
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) {
        throw SchemaError(path, "expected a number");
    }
    return j.get<double>();
}

std::string string_field(const json& j, const std::string& key, const std::string& path) {
    const json& v = field(j, key, path);
    if (!v.is_string()) {
        throw SchemaError(path + "." + key, "expected a string");
    }
    return v.get<std::string>();
}

Vec3 vec3(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) {
        throw SchemaError(path, "expected [x, y, z]");
    }
    return {number(j[0], path + "[0]"), number(j[1], path + "[1]"), number(j[2], path + "[2]")};
}

OrientedBox box(const json& j, const std::string& path) {
    OrientedBox b;
    b.center = vec3(field(j, "center", path), path + ".center");
    b.half_extents = vec3(field(j, "half_extents", path), path + ".half_extents");
    if (j.contains("rotation")) {
        const json& r = j["rotation"];
        if (!r.is_array() || r.size() != 4) {
            throw SchemaError(path + ".rotation", "expected [w, x, y, z]");
        }
        try {
            b.rotation = r.get<geom::Rotation>();
        } catch (const std::exception& e) {
            throw SchemaError(path + ".rotation", e.what());
        }
    }
    return b;
}

JointSpec joint(const json& j, const std::string& path) {
    JointSpec spec;
    const std::string kind = string_field(j, "kind", path);
    const auto k = program::parse_joint_kind(kind);
    if (!k) {
        throw SchemaError(path + ".kind", "unknown joint kind '" + kind + "'");
    }
    spec.kind = *k;
    spec.axis_point = vec3(field(j, "axis_point", path), path + ".axis_point");
    spec.axis_dir = vec3(field(j, "axis_dir", path), path + ".axis_dir");
    const json& lim = field(j, "limits", path);
    if (!lim.is_array() || lim.size() != 2) {
        throw SchemaError(path + ".limits", "expected [lo, hi]");
    }
    spec.lower = number(lim[0], path + ".limits[0]");
    spec.upper = number(lim[1], path + ".limits[1]");
    if (j.contains("open_sign")) {
        spec.open_sign = static_cast<int>(number(j["open_sign"], path + ".open_sign"));
    }
    if (j.contains("spring_return")) {
        if (!j["spring_return"].is_boolean()) {
            throw SchemaError(path + ".spring_return", "expected a boolean");
        }
        spec.spring_return = j["spring_return"].get<bool>();
    }
    return spec;
}

}  // namespace

ArticulatedObject load_scene(const json& doc) {
    const std::string root = "$";
    const std::string name = string_field(doc, "name", root);
    const json& parts_json = field(doc, "parts", root);
    if (!parts_json.is_array()) {
        throw SchemaError("$.parts", "expected an array");
    }
    std::vector<Part> parts;
    for (std::size_t i = 0; i < parts_json.size(); ++i) {
        const std::string path = "$.parts[" + std::to_string(i) + "]";
        const json& pj = parts_json[i];
        Part p;
        p.id = string_field(pj, "id", path);
        p.semantic_name = string_field(pj, "semantic_name", path);
        const std::string cls = string_field(pj, "gapart_class", path);
        const auto c = grounding::parse_class(cls);
        if (!c) {
            throw SchemaError(path + ".gapart_class", "unknown GAPart class '" + cls + "'");
        }
        p.gapart_class = *c;
        p.box = box(field(pj, "box", path), path + ".box");
        const json& jj = field(pj, "joint", path);
        if (jj.is_string()) {
            if (jj.get<std::string>() != "fixed") {
                throw SchemaError(path + ".joint", "expected a joint object or \"fixed\"");
            }
        } else {
            p.joint = joint(jj, path + ".joint");
        }
        if (pj.contains("parent") && !pj["parent"].is_null()) {
            if (!pj["parent"].is_string()) {
                throw SchemaError(path + ".parent", "expected a part id or null");
            }
            p.parent = pj["parent"].get<std::string>();
        }
        if (pj.contains("grasp_sites")) {
            const json& gs = pj["grasp_sites"];
            if (!gs.is_array()) {
                throw SchemaError(path + ".grasp_sites", "expected an array");
            }
            for (std::size_t k = 0; k < gs.size(); ++k) {
                p.grasp_sites.push_back(vec3(gs[k], path + ".grasp_sites[" + std::to_string(k) + "]"));
            }
        }
        parts.push_back(std::move(p));
    }

    std::vector<LatchRule> latches;
    if (doc.contains("latches")) {
        const json& lj = doc["latches"];
        if (!lj.is_array()) {
            throw SchemaError("$.latches", "expected an array");
        }
        for (std::size_t i = 0; i < lj.size(); ++i) {
            const std::string path = "$.latches[" + std::to_string(i) + "]";
            LatchRule l;
            l.locked_joint = string_field(lj[i], "locked_joint", path);
            l.unlocking_joint = string_field(lj[i], "unlocking_joint", path);
            l.threshold = number(field(lj[i], "threshold", path), path + ".threshold");
            if (lj[i].contains("release_offset")) {
                l.release_offset = number(lj[i]["release_offset"], path + ".release_offset");
            }
            latches.push_back(std::move(l));
        }
    }

    std::vector<EffectRule> effects;
    if (doc.contains("effects")) {
        const json& ej = doc["effects"];
        if (!ej.is_array()) {
            throw SchemaError("$.effects", "expected an array");
        }
        for (std::size_t i = 0; i < ej.size(); ++i) {
            const std::string path = "$.effects[" + std::to_string(i) + "]";
            EffectRule e;
            e.trigger_joint = string_field(ej[i], "trigger_joint", path);
            e.threshold = number(field(ej[i], "threshold", path), path + ".threshold");
            e.effect = string_field(ej[i], "effect", path);
            effects.push_back(std::move(e));
        }
    }

    std::map<std::string, double> states;
    if (doc.contains("initial_states")) {
        const json& sj = doc["initial_states"];
        if (!sj.is_object()) {
            throw SchemaError("$.initial_states", "expected an object");
        }
        for (const auto& [id, v] : sj.items()) {
            states[id] = number(v, "$.initial_states." + id);
        }
    }
    return ArticulatedObject(name, std::move(parts), std::move(latches), std::move(effects), std::move(states));
}

ArticulatedObject load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path);
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("$", e.what());
    }
    return load_scene(doc);
}

json scene_to_json(const ArticulatedObject& obj) {
    json parts = json::array();
    for (const auto& p : obj.parts()) {
        json pj{{"id", p.id},
                {"semantic_name", p.semantic_name},
                {"gapart_class", grounding::class_label(p.gapart_class)},
                {"box", p.box},
                {"parent", p.parent ? json(*p.parent) : json(nullptr)},
                {"grasp_sites", p.grasp_sites}};
        if (p.joint) {
            const auto& j = *p.joint;
            pj["joint"] = json{{"kind", program::joint_kind_name(j.kind)},
                               {"axis_point", j.axis_point},
                               {"axis_dir", j.axis_dir},
                               {"limits", {j.lower, j.upper}},
                               {"open_sign", j.open_sign},
                               {"spring_return", j.spring_return}};
        } else {
            pj["joint"] = "fixed";
        }
        parts.push_back(std::move(pj));
    }
    json latches = json::array();
    for (const auto& l : obj.latches()) {
        latches.push_back({{"locked_joint", l.locked_joint},
                           {"unlocking_joint", l.unlocking_joint},
                           {"threshold", l.threshold},
                           {"release_offset", l.release_offset}});
    }
    json effects = json::array();
    for (const auto& e : obj.effects()) {
        effects.push_back({{"trigger_joint", e.trigger_joint}, {"threshold", e.threshold}, {"effect", e.effect}});
    }
    return json{{"name", obj.name},
                {"parts", std::move(parts)},
                {"latches", std::move(latches)},
                {"effects", std::move(effects)},
                {"initial_states", obj.states()}};
}

}  // namespace artic::scene
