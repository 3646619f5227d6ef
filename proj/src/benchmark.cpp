#include "artic/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "artic/error.hpp"
#include "artic/scene_model.hpp"

namespace artic::bench {

using nlohmann::json;
namespace fs = std::filesystem;

void TaskSpec::validate() const {
    if (trials < 1) {
        throw Error(ErrorCode::InvariantViolation, fmt::format("task {}: trials must be >= 1", id));
    }
    if (instruction_variants.empty()) {
        throw Error(ErrorCode::InvariantViolation, fmt::format("task {}: no instruction variants", id));
    }
    for (const auto& [part, r] : init_state_sampler) {
        if (r.lo > r.hi) {
            throw Error(ErrorCode::InvariantViolation, fmt::format("task {}: empty range for '{}'", id, part));
        }
    }
}

namespace {

std::string resolve_path(const std::string& base_dir, const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) {
        return p;
    }
    return (fs::path(base_dir) / p).lexically_normal().string();
}

template <typename T>
T field(const json& j, const char* key, const std::string& at) {
    if (!j.contains(key)) {
        throw SchemaError(at + "/" + key, "missing field");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(at + "/" + key, e.what());
    }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key, const std::string& at) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return field<T>(j, key, at);
}

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::vector<TaskSpec> load_specs(const json& doc, const std::string& base_dir) {
    if (!doc.is_object() || !doc.contains("tasks") || !doc.at("tasks").is_array()) {
        throw SchemaError("/tasks", "expected an array of tasks");
    }
    const std::string default_rules = doc.contains("rules") ? resolve_path(base_dir, field<std::string>(doc, "rules", "")) : "";
    const std::size_t default_trials = doc.value("trials", std::size_t{20});
    std::vector<TaskSpec> specs;
    const auto& tasks = doc.at("tasks");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& t = tasks[i];
        const std::string at = "/tasks/" + std::to_string(i);
        TaskSpec s;
        s.id = field<int>(t, "id", at);
        s.category = field<std::string>(t, "category", at);
        s.name = t.value("name", "");
        s.scene_file = resolve_path(base_dir, field<std::string>(t, "scene_file", at));
        s.instruction_variants = field<std::vector<std::string>>(t, "instructions", at);
        if (t.contains("init_state")) {
            for (const auto& [part, range] : t.at("init_state").items()) {
                const auto r = field<std::vector<double>>(t.at("init_state"), part.c_str(), at + "/init_state");
                if (r.size() != 2) {
                    throw SchemaError(at + "/init_state/" + part, "expected [lo, hi]");
                }
                s.init_state_sampler[part] = {r[0], r[1]};
            }
        }
        const json target = field<json>(t, "target", at);
        s.target_part = field<std::string>(target, "part", at + "/target");
        s.target_delta = field<double>(target, "delta", at + "/target");
        s.required_effect = optional_field<std::string>(t, "required_effect", at);
        s.manual = optional_field<std::string>(t, "manual", at);
        s.target_hint = optional_field<std::string>(t, "target_hint", at);
        const auto rules = optional_field<std::string>(t, "rules", at);
        s.rules_file = rules ? resolve_path(base_dir, *rules) : default_rules;
        if (s.rules_file.empty()) {
            throw SchemaError(at + "/rules", "no rules file for task");
        }
        s.trials = t.value("trials", default_trials);
        s.target_states = t.value("target_states", std::size_t{1});
        s.validate();
        specs.push_back(std::move(s));
    }
    return specs;
}

std::vector<TaskSpec> load_specs_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open benchmark specs '" + path + "'");
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("", std::string("specs file is not JSON: ") + e.what());
    }
    return load_specs(doc, fs::path(path).parent_path().string());
}

std::uint64_t trial_seed(std::uint64_t seed, int task_id, std::size_t trial) {
    return mix(seed ^ mix(static_cast<std::uint64_t>(task_id) * 0x100000001b3ULL ^ mix(trial)));
}

namespace {

struct TaskAssets {
    scene::ArticulatedObject object;
    std::shared_ptr<planner::MockBackend> backend;
    std::string error;
};

TrialLog run_trial(const TaskSpec& spec, const TaskAssets& assets, const planner::GroundingContext& grounding,
                   const BenchConfig& cfg, std::size_t trial, std::uint64_t seed) {
    TrialLog log;
    log.trial = trial;
    log.seed = trial_seed(seed, spec.id, trial);
    std::mt19937_64 rng(log.seed);
    log.instruction = spec.instruction_variants[std::uniform_int_distribution<std::size_t>(
        0, spec.instruction_variants.size() - 1)(rng)];
    if (!assets.error.empty()) {
        log.error = assets.error;
        return log;
    }
    try {
        scene::ArticulatedObject obj = assets.object;
        for (const auto& [part, range] : spec.init_state_sampler) {
            const auto& p = obj.part(part);
            if (!p.joint) {
                throw Error(ErrorCode::InvariantViolation, "init_state names fixed part '" + part + "'");
            }
            double v = std::uniform_real_distribution<double>(range.lo, range.hi)(rng);
            if (p.joint->kind == program::JointKind::Revolute) {
                v = geom::deg_to_rad(v);
            }
            obj.set_state(part, v);
        }
        obj.reset_latches();
        log.initial_states = obj.states();

        planner::TaskRequest request;
        request.instruction = log.instruction;
        request.manual = spec.manual;
        request.target_hint = spec.target_hint;
        request.target = planner::TaskTarget{spec.target_part, spec.target_delta, spec.required_effect};
        const auto result = planner::run_global_plan(std::move(obj), request, *assets.backend, grounding,
                                                     cfg.planner, log.seed);
        log.success = result.success;
        log.strategies_tried = result.strategies_tried;
        log.backend_calls = result.backend_calls;
        if (!result.success && !result.attempts.empty()) {
            log.error = result.attempts.back().failure;
        }
    } catch (const std::exception& e) {
        log.success = false;
        log.error = e.what();
    }
    return log;
}

}  // namespace

SuccessRateReport run_benchmark(const std::vector<TaskSpec>& specs, const BenchConfig& cfg, std::uint64_t seed) {
    std::map<std::string, std::shared_ptr<planner::MockBackend>> backends;
    std::vector<TaskAssets> assets(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        try {
            assets[i].object = scene::load_scene_file(specs[i].scene_file);
            auto& b = backends[specs[i].rules_file];
            if (!b) {
                b = std::make_shared<planner::MockBackend>(planner::MockBackend::from_file(specs[i].rules_file));
            }
            assets[i].backend = b;
        } catch (const std::exception& e) {
            assets[i].error = e.what();
        }
    }
    const auto grounding = planner::GroundingContext::synthetic();

    std::vector<std::pair<std::size_t, std::size_t>> jobs;
    SuccessRateReport report;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const std::size_t n = cfg.trials_override.value_or(specs[i].trials);
        TaskReport tr;
        tr.id = specs[i].id;
        tr.category = specs[i].category;
        tr.name = specs[i].name;
        tr.trials = n;
        tr.logs.resize(n);
        report.tasks.push_back(std::move(tr));
        for (std::size_t k = 0; k < n; ++k) {
            jobs.emplace_back(i, k);
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            const auto [i, k] = jobs[j];
            report.tasks[i].logs[k] = run_trial(specs[i], assets[i], grounding, cfg, k, seed);
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, jobs.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    std::map<std::string, std::size_t> category_index;
    for (auto& tr : report.tasks) {
        tr.successes = static_cast<std::size_t>(
            std::count_if(tr.logs.begin(), tr.logs.end(), [](const TrialLog& l) { return l.success; }));
        tr.rate = tr.trials ? 100.0 * static_cast<double>(tr.successes) / static_cast<double>(tr.trials) : 0.0;
        auto [it, fresh] = category_index.emplace(tr.category, report.categories.size());
        if (fresh) {
            report.categories.push_back({tr.category, 0, 0, 0.0});
        }
        auto& c = report.categories[it->second];
        c.trials += tr.trials;
        c.successes += tr.successes;
    }
    for (auto& c : report.categories) {
        c.rate = c.trials ? 100.0 * static_cast<double>(c.successes) / static_cast<double>(c.trials) : 0.0;
    }
    return report;
}

std::string format_report_table(const SuccessRateReport& report) {
    // Column width per task; a category label spans its run of tasks.
    const std::size_t label_w = 12;
    std::vector<std::size_t> widths;
    for (const auto& t : report.tasks) {
        widths.push_back(std::max<std::size_t>(6, std::to_string(t.id).size()));
    }
    std::string cat_row = fmt::format("{:<{}}", "Category", label_w);
    std::string id_row = fmt::format("{:<{}}", "Task ID", label_w);
    std::string rate_row = fmt::format("{:<{}}", "Success (%)", label_w);
    std::size_t i = 0;
    while (i < report.tasks.size()) {
        std::size_t j = i;
        std::size_t span = 0;
        while (j < report.tasks.size() && report.tasks[j].category == report.tasks[i].category) {
            span += widths[j] + 3;
            ++j;
        }
        cat_row += fmt::format(" | {:^{}}", report.tasks[i].category, span - 3);
        for (std::size_t k = i; k < j; ++k) {
            id_row += fmt::format(" | {:>{}}", report.tasks[k].id, widths[k]);
            rate_row += fmt::format(" | {:>{}.1f}", report.tasks[k].rate, widths[k]);
        }
        i = j;
    }
    std::string out = cat_row + "\n" + std::string(rate_row.size(), '-') + "\n" + id_row + "\n" + rate_row + "\n";
    out += "\n";
    out += fmt::format("{:<18} {:>7} {:>9} {:>8}\n", "Category", "Trials", "Successes", "Rate(%)");
    for (const auto& c : report.categories) {
        out += fmt::format("{:<18} {:>7} {:>9} {:>8.1f}\n", c.category, c.trials, c.successes, c.rate);
    }
    return out;
}

json report_to_json(const SuccessRateReport& report, bool include_logs) {
    json tasks = json::array();
    for (const auto& t : report.tasks) {
        json jt{{"id", t.id},
                {"category", t.category},
                {"name", t.name},
                {"trials", t.trials},
                {"successes", t.successes},
                {"rate", t.rate}};
        if (include_logs) {
            json logs = json::array();
            for (const auto& l : t.logs) {
                json jl{{"trial", l.trial},
                        {"seed", l.seed},
                        {"instruction", l.instruction},
                        {"initial_states", l.initial_states},
                        {"success", l.success},
                        {"strategies_tried", l.strategies_tried},
                        {"backend_calls", l.backend_calls}};
                if (!l.error.empty()) {
                    jl["error"] = l.error;
                }
                logs.push_back(std::move(jl));
            }
            jt["logs"] = std::move(logs);
        }
        tasks.push_back(std::move(jt));
    }
    json cats = json::array();
    for (const auto& c : report.categories) {
        cats.push_back({{"category", c.category}, {"trials", c.trials}, {"successes", c.successes}, {"rate", c.rate}});
    }
    return {{"tasks", tasks}, {"categories", cats}};
}

// ---- estimation

namespace {

struct SyntheticMotion {
    geom::OrientedBox box;
    joint::JointEstimate truth;
    geom::Pose motion;
};

SyntheticMotion random_motion(std::mt19937_64& rng, bool revolute) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> half(0.05, 0.3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_dir = [&]() {
        geom::Vec3 v;
        do {
            v = {gauss(rng), gauss(rng), gauss(rng)};
        } while (v.norm() < 1e-6);
        return v.normalized();
    };
    SyntheticMotion m;
    m.box.center = {unit(rng), unit(rng), unit(rng)};
    m.box.half_extents = {half(rng), half(rng), half(rng)};
    m.box.rotation = geom::Rotation::from_axis_angle(random_dir(), std::uniform_real_distribution<double>(0.0, geom::kPi)(rng));
    std::uniform_int_distribution<int> pick(0, 2);
    if (revolute) {
        // Hinge along one box edge, like a door or lid.
        const int k = pick(rng);
        const int j = (k + 1 + std::uniform_int_distribution<int>(0, 1)(rng)) % 3;
        const double hj = j == 0 ? m.box.half_extents.x : (j == 1 ? m.box.half_extents.y : m.box.half_extents.z);
        m.truth.kind = joint::MotionKind::Revolute;
        m.truth.axis_dir = m.box.axis(k);
        m.truth.axis_point = m.box.center + m.box.axis(j) * hj;
        const double mag = geom::deg_to_rad(std::uniform_real_distribution<double>(15.0, 90.0)(rng));
        m.truth.displacement = unit(rng) < 0.0 ? -mag : mag;
        m.motion = geom::rotation_about_line(m.truth.axis_point, m.truth.axis_dir, m.truth.displacement);
    } else {
        m.truth.kind = joint::MotionKind::Prismatic;
        m.truth.axis_dir = random_dir();
        m.truth.displacement = std::uniform_real_distribution<double>(0.05, 0.4)(rng);
        m.motion = {geom::Rotation::identity(), m.truth.axis_dir * m.truth.displacement};
    }
    return m;
}

geom::PointCloud corrupt(geom::PointCloud cloud, double sigma, double outlier_frac, const geom::OrientedBox& box,
                         std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
    if (sigma > 0.0) {
        for (auto& p : cloud.points) {
            p = p + geom::Vec3{noise(rng), noise(rng), noise(rng)};
        }
    }
    const auto n_out = static_cast<std::size_t>(std::floor(outlier_frac * static_cast<double>(cloud.points.size())));
    if (n_out > 0) {
        std::vector<std::size_t> idx(cloud.points.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            idx[i] = i;
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        const double r = std::max({box.half_extents.x, box.half_extents.y, box.half_extents.z}) * 2.0;
        std::uniform_real_distribution<double> u(-r, r);
        for (std::size_t i = 0; i < n_out; ++i) {
            cloud.points[idx[i]] = box.center + geom::Vec3{u(rng), u(rng), u(rng)};
        }
    }
    return cloud;
}

}  // namespace

PoseErrorReport estimation_benchmark(std::size_t n_trials, const std::vector<double>& noise_grid,
                                     const std::vector<double>& outlier_grid, std::uint64_t seed, std::size_t points) {
    PoseErrorReport report;
    report.points = points;
    for (std::size_t a = 0; a < noise_grid.size(); ++a) {
        for (std::size_t b = 0; b < outlier_grid.size(); ++b) {
            EstimationCell cell;
            cell.noise_sigma = noise_grid[a];
            cell.outlier_frac = outlier_grid[b];
            cell.trials = n_trials;
            std::vector<joint::PoseErrors> errors;
            for (std::size_t t = 0; t < n_trials; ++t) {
                // Paired across cells: the same trial index draws the same motion.
                std::mt19937_64 rng(mix(seed ^ mix(t)));
                const auto m = random_motion(rng, t % 2 == 0);
                const auto x0 = geom::sample_box_surface(m.box, points, rng());
                const auto xt = geom::transform_cloud(m.motion, x0);
                std::mt19937_64 noise_rng(mix(rng() ^ mix(a * 1000003ULL + b)));
                const auto n0 = corrupt(x0, cell.noise_sigma, cell.outlier_frac, m.box, noise_rng);
                const auto nt = corrupt(xt, cell.noise_sigma, cell.outlier_frac, geom::transform_box(m.motion, m.box), noise_rng);
                joint::RansacParams params;
                params.seed = rng();
                try {
                    const auto rigid = joint::ransac_align(n0, nt, params);
                    const auto est = joint::infer_joint(rigid, m.box.center);
                    joint::PoseErrors e = joint::pose_errors(rigid.pose(), m.motion);
                    if (est.kind == m.truth.kind) {
                        const auto je = joint::pose_errors(est, m.truth);
                        e.axis_deg = je.axis_deg;
                        e.axis_distance_m = je.axis_distance_m;
                        e.displacement = je.displacement;
                    } else {
                        ++cell.kind_errors;
                        e.axis_deg = 90.0;
                        e.axis_distance_m = std::numeric_limits<double>::infinity();
                        e.displacement = std::abs(m.truth.displacement);
                    }
                    errors.push_back(e);
                } catch (const Error&) {
                    ++cell.failures;
                    joint::PoseErrors e;
                    e.rotation_deg = e.axis_deg = 180.0;
                    e.translation_m = e.axis_distance_m = std::numeric_limits<double>::infinity();
                    e.displacement = std::abs(m.truth.displacement);
                    errors.push_back(e);
                }
            }
            cell.summary = joint::summarize(errors);
            report.cells.push_back(cell);
        }
    }
    return report;
}

std::string format_estimation_table(const PoseErrorReport& report) {
    std::string out = fmt::format("{:>9} {:>9} {:>6} {:>9} {:>10} {:>9} {:>10} {:>10} {:>6} {:>6} {:>5}\n", "sigma(m)",
                                  "outliers", "trials", "R_e(deg)", "T_e(m)", "th_e(deg)", "d_e(m)", "s_e", "A5", "A10",
                                  "kind!");
    for (const auto& c : report.cells) {
        const auto& s = c.summary;
        out += fmt::format("{:>9.4f} {:>9.2f} {:>6} {:>9.4f} {:>10.6f} {:>9.4f} {:>10.6f} {:>10.6f} {:>6.3f} {:>6.3f} {:>5}\n",
                           c.noise_sigma, c.outlier_frac, c.trials, s.median_rotation_deg, s.median_translation_m,
                           s.median_axis_deg, s.median_axis_distance_m, s.median_displacement, s.a5, s.a10,
                           c.kind_errors);
    }
    return out;
}

json estimation_to_json(const PoseErrorReport& report) {
    json cells = json::array();
    for (const auto& c : report.cells) {
        json s;
        joint::to_json(s, c.summary);
        cells.push_back({{"noise_sigma", c.noise_sigma},
                         {"outlier_frac", c.outlier_frac},
                         {"trials", c.trials},
                         {"kind_errors", c.kind_errors},
                         {"failures", c.failures},
                         {"summary", s}});
    }
    return {{"points", report.points}, {"cells", cells}};
}

}  // namespace artic::bench
