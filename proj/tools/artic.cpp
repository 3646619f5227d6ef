#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "artic/action_program.hpp"
#include "artic/benchmark.hpp"
#include "artic/error.hpp"
#include "artic/joint_estimation.hpp"
#include "artic/part_grounding.hpp"
#include "artic/planner.hpp"
#include "artic/scene_model.hpp"
#include "artic/trajectory.hpp"

using nlohmann::json;
using namespace artic;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::string out;
    std::string format = "json";
};

void emit(const Globals& g, const json& doc, const std::string& table) {
    const std::string text = g.format == "table" ? table : doc.dump(2) + "\n";
    if (g.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(g.out);
    if (!f) {
        throw Error(ErrorCode::IoError, "cannot write '" + g.out + "'");
    }
    f << text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            v.push_back(std::stod(item));
        }
    }
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Articulated-object manipulation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--out", g.out, "Write output to this file");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "table"}));

    // parse-program
    auto* parse_cmd = app.add_subcommand("parse-program", "Parse strategy text and print its structure");
    std::string program_text, program_file;
    auto* text_opt = parse_cmd->add_option("--text", program_text, "Strategy text");
    parse_cmd->add_option("--file", program_file, "File holding strategy text")->excludes(text_opt);

    // estimate-joint
    auto* est_cmd = app.add_subcommand("estimate-joint", "Estimate a joint from two corresponded point clouds");
    std::string x0_path, xt_path;
    std::vector<double> reference{0, 0, 0};
    joint::RansacParams ransac;
    est_cmd->add_option("--before", x0_path, "xyz file at rest")->required();
    est_cmd->add_option("--after", xt_path, "xyz file after motion")->required();
    est_cmd->add_option("--reference", reference, "Reference point x y z")->expected(3);
    est_cmd->add_option("--iterations", ransac.iterations, "RANSAC iterations");
    est_cmd->add_option("--threshold", ransac.inlier_threshold, "Inlier threshold (m)");

    // ground
    auto* ground_cmd = app.add_subcommand("ground", "Classify a pooled feature against a feature store");
    std::string store_path, feature_text, sample_class;
    std::size_t k = grounding::kDefaultK;
    double feature_sigma = 0.05;
    ground_cmd->add_option("--store", store_path, "Feature store (JSON Lines)")->required();
    auto* feat_opt = ground_cmd->add_option("--feature", feature_text, "Comma-separated feature vector");
    ground_cmd->add_option("--sample-class", sample_class, "Draw a synthetic feature of this class")->excludes(feat_opt);
    ground_cmd->add_option("--sigma", feature_sigma, "Synthetic feature noise");
    ground_cmd->add_option("-k", k, "Neighbours");

    // make-store
    auto* store_cmd = app.add_subcommand("make-store", "Write a synthetic feature store");
    std::size_t dim = 16, per_class = 8;
    store_cmd->add_option("--dim", dim, "Feature dimension");
    store_cmd->add_option("--per-class", per_class, "Entries per class");
    store_cmd->add_option("--sigma", feature_sigma, "Per-channel noise");

    // describe
    auto* describe_cmd = app.add_subcommand("describe", "Print the scene description of an object");
    std::string scene_path;
    describe_cmd->add_option("--scene", scene_path, "Scene JSON")->required();

    // plan-traj
    auto* traj_cmd = app.add_subcommand("plan-traj", "Generate the gripper trajectory for one action unit");
    std::string part;
    double delta = 0.0;
    traj_cmd->add_option("--scene", scene_path, "Scene JSON")->required();
    traj_cmd->add_option("--part", part, "Part id")->required();
    traj_cmd->add_option("--delta", delta, "State change (degrees or extent fraction)")->required();

    // run-task
    auto* run_cmd = app.add_subcommand("run-task", "Run the planner on one scene and instruction");
    std::string instruction, rules_path, manual, log_path, hint, target_part, effect, backend_url;
    double target_delta = 0.0;
    run_cmd->add_option("--scene", scene_path, "Scene JSON")->required();
    run_cmd->add_option("--instruction", instruction, "Instruction")->required();
    auto* rules_opt = run_cmd->add_option("--rules", rules_path, "Mock backend rules JSON");
    run_cmd->add_option("--backend-url", backend_url, "HTTP text-generation endpoint")->excludes(rules_opt);
    run_cmd->add_option("--manual", manual, "Manual text");
    run_cmd->add_option("--hint", hint, "Part id indicated by the user");
    auto* tp_opt = run_cmd->add_option("--target-part", target_part, "Part checked for success");
    run_cmd->add_option("--target-delta", target_delta, "Required state change for success")->needs(tp_opt);
    run_cmd->add_option("--effect", effect, "Effect that must trigger");
    run_cmd->add_option("--log", log_path, "Write the event log (JSON Lines)");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Run the task benchmark");
    std::string specs_path;
    std::size_t threads = 1, trials = 0;
    bench_cmd->add_option("--specs", specs_path, "Benchmark specs JSON")->required();
    bench_cmd->add_option("--threads", threads, "Worker threads");
    bench_cmd->add_option("--trials", trials, "Override trials per task");

    // metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "Run the joint-estimation benchmark");
    std::string noise_text = "0,0.002", outlier_text = "0,0.2";
    std::size_t metric_trials = 200, points = 500;
    metrics_cmd->add_option("--noise", noise_text, "Comma-separated noise sigmas (m)");
    metrics_cmd->add_option("--outliers", outlier_text, "Comma-separated outlier fractions");
    metrics_cmd->add_option("--trials", metric_trials, "Trials per cell");
    metrics_cmd->add_option("--points", points, "Points per cloud");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*parse_cmd) {
            const std::string text = program_file.empty() ? program_text : read_file(program_file);
            const auto set = program::parse_strategies(text);
            json doc = set;
            doc["canonical"] = program::serialize_strategies(set);
            doc["expression"] = program::expr_to_json(program::to_expr(set));
            emit(g, doc, program::serialize_strategies(set) + "\n");
        } else if (*est_cmd) {
            const auto x0 = geom::read_xyz_file(x0_path);
            const auto xt = geom::read_xyz_file(xt_path);
            ransac.seed = g.seed;
            const auto rigid = joint::ransac_align(x0, xt, ransac);
            const auto je = joint::infer_joint(rigid, {reference[0], reference[1], reference[2]});
            json doc{{"transform", rigid}, {"joint", je}, {"inliers", rigid.inlier_count()}};
            std::ostringstream t;
            t << "kind         " << joint::motion_kind_name(je.kind) << "\n"
              << "displacement " << je.displacement << "\n"
              << "axis_dir     " << je.axis_dir << "\n"
              << "axis_point   " << je.axis_point << "\n"
              << "inliers      " << rigid.inlier_count() << "/" << x0.points.size() << "\n"
              << "rmse         " << rigid.rmse << "\n";
            emit(g, doc, t.str());
        } else if (*ground_cmd) {
            const auto store = grounding::FeatureStore::load_jsonl_file(store_path);
            grounding::Feature q;
            if (!sample_class.empty()) {
                const auto c = grounding::parse_class(sample_class);
                if (!c) {
                    throw Error(ErrorCode::UnknownPart, "unknown class '" + sample_class + "'");
                }
                grounding::SyntheticFeatureModel model(store.dimension(), feature_sigma, g.seed);
                std::mt19937_64 rng(g.seed + 2);  // make-store samples from seed + 1
                q = model.sample(*c, rng);
            } else {
                q = parse_list(feature_text);
            }
            const auto r = grounding::knn_ground(store, q, k);
            json votes = json::object();
            for (const auto& [c, n] : r.votes) {
                votes[std::string(grounding::class_label(c))] = n;
            }
            emit(g, {{"label", grounding::class_label(r.label)}, {"votes", votes}, {"nearest_distance", r.nearest_distance}},
                 std::string(grounding::class_label(r.label)) + "\n");
        } else if (*store_cmd) {
            grounding::SyntheticFeatureModel model(dim, feature_sigma, g.seed);
            std::ostringstream s;
            model.make_store(per_class, g.seed + 1).save_jsonl(s);
            Globals raw = g;
            raw.format = "table";
            emit(raw, {}, s.str());
        } else if (*describe_cmd) {
            const auto obj = scene::load_scene_file(scene_path);
            const auto d = planner::build_scene_description(obj);
            json hist = json::object();
            for (const auto& [c, n] : d.histogram) {
                hist[grounding::class_hyphenated(c)] = n;
            }
            emit(g, {{"object", d.object_name}, {"text", d.text}, {"histogram", hist}}, d.text + "\n");
        } else if (*traj_cmd) {
            const auto obj = scene::load_scene_file(scene_path);
            const auto t = traj::plan_for_part(obj, part, delta);
            json doc{{"waypoints", traj::trajectory_to_json(t)},
                     {"joint_delta", t.joint_delta},
                     {"requested_joint_delta", t.requested_joint_delta},
                     {"clamped", t.clamped},
                     {"warnings", t.warnings}};
            for (const auto& w : t.warnings) {
                std::cerr << "warning: " << w << "\n";
            }
            std::ostringstream table;
            for (const auto& w : t.waypoints) {
                table << w.time << " " << w.pose.translation << "\n";
            }
            emit(g, doc, table.str());
        } else if (*run_cmd) {
            auto obj = scene::load_scene_file(scene_path);
            std::unique_ptr<planner::InterpreterBackend> backend;
            if (!backend_url.empty()) {
                backend = std::make_unique<planner::HttpBackend>(backend_url);
            } else if (!rules_path.empty()) {
                backend = std::make_unique<planner::MockBackend>(planner::MockBackend::from_file(rules_path));
            } else {
                throw std::invalid_argument("run-task needs --rules or --backend-url");
            }
            planner::TaskRequest req;
            req.instruction = instruction;
            if (!manual.empty()) {
                req.manual = manual;
            }
            if (!hint.empty()) {
                req.target_hint = hint;
            }
            if (!target_part.empty()) {
                req.target = planner::TaskTarget{target_part, target_delta,
                                                 effect.empty() ? std::nullopt : std::optional<std::string>(effect)};
            }
            const auto grounding_ctx = planner::GroundingContext::synthetic();
            const auto result = planner::run_global_plan(std::move(obj), req, *backend, grounding_ctx, {}, g.seed);
            if (!log_path.empty()) {
                std::ofstream f(log_path);
                if (!f) {
                    throw Error(ErrorCode::IoError, "cannot write '" + log_path + "'");
                }
                sim::write_event_log(f, result.events);
            }
            std::ostringstream t;
            t << (result.success ? "success" : "failure") << " after " << result.strategies_tried
              << " strateg" << (result.strategies_tried == 1 ? "y" : "ies") << ", " << result.backend_calls
              << " backend call(s), " << result.steps << " steps\n";
            for (const auto& n : result.failure_notes) {
                t << "  note: " << n << "\n";
            }
            emit(g, planner::task_result_to_json(result), t.str());
            return result.success ? 0 : 3;
        } else if (*bench_cmd) {
            const auto specs = bench::load_specs_file(specs_path);
            bench::BenchConfig cfg;
            cfg.threads = threads;
            if (trials > 0) {
                cfg.trials_override = trials;
            }
            const auto report = bench::run_benchmark(specs, cfg, g.seed);
            emit(g, bench::report_to_json(report), bench::format_report_table(report));
        } else if (*metrics_cmd) {
            const auto report =
                bench::estimation_benchmark(metric_trials, parse_list(noise_text), parse_list(outlier_text), g.seed, points);
            emit(g, bench::estimation_to_json(report), bench::format_estimation_table(report));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
