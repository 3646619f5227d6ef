#include <gtest/gtest.h>

#include <cmath>

#include "artic/benchmark.hpp"
#include "artic/error.hpp"
#include "support.hpp"

using namespace artic;
using namespace artic::bench;
using artic::testing::data_path;

namespace {

std::vector<TaskSpec> specs_subset(std::initializer_list<int> ids) {
    std::vector<TaskSpec> out;
    for (auto& s : load_specs_file(data_path("bench/bench.json"))) {
        for (int id : ids) {
            if (s.id == id) {
                out.push_back(s);
            }
        }
    }
    return out;
}

}  // namespace

TEST(Specs, LoadAndValidate) {
    const auto specs = load_specs_file(data_path("bench/bench.json"));
    ASSERT_EQ(specs.size(), 12u);
    for (const auto& s : specs) {
        EXPECT_NO_THROW(s.validate());
        EXPECT_EQ(s.trials, 20u);
        EXPECT_EQ(s.instruction_variants.size(), 5u);
    }
    auto bad = specs.front();
    bad.instruction_variants.clear();
    EXPECT_THROW(bad.validate(), Error);
}

TEST(Seeds, DistinctPerTrial) {
    EXPECT_NE(trial_seed(7, 1, 0), trial_seed(7, 1, 1));
    EXPECT_NE(trial_seed(7, 1, 0), trial_seed(7, 2, 0));
    EXPECT_EQ(trial_seed(7, 3, 4), trial_seed(7, 3, 4));
}

TEST(Run, CloseDoorStartsInsideRange) {
    BenchConfig cfg;
    cfg.trials_override = 10;
    const auto report = run_benchmark(specs_subset({2}), cfg, 3);
    ASSERT_EQ(report.tasks.size(), 1u);
    for (const auto& log : report.tasks[0].logs) {
        const double deg = log.initial_states.at("door") * 180.0 / M_PI;
        EXPECT_GT(deg, 30.0);
        EXPECT_LT(deg, 60.0);
    }
}

TEST(Run, DeterministicAndThreadIndependent) {
    BenchConfig serial;
    serial.trials_override = 4;
    BenchConfig parallel = serial;
    parallel.threads = 4;
    const auto specs = specs_subset({1, 3, 5, 11});
    const auto a = run_benchmark(specs, serial, 5);
    const auto b = run_benchmark(specs, serial, 5);
    const auto c = run_benchmark(specs, parallel, 5);
    EXPECT_EQ(report_to_json(a), report_to_json(b));
    EXPECT_EQ(report_to_json(a), report_to_json(c));
}

TEST(Run, CategoryAggregateIsTrialWeighted) {
    auto specs = specs_subset({4, 5});
    specs[0].trials = 3;
    specs[1].trials = 5;
    const auto report = run_benchmark(specs, {}, 2);
    ASSERT_EQ(report.categories.size(), 1u);
    const auto& cat = report.categories[0];
    EXPECT_EQ(cat.trials, 8u);
    EXPECT_EQ(cat.successes, report.tasks[0].successes + report.tasks[1].successes);
    EXPECT_DOUBLE_EQ(cat.rate, 100.0 * cat.successes / 8.0);
}

TEST(Run, EmptyInputGivesEmptyReport) {
    const auto report = run_benchmark({}, {}, 0);
    EXPECT_TRUE(report.tasks.empty());
    EXPECT_TRUE(report.categories.empty());
}

TEST(Run, BrokenSceneCountsAsFailure) {
    auto specs = specs_subset({1});
    specs[0].scene_file = data_path("scenes/does_not_exist.json");
    BenchConfig cfg;
    cfg.trials_override = 2;
    const auto report = run_benchmark(specs, cfg, 0);
    EXPECT_EQ(report.tasks[0].successes, 0u);
    EXPECT_FALSE(report.tasks[0].logs[0].error.empty());
}

TEST(Table, HasCategoryAndTaskRows) {
    BenchConfig cfg;
    cfg.trials_override = 1;
    const auto table = format_report_table(run_benchmark(specs_subset({1, 4}), cfg, 0));
    EXPECT_NE(table.find("Category"), std::string::npos);
    EXPECT_NE(table.find("Task ID"), std::string::npos);
    EXPECT_NE(table.find("Success (%)"), std::string::npos);
    EXPECT_NE(table.find("Microwave"), std::string::npos);
    EXPECT_NE(table.find("StorageFurniture"), std::string::npos);
}

TEST(Estimation, NoiseDegradesAccuracy) {
    const auto report = estimation_benchmark(20, {0.0, 0.01}, {0.0}, 9, 300);
    ASSERT_EQ(report.cells.size(), 2u);
    EXPECT_EQ(report.cells[0].summary.a5, 1.0);
    EXPECT_LE(report.cells[0].summary.median_axis_deg, report.cells[1].summary.median_axis_deg);
    const auto j = estimation_to_json(report);
    EXPECT_EQ(j["cells"].size(), 2u);
    EXPECT_FALSE(format_estimation_table(report).empty());
}

TEST(Estimation, EmptyGrid) {
    EXPECT_TRUE(estimation_benchmark(5, {}, {0.0}, 1).cells.empty());
}
