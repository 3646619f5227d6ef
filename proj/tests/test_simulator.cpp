#include <gtest/gtest.h>

#include <sstream>

#include "artic/error.hpp"
#include "artic/simulator.hpp"
#include "support.hpp"

using namespace artic;
using namespace artic::geom;
using namespace artic::sim;
using artic::testing::data_path;

namespace {

scene::ArticulatedObject hinge_box() {
    scene::Part p;
    p.id = "door";
    p.semantic_name = "Door";
    p.gapart_class = grounding::GAPartClass::HingeDoor;
    p.box.center = {0.45, 0, 0};
    p.box.half_extents = {0.45, 0.01, 0.3};
    scene::JointSpec j;
    j.kind = program::JointKind::Revolute;
    j.axis_dir = {0, 0, 1};
    j.lower = 0;
    j.upper = 2.0;
    p.joint = j;
    p.grasp_sites = {{0.9, 0, 0}};
    return scene::ArticulatedObject("box", {p}, {}, {}, {});
}

EpisodeState grasped(scene::ArticulatedObject obj, const std::string& part, SimConfig cfg = {}) {
    auto st = EpisodeState::start(std::move(obj), cfg);
    st.gripper = traj::select_grasp(st.object, part);
    if (!grasp(st, part).is_ok()) {
        throw std::runtime_error("grasp failed");
    }
    return st;
}

void drive(EpisodeState& st, const std::string& part, double delta_deg) {
    const auto driver = *st.object.driving_joint(part);
    traj::TrajectoryOptions opts;
    opts.current_state = st.object.state(driver);
    const auto t = traj::generate_trajectory(st.gripper, st.object.world_joint(driver), delta_deg, opts);
    run_trajectory(st, t, 0, {});
}

}  // namespace

TEST(Grasp, RadiusBoundary) {
    auto st = EpisodeState::start(hinge_box());
    st.gripper = {Rotation::identity(), {0.9, 0, 0.02}};
    EXPECT_TRUE(grasp(st, "door").is_ok());
    EXPECT_THROW(grasp(st, "door"), Error);

    auto far = EpisodeState::start(hinge_box());
    far.gripper = {Rotation::identity(), {0.9, 0, 0.04}};
    EXPECT_EQ(grasp(far, "door"), StepOutcome::grasp_failed());
    EXPECT_FALSE(far.held_part);
}

TEST(Grasp, HandleDrivesParentDoor) {
    auto st = grasped(scene::load_scene_file(data_path("scenes/microwave_basic.json")), "handle");
    EXPECT_EQ(st.driven_joint, "door");
    drive(st, "handle", 30);
    EXPECT_NEAR(st.object.state("door"), deg_to_rad(30), 1e-9);
}

TEST(Step, RequiresHeldPart) {
    auto st = EpisodeState::start(hinge_box());
    try {
        step(st, Pose::identity());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotHolding);
    }
}

TEST(Latch, BlockedUntilButtonPressed) {
    auto st = grasped(scene::load_scene_file(data_path("scenes/microwave_latched.json")), "door");
    const auto t = traj::plan_for_part(st.object, "door", 30);
    const auto recs = run_trajectory(st, t, 0, {});
    EXPECT_EQ(recs.front().outcome, StepOutcome::blocked(BlockReason::Latch));
    EXPECT_EQ(st.object.state("door"), 0.0);
    release(st);

    st.gripper = traj::select_grasp(st.object, "button");
    ASSERT_TRUE(grasp(st, "button").is_ok());
    const auto press = traj::plan_for_part(st.object, "button", -1.0);
    run_trajectory(st, press, 0, {});
    bool released = false;
    for (const auto& e : st.event_log) {
        released = released || e.type == EventType::LatchReleased;
    }
    EXPECT_TRUE(released);
    EXPECT_FALSE(st.object.is_locked("door"));
    EXPECT_NEAR(st.object.state("door"), 0.05, 1e-12);
    release(st);
    EXPECT_EQ(st.object.state("button"), 0.0);  // spring return
}

TEST(RunTrajectory, FiveObservationPairs) {
    auto st = grasped(hinge_box(), "door");
    const auto t = traj::plan_for_part(st.object, "door", 40);
    std::size_t hooks = 0;
    const auto recs = run_trajectory(st, t, 50, {}, [&](std::size_t wp, const PointCloud& a, const PointCloud& b) {
        EXPECT_EQ(wp % 50, 0u);
        EXPECT_EQ(a.size(), b.size());
        ++hooks;
        return true;
    });
    EXPECT_EQ(hooks, 5u);
    std::size_t pairs = 0;
    for (const auto& r : recs) {
        pairs += r.clouds ? 1 : 0;
    }
    EXPECT_EQ(pairs, 5u);
    EXPECT_EQ(recs.size(), 250u);
}

TEST(RunTrajectory, HookStopsEarly) {
    auto st = grasped(hinge_box(), "door");
    const auto t = traj::plan_for_part(st.object, "door", 40);
    const auto recs = run_trajectory(st, t, 50, {}, [](std::size_t, const PointCloud&, const PointCloud&) { return false; });
    EXPECT_EQ(recs.size(), 50u);
}

TEST(Step, SlipDropsPart) {
    auto st = grasped(hinge_box(), "door");
    const auto t = traj::plan_for_part(st.object, "door", 60);
    for (std::size_t i = 1; i < 100; ++i) {
        ASSERT_TRUE(step(st, t.waypoints[i].pose).is_ok());
    }
    Pose off = t.waypoints[100].pose;
    off.translation.z += 0.05;
    EXPECT_EQ(step(st, off), StepOutcome::slipped());
    EXPECT_EQ(st.step, 100u);
    EXPECT_FALSE(st.held_part);
}

TEST(Step, LimitBlocks) {
    auto st = grasped(hinge_box(), "door");
    const Pose back = pose_compose(rotation_about_line({0, 0, 0}, {0, 0, 1}, -0.1), st.gripper);
    EXPECT_EQ(step(st, back), StepOutcome::blocked(BlockReason::Limit));
    EXPECT_EQ(st.object.state("door"), 0.0);
}

TEST(CheckSuccess, FractionBoundary) {
    auto ok = grasped(hinge_box(), "door");
    drive(ok, "door", 54);
    settle(ok, 10);
    EXPECT_TRUE(check_success(ok, "door", deg_to_rad(60)));

    auto short_of = grasped(hinge_box(), "door");
    drive(short_of, "door", 53.4);
    settle(short_of, 10);
    EXPECT_FALSE(check_success(short_of, "door", deg_to_rad(60)));
}

TEST(CheckSuccess, StepBudget) {
    auto st = grasped(hinge_box(), "door");
    drive(st, "door", 57);
    settle(st, 1001 - st.step);
    EXPECT_EQ(st.step, 1001u);
    EXPECT_FALSE(check_success(st, "door", deg_to_rad(60)));

    SimConfig roomy;
    roomy.max_steps = 2000;
    auto st2 = grasped(hinge_box(), "door", roomy);
    drive(st2, "door", 57);
    settle(st2, 1001 - st2.step);
    EXPECT_TRUE(check_success(st2, "door", deg_to_rad(60)));
}

TEST(CheckSuccess, NeedsStableWindow) {
    auto st = grasped(hinge_box(), "door");
    drive(st, "door", 60);
    EXPECT_FALSE(check_success(st, "door", deg_to_rad(60)));
    settle(st, 10);
    EXPECT_TRUE(check_success(st, "door", deg_to_rad(60)));
}

TEST(Episode, DeterministicAndReversible) {
    auto run = [] {
        auto st = grasped(scene::load_scene_file(data_path("scenes/storage_furniture.json")), "door");
        drive(st, "door", 45);
        drive(st, "door", -45);
        return st;
    };
    const auto a = run();
    const auto b = run();
    EXPECT_EQ(a.object.states(), b.object.states());
    std::ostringstream la, lb;
    write_event_log(la, a.event_log);
    write_event_log(lb, b.event_log);
    EXPECT_EQ(la.str(), lb.str());
    EXPECT_NEAR(a.object.state("door"), 0.0, 1e-9);
    EXPECT_EQ(a.step, 500u);
}

TEST(Effects, RemoteButtonTriggersPower) {
    auto st = grasped(scene::load_scene_file(data_path("scenes/remote.json")), "power_button");
    drive(st, "power_button", -0.5);
    EXPECT_EQ(st.triggered_effects.count("power_on"), 1u);
}
