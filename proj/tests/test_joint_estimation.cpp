#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "artic/error.hpp"
#include "artic/joint_estimation.hpp"
#include "artic/scene_model.hpp"
#include "support.hpp"

using namespace artic;
using namespace artic::geom;
using namespace artic::joint;
using artic::testing::dist;

namespace {

PointCloud tetrahedron() { return PointCloud{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double scale) {
    PointCloud c;
    for (std::size_t i = 0; i < n; ++i) {
        c.points.push_back(artic::testing::random_vec(rng, scale));
    }
    return c;
}

// Rotation about a line through `c` along `u`, assembled with Eigen.
Pose eigen_screw(const Vec3& c, const Vec3& u, double angle) {
    const Eigen::Matrix3d r = artic::testing::eigen_rotation(u, angle);
    const Eigen::Vector3d ce = artic::testing::to_eigen(c);
    const Eigen::Vector3d t = ce - r * ce;
    Mat3 m;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            m[i][j] = r(i, j);
        }
    }
    return {Rotation::from_matrix(m), {t.x(), t.y(), t.z()}};
}

}  // namespace

TEST(Umeyama, IdentityOnTetrahedron) {
    const auto e = umeyama_align(tetrahedron(), tetrahedron());
    EXPECT_LT(geodesic_distance(e.rotation, Rotation::identity()), 1e-12);
    EXPECT_LT(e.translation.norm(), 1e-12);
    EXPECT_NEAR(e.rmse, 0.0, 1e-12);
}

TEST(Umeyama, PureTranslation) {
    PointCloud xt = tetrahedron();
    for (auto& p : xt.points) {
        p = p + Vec3{0.2, 0, 0};
    }
    const auto e = umeyama_align(tetrahedron(), xt);
    EXPECT_LT(geodesic_distance(e.rotation, Rotation::identity()), 1e-12);
    EXPECT_LT(dist(e.translation, {0.2, 0, 0}), 1e-12);
}

TEST(Umeyama, QuarterTurnTetrahedron) {
    const PointCloud xt{{{1, 2, 3}, {1, 3, 3}, {0, 2, 3}, {1, 2, 4}}};
    const auto e = umeyama_align(tetrahedron(), xt);
    EXPECT_LT(geodesic_distance(e.rotation, Rotation::about_z(deg_to_rad(90))), 1e-9);
    EXPECT_LT(dist(e.translation, {1, 2, 3}), 1e-9);
}

TEST(Umeyama, ExactRecoveryAndProperRotation) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 300; ++i) {
        const Pose truth = artic::testing::random_pose(rng);
        const PointCloud x0 = random_cloud(rng, 3 + i % 20, 1.0);
        const auto e = umeyama_align(x0, transform_cloud(truth, x0));
        EXPECT_LT(geodesic_distance(e.rotation, truth.rotation), 1e-9);
        EXPECT_LT(dist(e.translation, truth.translation), 1e-9);
        EXPECT_NEAR(artic::testing::eigen_matrix(e.rotation).determinant(), 1.0, 1e-12);
    }
}

TEST(Umeyama, MirroredTargetStillGivesRotation) {
    std::mt19937_64 rng(22);
    const PointCloud x0 = random_cloud(rng, 20, 1.0);
    PointCloud xt = x0;
    for (auto& p : xt.points) {
        p.z = -p.z;
    }
    const auto e = umeyama_align(x0, xt);
    EXPECT_NEAR(artic::testing::eigen_matrix(e.rotation).determinant(), 1.0, 1e-12);
}

TEST(Umeyama, DegenerateInputs) {
    auto code = [](const PointCloud& a, const PointCloud& b) {
        try {
            umeyama_align(a, b);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    const PointCloud two{{{0, 0, 0}, {1, 0, 0}}};
    EXPECT_EQ(code(two, two), ErrorCode::DegenerateInput);
    const PointCloud line{{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}}};
    EXPECT_EQ(code(line, line), ErrorCode::DegenerateInput);
    EXPECT_EQ(code(line, tetrahedron()), ErrorCode::DegenerateInput);
    EXPECT_EQ(code(tetrahedron(), two), ErrorCode::DegenerateInput);
}

TEST(Ransac, CleanDataMatchesUmeyama) {
    std::mt19937_64 rng(23);
    const Pose truth = artic::testing::random_pose(rng);
    const PointCloud x0 = random_cloud(rng, 100, 0.5);
    const PointCloud xt = transform_cloud(truth, x0);
    const auto a = umeyama_align(x0, xt);
    const auto r = ransac_align(x0, xt);
    EXPECT_LT(geodesic_distance(a.rotation, r.rotation), 1e-9);
    EXPECT_LT(dist(a.translation, r.translation), 1e-9);
    EXPECT_EQ(r.inlier_count(), 100u);
}

TEST(Ransac, RejectsThirtyPercentOutliers) {
    std::mt19937_64 rng(24);
    const Pose truth = artic::testing::random_pose(rng);
    const PointCloud x0 = random_cloud(rng, 200, 0.5);
    PointCloud xt = transform_cloud(truth, x0);
    std::uniform_real_distribution<double> cube(-0.5, 0.5);
    for (std::size_t i = 0; i < 60; ++i) {
        xt.points[i] = {cube(rng), cube(rng), cube(rng)};
    }
    const auto r = ransac_align(x0, xt);
    EXPECT_LT(rad_to_deg(geodesic_distance(r.rotation, truth.rotation)), 0.5);
    EXPECT_LT(dist(r.translation, truth.translation), 0.002);
    for (std::size_t i = 60; i < 200; ++i) {
        EXPECT_TRUE(r.inlier_mask[i]);
    }
}

TEST(Ransac, DeterministicPerSeed) {
    std::mt19937_64 rng(25);
    const PointCloud x0 = random_cloud(rng, 80, 0.5);
    PointCloud xt = transform_cloud(artic::testing::random_pose(rng), x0);
    for (std::size_t i = 0; i < 30; ++i) {
        xt.points[i] = artic::testing::random_vec(rng, 1.0);
    }
    RansacParams p;
    p.seed = 99;
    const auto a = ransac_align(x0, xt, p);
    const auto b = ransac_align(x0, xt, p);
    EXPECT_EQ(a.inlier_mask, b.inlier_mask);
    EXPECT_EQ(a.rotation.w(), b.rotation.w());
    EXPECT_EQ(a.translation, b.translation);
}

TEST(Ransac, TooFewPoints) {
    const PointCloud two{{{0, 0, 0}, {1, 0, 0}}};
    try {
        ransac_align(two, two);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
    }
}

TEST(InferJoint, PrismaticStationaryRevolute) {
    RigidTransformEstimate est;
    est.translation = {0.1, 0, 0};
    auto j = infer_joint(est, {0, 0, 0});
    EXPECT_EQ(j.kind, MotionKind::Prismatic);
    EXPECT_LT(dist(j.axis_dir, {1, 0, 0}), 1e-12);
    EXPECT_NEAR(j.displacement, 0.1, 1e-12);

    est.translation = {0, 0, 0};
    EXPECT_EQ(infer_joint(est, {0, 0, 0}).kind, MotionKind::Stationary);

    const Rotation r = Rotation::about_z(deg_to_rad(30));
    est.rotation = r;
    est.translation = Vec3{1, 0, 0} - r.rotate({1, 0, 0});
    EXPECT_LT(dist(est.translation, {0.13397, -0.5, 0}), 1e-5);
    j = infer_joint(est, {1, 0, 0});
    EXPECT_EQ(j.kind, MotionKind::Revolute);
    EXPECT_LT(dist(j.axis_dir, {0, 0, 1}), 1e-6);
    EXPECT_NEAR(j.displacement, 0.5236, 1e-4);
    EXPECT_LT(dist(j.axis_point, {1, 0, 0}), 1e-6);
}

TEST(InferJoint, AxisHintFlipsSign) {
    RigidTransformEstimate est;
    est.rotation = Rotation::about_z(deg_to_rad(40));
    const auto j = infer_joint(est, {0, 0, 0}, Vec3{0, 0, -1});
    EXPECT_LT(dist(j.axis_dir, {0, 0, -1}), 1e-12);
    EXPECT_NEAR(j.displacement, -deg_to_rad(40), 1e-12);
}

TEST(InferJoint, PivotNearestReferenceAndResidual) {
    std::mt19937_64 rng(26);
    for (int i = 0; i < 300; ++i) {
        const Vec3 u = artic::testing::random_unit(rng);
        const Vec3 c = artic::testing::random_vec(rng, 1.0);
        const double angle = deg_to_rad(std::uniform_real_distribution<double>(2.0, 170.0)(rng));
        const Pose m = eigen_screw(c, u, angle);
        RigidTransformEstimate est;
        est.rotation = m.rotation;
        est.translation = m.translation;
        const Vec3 ref = c + u * 0.37 + artic::testing::random_vec(rng, 0.01);
        const auto j = infer_joint(est, ref, u);
        ASSERT_EQ(j.kind, MotionKind::Revolute);
        EXPECT_LT(dist(j.axis_dir, u), 1e-9);
        EXPECT_NEAR(j.displacement, angle, 1e-9);
        EXPECT_LT(pivot_residual(m.rotation, m.translation, j.axis_point), 1e-9);
        // The reported point is the foot of the perpendicular from the reference.
        EXPECT_NEAR((j.axis_point - ref).dot(u), 0.0, 1e-9);
        EXPECT_LT(line_distance(j.axis_point, j.axis_dir, c, u), 1e-9);
    }
}

TEST(InteractivePerception, DoorSwingFromObservations) {
    const auto obj0 = scene::load_scene_file(artic::testing::data_path("scenes/microwave_basic.json"));
    auto obj = obj0;
    obj.set_state("door", deg_to_rad(30));
    scene::ObservationConfig cfg;
    cfg.points = 500;
    cfg.seed = 4;
    const auto x0 = scene::observe_part(obj0, "door", cfg);
    const auto xt = scene::observe_part(obj, "door", cfg);
    const auto truth = obj0.world_joint("door");
    const auto j = interactive_perception(x0, xt, {}, x0.centroid(), truth.axis_dir);
    ASSERT_EQ(j.kind, MotionKind::Revolute);
    EXPECT_LT(rad_to_deg(std::acos(std::min(1.0, j.axis_dir.dot(truth.axis_dir)))), 0.1);
    EXPECT_NEAR(j.displacement, deg_to_rad(30), deg_to_rad(30) * 0.005);
    EXPECT_LT(line_distance(j.axis_point, j.axis_dir, truth.axis_point, truth.axis_dir), 1e-6);
}

TEST(InteractivePerception, NoisyDrawerSlide) {
    const auto obj0 = scene::load_scene_file(artic::testing::data_path("scenes/storage_furniture.json"));
    auto obj = obj0;
    obj.set_state("drawer", 0.12);
    scene::ObservationConfig cfg;
    cfg.points = 500;
    cfg.seed = 5;
    cfg.noise_sigma = 0.001;
    cfg.noise_seed = 100;
    const auto x0 = scene::observe_part(obj0, "drawer", cfg);
    cfg.noise_seed = 101;
    const auto xt = scene::observe_part(obj, "drawer", cfg);
    const auto j = interactive_perception(x0, xt, {}, x0.centroid(), obj0.world_joint("drawer").axis_dir);
    ASSERT_EQ(j.kind, MotionKind::Prismatic);
    EXPECT_NEAR(j.displacement, 0.12, 0.005);
}

TEST(InteractivePerception, IdenticalCloudsAreStationary) {
    const auto obj = scene::load_scene_file(artic::testing::data_path("scenes/microwave_basic.json"));
    scene::ObservationConfig cfg;
    const auto x0 = scene::observe_part(obj, "door", cfg);
    EXPECT_EQ(interactive_perception(x0, x0, {}, x0.centroid()).kind, MotionKind::Stationary);
}

TEST(PoseErrors, ZeroForIdenticalEstimates) {
    JointEstimate j{MotionKind::Revolute, {0, 0, 1}, {1, 2, 3}, 0.4};
    const auto e = pose_errors(j, j);
    EXPECT_EQ(e.axis_deg, 0.0);
    EXPECT_EQ(e.axis_distance_m, 0.0);
    EXPECT_EQ(e.displacement, 0.0);
    std::vector<PoseErrors> batch{pose_errors(Pose::identity(), Pose::identity())};
    EXPECT_EQ(accuracy_within(batch, 5.0, 0.05), 1.0);
}

TEST(PoseErrors, AccuracyCounting) {
    std::vector<PoseErrors> batch(2);
    batch[0].rotation_deg = 3.0;
    batch[0].translation_m = 0.02;
    batch[1].rotation_deg = 10.0;
    batch[1].translation_m = 0.01;
    const auto s = summarize(batch);
    EXPECT_DOUBLE_EQ(s.a5, 0.5);
    EXPECT_DOUBLE_EQ(s.a10, 1.0);
}

TEST(PoseErrors, AntiparallelAxesAgree) {
    JointEstimate a{MotionKind::Revolute, {0, 0, 1}, {0, 0, 0}, 0.5};
    JointEstimate b{MotionKind::Revolute, {0, 0, -1}, {0, 0, 2}, -0.5};
    const auto e = pose_errors(a, b);
    EXPECT_NEAR(e.axis_deg, 0.0, 1e-12);
    EXPECT_NEAR(e.axis_distance_m, 0.0, 1e-12);
    EXPECT_NEAR(e.displacement, 0.0, 1e-12);
}

TEST(PoseErrors, KindMismatch) {
    JointEstimate a{MotionKind::Revolute, {0, 0, 1}, {}, 0.5};
    JointEstimate b{MotionKind::Prismatic, {0, 0, 1}, {}, 0.5};
    try {
        pose_errors(a, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::KindMismatch);
    }
}

TEST(LineDistance, ParallelAndSkew) {
    EXPECT_NEAR(line_distance({0, 0, 0}, {0, 0, 1}, {1, 0, 5}, {0, 0, -1}), 1.0, 1e-12);
    EXPECT_NEAR(line_distance({0, 0, 0}, {1, 0, 0}, {0, 0, 2}, {0, 1, 0}), 2.0, 1e-12);
}
