#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "artic/geometry.hpp"

namespace artic::joint {

using geom::PointCloud;
using geom::Pose;
using geom::Rotation;
using geom::Vec3;

struct RigidTransformEstimate {
    Rotation rotation;
    Vec3 translation;
    std::vector<bool> inlier_mask;
    double rmse = 0.0;  // over inliers only

    Pose pose() const { return {rotation, translation}; }
    std::size_t inlier_count() const;
};

enum class MotionKind { Revolute, Prismatic, Stationary };

const char* motion_kind_name(MotionKind kind);

struct JointEstimate {
    MotionKind kind = MotionKind::Stationary;
    Vec3 axis_dir{0, 0, 1};   // meaningless for Stationary
    Vec3 axis_point;          // Revolute only
    double displacement = 0.0;  // rad (revolute), m (prismatic), 0 (stationary)
};

struct RansacParams {
    std::size_t iterations = 256;
    double inlier_threshold = 0.005;  // m
    std::size_t min_sample = 3;
    std::uint64_t seed = 0;
};

struct InferenceThresholds {
    double min_angle = 0.01;        // rad
    double min_translation = 0.005; // m
};

// Least-squares rigid transform (no scale) mapping x0[i] onto xt[i].
// Throws DegenerateInput for n < 3, size mismatch, or collinear sources.
RigidTransformEstimate umeyama_align(const PointCloud& x0, const PointCloud& xt);

// Same on a subset of corresponding indices.
RigidTransformEstimate umeyama_align(const PointCloud& x0, const PointCloud& xt,
                                     std::span<const std::size_t> indices);

// Throws DegenerateInput or NoConsensus. Deterministic for a fixed seed.
RigidTransformEstimate ransac_align(const PointCloud& x0, const PointCloud& xt,
                                    const RansacParams& params = {});

// Classifies the motion. `reference` selects the reported pivot among all
// points on the rotation axis. When `axis_hint` is given, the reported axis
// is flipped (with the displacement negated) to point along the hint.
JointEstimate infer_joint(const RigidTransformEstimate& est, const Vec3& reference,
                          const std::optional<Vec3>& axis_hint = std::nullopt,
                          const InferenceThresholds& thresholds = {});

JointEstimate interactive_perception(const PointCloud& x0, const PointCloud& xt,
                                     const RansacParams& params, const Vec3& reference,
                                     const std::optional<Vec3>& axis_hint = std::nullopt,
                                     const InferenceThresholds& thresholds = {});

// Residual of the pivot equation (I - R) c = t.
double pivot_residual(const Rotation& r, const Vec3& t, const Vec3& c);

struct PoseErrors {
    double rotation_deg = 0.0;     // R_e
    double translation_m = 0.0;    // T_e
    double axis_deg = 0.0;         // theta_e, sign-invariant
    double axis_distance_m = 0.0;  // d_e between axis lines (revolute)
    double displacement = 0.0;     // s_e, |s_est - s_true| in joint units
};

PoseErrors pose_errors(const Pose& est, const Pose& truth);
// Throws KindMismatch when the kinds differ.
PoseErrors pose_errors(const JointEstimate& est, const JointEstimate& truth);

// Fraction of samples with rotation_deg <= max_deg and translation_m <= max_m.
double accuracy_within(std::span<const PoseErrors> errors, double max_deg, double max_m);

struct PoseErrorSummary {
    std::size_t count = 0;
    double median_rotation_deg = 0.0;
    double median_translation_m = 0.0;
    double median_axis_deg = 0.0;
    double median_axis_distance_m = 0.0;
    double median_displacement = 0.0;
    double a5 = 0.0;   // 5 deg / 5 cm
    double a10 = 0.0;  // 10 deg / 10 cm
};

PoseErrorSummary summarize(std::span<const PoseErrors> errors);

// Distance between two lines given by point and direction.
double line_distance(const Vec3& p1, const Vec3& d1, const Vec3& p2, const Vec3& d2);

void to_json(nlohmann::json& j, const JointEstimate& e);
void to_json(nlohmann::json& j, const RigidTransformEstimate& e);
void to_json(nlohmann::json& j, const PoseErrors& e);
void to_json(nlohmann::json& j, const PoseErrorSummary& s);

}  // namespace artic::joint
