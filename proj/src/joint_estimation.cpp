#include "artic/joint_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "artic/error.hpp"

namespace artic::joint {

namespace {

Eigen::Vector3d to_eigen(const Vec3& v) { return {v.x, v.y, v.z}; }
Vec3 from_eigen(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Rotation rotation_from_eigen(const Eigen::Matrix3d& m) {
    geom::Mat3 r;
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) {
            r[i][k] = m(i, k);
        }
    }
    return Rotation::from_matrix(r);
}

void check_pair(const PointCloud& x0, const PointCloud& xt) {
    if (x0.size() != xt.size()) {
        throw Error(ErrorCode::DegenerateInput, "clouds must have equal length (index correspondence)");
    }
    if (x0.size() < 3) {
        throw Error(ErrorCode::DegenerateInput, "at least 3 corresponding points are required");
    }
}

// Collinear (or coincident) sources leave the rotation about that line undetermined.
bool rank_deficient(const PointCloud& x0, std::span<const std::size_t> idx) {
    Eigen::Vector3d mu = Eigen::Vector3d::Zero();
    for (std::size_t i : idx) {
        mu += to_eigen(x0[i]);
    }
    mu /= static_cast<double>(idx.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t i : idx) {
        const Eigen::Vector3d d = to_eigen(x0[i]) - mu;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(idx.size());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov, Eigen::EigenvaluesOnly);
    const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
    return !(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2);
}

double rmse_over(const PointCloud& x0, const PointCloud& xt, const Pose& p,
                 const std::vector<bool>& mask) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        if (mask[i]) {
            sum += (geom::pose_apply(p, x0[i]) - xt[i]).squared_norm();
            ++count;
        }
    }
    return count ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
}

}  // namespace

std::size_t RigidTransformEstimate::inlier_count() const {
    return static_cast<std::size_t>(std::count(inlier_mask.begin(), inlier_mask.end(), true));
}

const char* motion_kind_name(MotionKind kind) {
    switch (kind) {
    case MotionKind::Revolute: return "revolute";
    case MotionKind::Prismatic: return "prismatic";
    case MotionKind::Stationary: return "stationary";
    }
    return "stationary";
}

RigidTransformEstimate umeyama_align(const PointCloud& x0, const PointCloud& xt,
                                     std::span<const std::size_t> indices) {
    if (x0.size() != xt.size()) {
        throw Error(ErrorCode::DegenerateInput, "clouds must have equal length (index correspondence)");
    }
    if (indices.size() < 3) {
        throw Error(ErrorCode::DegenerateInput, "at least 3 corresponding points are required");
    }
    if (rank_deficient(x0, indices)) {
        throw Error(ErrorCode::DegenerateInput, "source points are collinear");
    }

    const double n = static_cast<double>(indices.size());
    Eigen::Vector3d mu0 = Eigen::Vector3d::Zero();
    Eigen::Vector3d mut = Eigen::Vector3d::Zero();
    for (std::size_t i : indices) {
        mu0 += to_eigen(x0[i]);
        mut += to_eigen(xt[i]);
    }
    mu0 /= n;
    mut /= n;

    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    for (std::size_t i : indices) {
        h += (to_eigen(xt[i]) - mut) * (to_eigen(x0[i]) - mu0).transpose();
    }
    h /= n;

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d v = svd.matrixV();
    Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
    s(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Eigen::Matrix3d r = u * s * v.transpose();
    const Eigen::Vector3d t = mut - r * mu0;

    RigidTransformEstimate est;
    est.rotation = rotation_from_eigen(r);
    est.translation = from_eigen(t);
    est.inlier_mask.assign(x0.size(), false);
    for (std::size_t i : indices) {
        est.inlier_mask[i] = true;
    }
    est.rmse = rmse_over(x0, xt, est.pose(), est.inlier_mask);
    return est;
}

RigidTransformEstimate umeyama_align(const PointCloud& x0, const PointCloud& xt) {
    check_pair(x0, xt);
    std::vector<std::size_t> all(x0.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return umeyama_align(x0, xt, all);
}

RigidTransformEstimate ransac_align(const PointCloud& x0, const PointCloud& xt,
                                    const RansacParams& params) {
    check_pair(x0, xt);
    if (params.iterations < 1 || !(params.inlier_threshold > 0.0)) {
        throw std::invalid_argument("ransac_align: iterations >= 1 and threshold > 0 required");
    }
    const std::size_t n = x0.size();
    {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        if (rank_deficient(x0, all)) {
            throw Error(ErrorCode::DegenerateInput, "source points are collinear");
        }
    }

    const std::size_t k = std::clamp<std::size_t>(params.min_sample, 3, n);
    std::mt19937_64 rng(params.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    std::vector<bool> best_mask;
    std::size_t best_count = 0;
    double best_rmse = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> sample;
    std::vector<bool> mask(n);
    for (std::size_t it = 0; it < params.iterations; ++it) {
        sample.clear();
        while (sample.size() < k) {
            const std::size_t idx = pick(rng);
            if (std::find(sample.begin(), sample.end(), idx) == sample.end()) {
                sample.push_back(idx);
            }
        }
        RigidTransformEstimate hyp;
        try {
            hyp = umeyama_align(x0, xt, sample);
        } catch (const Error&) {
            continue;  // degenerate minimal sample
        }
        const Pose p = hyp.pose();
        std::size_t count = 0;
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = (geom::pose_apply(p, x0[i]) - xt[i]).norm();
            mask[i] = r < params.inlier_threshold;
            if (mask[i]) {
                ++count;
                sq += r * r;
            }
        }
        const double rmse = count ? std::sqrt(sq / static_cast<double>(count)) : 0.0;
        if (count > best_count || (count == best_count && count > 0 && rmse < best_rmse)) {
            best_count = count;
            best_rmse = rmse;
            best_mask = mask;
        }
    }

    if (best_count < 3) {
        throw Error(ErrorCode::NoConsensus,
                    "best hypothesis has " + std::to_string(best_count) + " inliers");
    }
    std::vector<std::size_t> inliers;
    inliers.reserve(best_count);
    for (std::size_t i = 0; i < n; ++i) {
        if (best_mask[i]) {
            inliers.push_back(i);
        }
    }
    RigidTransformEstimate refit = umeyama_align(x0, xt, inliers);
    refit.inlier_mask = best_mask;
    refit.rmse = rmse_over(x0, xt, refit.pose(), best_mask);
    return refit;
}

double pivot_residual(const Rotation& r, const Vec3& t, const Vec3& c) {
    return (c - r.rotate(c) - t).norm();
}

JointEstimate infer_joint(const RigidTransformEstimate& est, const Vec3& reference,
                          const std::optional<Vec3>& axis_hint,
                          const InferenceThresholds& thresholds) {
    JointEstimate out;
    const geom::AngleAxis aa = geom::rotation_angle_axis(est.rotation);
    const Vec3& t = est.translation;

    if (aa.angle >= thresholds.min_angle) {
        const Vec3 u = aa.axis;
        // Pivot closest to the origin: c0 = (t_perp + cot(theta/2) u x t_perp) / 2.
        // The axial component of t is the part the pivot equation cannot absorb.
        const Vec3 t_perp = t - u * u.dot(t);
        const double cot_half = 1.0 / std::tan(0.5 * aa.angle);
        const Vec3 c0 = (t_perp + u.cross(t_perp) * cot_half) * 0.5;
        out.kind = MotionKind::Revolute;
        out.axis_dir = u;
        out.axis_point = c0 + u * u.dot(reference - c0);
        out.displacement = aa.angle;
    } else if (t.norm() >= thresholds.min_translation) {
        out.kind = MotionKind::Prismatic;
        out.axis_dir = t / t.norm();
        out.displacement = t.norm();
    } else {
        out.kind = MotionKind::Stationary;
        out.displacement = 0.0;
        if (axis_hint) {
            out.axis_dir = axis_hint->normalized();
        }
        return out;
    }

    if (axis_hint && out.axis_dir.dot(*axis_hint) < 0.0) {
        out.axis_dir = -out.axis_dir;
        out.displacement = -out.displacement;
    }
    return out;
}

JointEstimate interactive_perception(const PointCloud& x0, const PointCloud& xt,
                                     const RansacParams& params, const Vec3& reference,
                                     const std::optional<Vec3>& axis_hint,
                                     const InferenceThresholds& thresholds) {
    return infer_joint(ransac_align(x0, xt, params), reference, axis_hint, thresholds);
}

double line_distance(const Vec3& p1, const Vec3& d1, const Vec3& p2, const Vec3& d2) {
    const Vec3 a = d1.normalized();
    const Vec3 b = d2.normalized();
    const Vec3 n = a.cross(b);
    const Vec3 w = p2 - p1;
    if (n.norm() < 1e-9) {
        return (w - a * a.dot(w)).norm();
    }
    return std::abs(w.dot(n)) / n.norm();
}

namespace {

double line_angle_deg(const Vec3& a, const Vec3& b) {
    const Vec3 u = a.normalized();
    const Vec3 v = b.normalized();
    return geom::rad_to_deg(std::atan2(u.cross(v).norm(), std::abs(u.dot(v))));
}

}  // namespace

PoseErrors pose_errors(const Pose& est, const Pose& truth) {
    PoseErrors e;
    e.rotation_deg = geom::rad_to_deg(geom::geodesic_distance(est.rotation, truth.rotation));
    e.translation_m = (est.translation - truth.translation).norm();
    return e;
}

PoseErrors pose_errors(const JointEstimate& est, const JointEstimate& truth) {
    if (est.kind != truth.kind) {
        throw Error(ErrorCode::KindMismatch, std::string("estimate is ") + motion_kind_name(est.kind) +
                                                 ", truth is " + motion_kind_name(truth.kind));
    }
    PoseErrors e;
    if (est.kind == MotionKind::Stationary) {
        return e;
    }
    e.axis_deg = line_angle_deg(est.axis_dir, truth.axis_dir);
    const double aligned = est.axis_dir.dot(truth.axis_dir) < 0.0 ? -est.displacement : est.displacement;
    e.displacement = std::abs(aligned - truth.displacement);
    if (est.kind == MotionKind::Revolute) {
        e.axis_distance_m = line_distance(est.axis_point, est.axis_dir, truth.axis_point, truth.axis_dir);
    }
    return e;
}

double accuracy_within(std::span<const PoseErrors> errors, double max_deg, double max_m) {
    if (errors.empty()) {
        return 0.0;
    }
    std::size_t hits = 0;
    for (const auto& e : errors) {
        if (e.rotation_deg <= max_deg && e.translation_m <= max_m) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(errors.size());
}

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) {
        return 0.0;
    }
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

template <typename F>
double median_field(std::span<const PoseErrors> errors, F field) {
    std::vector<double> v;
    v.reserve(errors.size());
    for (const auto& e : errors) {
        v.push_back(field(e));
    }
    return median_of(std::move(v));
}

}  // namespace

PoseErrorSummary summarize(std::span<const PoseErrors> errors) {
    PoseErrorSummary s;
    s.count = errors.size();
    if (errors.empty()) {
        return s;
    }
    s.median_rotation_deg = median_field(errors, [](const PoseErrors& e) { return e.rotation_deg; });
    s.median_translation_m = median_field(errors, [](const PoseErrors& e) { return e.translation_m; });
    s.median_axis_deg = median_field(errors, [](const PoseErrors& e) { return e.axis_deg; });
    s.median_axis_distance_m = median_field(errors, [](const PoseErrors& e) { return e.axis_distance_m; });
    s.median_displacement = median_field(errors, [](const PoseErrors& e) { return e.displacement; });
    s.a5 = accuracy_within(errors, 5.0, 0.05);
    s.a10 = accuracy_within(errors, 10.0, 0.10);
    return s;
}

void to_json(nlohmann::json& j, const JointEstimate& e) {
    j = nlohmann::json{{"kind", motion_kind_name(e.kind)}, {"displacement", e.displacement}};
    if (e.kind != MotionKind::Stationary) {
        j["axis_dir"] = e.axis_dir;
    }
    if (e.kind == MotionKind::Revolute) {
        j["axis_point"] = e.axis_point;
    }
}

void to_json(nlohmann::json& j, const RigidTransformEstimate& e) {
    j = nlohmann::json{{"rotation", e.rotation},
                       {"translation", e.translation},
                       {"inliers", e.inlier_count()},
                       {"points", e.inlier_mask.size()},
                       {"rmse", e.rmse}};
}

void to_json(nlohmann::json& j, const PoseErrors& e) {
    j = nlohmann::json{{"R_e_deg", e.rotation_deg},
                       {"T_e_m", e.translation_m},
                       {"theta_e_deg", e.axis_deg},
                       {"d_e_m", e.axis_distance_m},
                       {"s_e", e.displacement}};
}

void to_json(nlohmann::json& j, const PoseErrorSummary& s) {
    j = nlohmann::json{{"count", s.count},
                       {"median_R_e_deg", s.median_rotation_deg},
                       {"median_T_e_m", s.median_translation_m},
                       {"median_theta_e_deg", s.median_axis_deg},
                       {"median_d_e_m", s.median_axis_distance_m},
                       {"median_s_e", s.median_displacement},
                       {"A5", s.a5},
                       {"A10", s.a10}};
}

}  // namespace artic::joint
