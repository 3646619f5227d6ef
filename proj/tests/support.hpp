#pragma once

#include <cmath>
#include <random>
#include <string>

#include <Eigen/Geometry>

#include "artic/action_program.hpp"
#include "artic/geometry.hpp"

namespace artic::testing {

inline std::string data_path(const std::string& rel) { return std::string(ARTIC_DATA_DIR) + "/" + rel; }

inline geom::Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    geom::Vec3 v;
    do {
        v = {g(rng), g(rng), g(rng)};
    } while (v.norm() < 1e-6);
    return v.normalized();
}

inline geom::Vec3 random_vec(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng), u(rng)};
}

inline geom::Rotation random_rotation(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> a(0.0, geom::kPi);
    return geom::Rotation::from_axis_angle(random_unit(rng), a(rng));
}

inline geom::Pose random_pose(std::mt19937_64& rng) { return {random_rotation(rng), random_vec(rng, 2.0)}; }

// Independent reference implementations built on Eigen.
inline Eigen::Vector3d to_eigen(const geom::Vec3& v) { return {v.x, v.y, v.z}; }

inline Eigen::Matrix3d eigen_rotation(const geom::Vec3& axis, double angle) {
    return Eigen::AngleAxisd(angle, to_eigen(axis).normalized()).toRotationMatrix();
}

inline Eigen::Matrix3d eigen_matrix(const geom::Rotation& r) {
    return Eigen::Quaterniond(r.w(), r.x(), r.y(), r.z()).toRotationMatrix();
}

inline double eigen_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
    return Eigen::AngleAxisd(a.transpose() * b).angle();
}

inline program::StrategySet random_strategy_set(std::mt19937_64& rng) {
    static const char* names[] = {"Door", "Handle", "Button", "Lid", "Drawer", "Left door", "knob_2", "Top-right door"};
    std::uniform_int_distribution<int> n_strat(1, 4), n_steps(1, 3), name(0, 7), kind(0, 1), mode(0, 3);
    program::StrategySet s;
    const int ns = n_strat(rng);
    for (int i = 1; i <= ns; ++i) {
        program::Strategy st{i, {}};
        const int k = n_steps(rng);
        for (int j = 0; j < k; ++j) {
            program::ActionUnit u;
            u.part_name = names[name(rng)];
            u.joint = kind(rng) ? program::JointKind::Revolute : program::JointKind::Prismatic;
            switch (mode(rng)) {
            case 0: u.delta = program::default_delta(u.joint); break;
            case 1: u.delta = -std::uniform_int_distribution<int>(1, 180)(rng); break;
            case 2: u.delta = std::uniform_real_distribution<double>(-1.0, 1.0)(rng); break;
            default: u.delta = std::ldexp(std::uniform_real_distribution<double>(0.5, 1.0)(rng), -20); break;
            }
            if (u.delta == 0.0) {
                u.delta = 0.25;
            }
            st.steps.push_back(u);
        }
        s.strategies.push_back(st);
    }
    return s;
}

inline double dist(const geom::Vec3& a, const geom::Vec3& b) { return (a - b).norm(); }

}  // namespace artic::testing
