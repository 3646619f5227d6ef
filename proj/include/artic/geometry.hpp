#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace artic::geom {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    constexpr bool operator==(const Vec3&) const = default;

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    constexpr double squared_norm() const { return dot(*this); }
    Vec3 normalized() const;
    bool is_finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

std::ostream& operator<<(std::ostream& os, const Vec3& v);

using Mat3 = std::array<std::array<double, 3>, 3>;

Vec3 mat_mul(const Mat3& m, const Vec3& v);

// Unit quaternion (w, x, y, z). The stored value is always normalized; the
// sign is canonicalized (w >= 0) only when serializing.
class Rotation {
public:
    Rotation() = default;
    // Normalizes the input. A zero quaternion is rejected with std::invalid_argument.
    Rotation(double w, double x, double y, double z);

    static Rotation identity() { return {}; }
    // Rotation of `angle` radians about `axis` (need not be unit length).
    static Rotation from_axis_angle(const Vec3& axis, double angle);
    static Rotation from_matrix(const Mat3& m);
    static Rotation about_x(double angle) { return from_axis_angle({1, 0, 0}, angle); }
    static Rotation about_y(double angle) { return from_axis_angle({0, 1, 0}, angle); }
    static Rotation about_z(double angle) { return from_axis_angle({0, 0, 1}, angle); }

    double w() const { return w_; }
    double x() const { return x_; }
    double y() const { return y_; }
    double z() const { return z_; }

    Rotation operator*(const Rotation& o) const;
    Rotation inverse() const { return Rotation(w_, -x_, -y_, -z_, raw_tag{}); }
    Vec3 rotate(const Vec3& v) const;
    Mat3 matrix() const;

    // Same rotation with w >= 0.
    Rotation canonical() const;

private:
    struct raw_tag {};
    Rotation(double w, double x, double y, double z, raw_tag) : w_(w), x_(x), y_(y), z_(z) {}

    double w_ = 1.0;
    double x_ = 0.0;
    double y_ = 0.0;
    double z_ = 0.0;
};

struct AngleAxis {
    double angle = 0.0;  // [0, pi]
    Vec3 axis{0, 0, 1};
};

// Geodesic angle in [0, pi] and unit axis. Below 1e-12 rad the axis is (0,0,1).
AngleAxis rotation_angle_axis(const Rotation& r);

// Angle of a^-1 * b, in [0, pi].
double geodesic_distance(const Rotation& a, const Rotation& b);

struct Pose {
    Rotation rotation;
    Vec3 translation;

    static Pose identity() { return {}; }
};

Vec3 pose_apply(const Pose& p, const Vec3& v);
// (a * b)(v) = a(b(v))
Pose pose_compose(const Pose& a, const Pose& b);
Pose pose_inverse(const Pose& p);

// Rigid motion that rotates by `angle` about the line through `point` along `dir`.
Pose rotation_about_line(const Vec3& point, const Vec3& dir, double angle);

struct OrientedBox {
    Vec3 center;
    Vec3 half_extents{0.5, 0.5, 0.5};
    Rotation rotation;

    // Column k of the rotation matrix: the box's k-th local axis in the parent frame.
    Vec3 axis(int k) const;
    // Full extent of the box measured along unit direction `dir`.
    double extent_along(const Vec3& dir) const;
    Pose pose() const { return {rotation, center}; }
};

void validate_box(const OrientedBox& b);

OrientedBox transform_box(const Pose& p, const OrientedBox& b);

struct PointCloud {
    std::vector<Vec3> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    const Vec3& operator[](std::size_t i) const { return points[i]; }
    Vec3& operator[](std::size_t i) { return points[i]; }
    Vec3 centroid() const;
    bool operator==(const PointCloud&) const = default;
};

PointCloud transform_cloud(const Pose& p, const PointCloud& cloud);

// n points distributed over the 6 faces in proportion to face area, each
// uniform on its face. Deterministic for a fixed seed.
PointCloud sample_box_surface(const OrientedBox& b, std::size_t n, std::uint64_t seed);

// Plain-text clouds: one "x y z" triple per line; blank lines and '#' comments skipped.
PointCloud read_xyz(std::istream& in);
PointCloud read_xyz_file(const std::string& path);
void write_xyz(std::ostream& out, const PointCloud& cloud);
void write_xyz_file(const std::string& path, const PointCloud& cloud);

// JSON encodings.
void to_json(nlohmann::json& j, const Vec3& v);
void from_json(const nlohmann::json& j, Vec3& v);
void to_json(nlohmann::json& j, const Rotation& r);
void from_json(const nlohmann::json& j, Rotation& r);
void to_json(nlohmann::json& j, const Pose& p);
void from_json(const nlohmann::json& j, Pose& p);
void to_json(nlohmann::json& j, const OrientedBox& b);
void from_json(const nlohmann::json& j, OrientedBox& b);

}  // namespace artic::geom
