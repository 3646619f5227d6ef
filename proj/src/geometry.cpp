#include "artic/geometry.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "artic/error.hpp"

namespace artic::geom {

Vec3 Vec3::normalized() const {
    const double n = norm();
    if (n == 0.0) {
        return *this;
    }
    return *this / n;
}

std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
}

Vec3 mat_mul(const Mat3& m, const Vec3& v) {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

Rotation::Rotation(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw std::invalid_argument("rotation quaternion must be finite and non-zero");
    }
    w_ = w / n;
    x_ = x / n;
    y_ = y / n;
    z_ = z / n;
}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle) {
    const Vec3 u = axis.normalized();
    if (u.squared_norm() == 0.0) {
        return identity();
    }
    const double h = 0.5 * angle;
    const double s = std::sin(h);
    return Rotation(std::cos(h), u.x * s, u.y * s, u.z * s);
}

Rotation Rotation::from_matrix(const Mat3& m) {
    // Shepperd's method: branch on the largest diagonal term for stability.
    const double trace = m[0][0] + m[1][1] + m[2][2];
    double w, x, y, z;
    if (trace >= m[0][0] && trace >= m[1][1] && trace >= m[2][2]) {
        const double s = std::sqrt(1.0 + trace) * 2.0;
        w = 0.25 * s;
        x = (m[2][1] - m[1][2]) / s;
        y = (m[0][2] - m[2][0]) / s;
        z = (m[1][0] - m[0][1]) / s;
    } else if (m[0][0] >= m[1][1] && m[0][0] >= m[2][2]) {
        const double s = std::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2.0;
        w = (m[2][1] - m[1][2]) / s;
        x = 0.25 * s;
        y = (m[0][1] + m[1][0]) / s;
        z = (m[0][2] + m[2][0]) / s;
    } else if (m[1][1] >= m[2][2]) {
        const double s = std::sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]) * 2.0;
        w = (m[0][2] - m[2][0]) / s;
        x = (m[0][1] + m[1][0]) / s;
        y = 0.25 * s;
        z = (m[1][2] + m[2][1]) / s;
    } else {
        const double s = std::sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]) * 2.0;
        w = (m[1][0] - m[0][1]) / s;
        x = (m[0][2] + m[2][0]) / s;
        y = (m[1][2] + m[2][1]) / s;
        z = 0.25 * s;
    }
    return Rotation(w, x, y, z);
}

Rotation Rotation::operator*(const Rotation& o) const {
    return Rotation(w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_,
                    w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_,
                    w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_,
                    w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_);
}

Vec3 Rotation::rotate(const Vec3& v) const {
    // v' = v + 2w (q x v) + 2 q x (q x v)
    const Vec3 q{x_, y_, z_};
    const Vec3 t = q.cross(v) * 2.0;
    return v + t * w_ + q.cross(t);
}

Mat3 Rotation::matrix() const {
    const double xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
    const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
    const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
    return {{{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)},
             {2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)},
             {2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}}};
}

Rotation Rotation::canonical() const {
    if (w_ < 0.0) {
        return Rotation(-w_, -x_, -y_, -z_, raw_tag{});
    }
    return *this;
}

AngleAxis rotation_angle_axis(const Rotation& r) {
    const Rotation c = r.canonical();
    const Vec3 v{c.x(), c.y(), c.z()};
    const double s = v.norm();
    const double angle = 2.0 * std::atan2(s, c.w());
    if (angle < 1e-12 || s == 0.0) {
        return {0.0, {0, 0, 1}};
    }
    return {angle, v / s};
}

double geodesic_distance(const Rotation& a, const Rotation& b) {
    return rotation_angle_axis(a.inverse() * b).angle;
}

Vec3 pose_apply(const Pose& p, const Vec3& v) { return p.rotation.rotate(v) + p.translation; }

Pose pose_compose(const Pose& a, const Pose& b) {
    return {a.rotation * b.rotation, a.rotation.rotate(b.translation) + a.translation};
}

Pose pose_inverse(const Pose& p) {
    const Rotation inv = p.rotation.inverse();
    return {inv, -inv.rotate(p.translation)};
}

Pose rotation_about_line(const Vec3& point, const Vec3& dir, double angle) {
    const Rotation r = Rotation::from_axis_angle(dir, angle);
    return {r, point - r.rotate(point)};
}

Vec3 OrientedBox::axis(int k) const {
    const Mat3 m = rotation.matrix();
    return {m[0][k], m[1][k], m[2][k]};
}

double OrientedBox::extent_along(const Vec3& dir) const {
    const Vec3 u = dir.normalized();
    return 2.0 * (std::abs(u.dot(axis(0))) * half_extents.x +
                  std::abs(u.dot(axis(1))) * half_extents.y +
                  std::abs(u.dot(axis(2))) * half_extents.z);
}

void validate_box(const OrientedBox& b) {
    if (!(b.half_extents.x > 0.0 && b.half_extents.y > 0.0 && b.half_extents.z > 0.0)) {
        throw Error(ErrorCode::InvariantViolation, "box half extents must be strictly positive");
    }
    if (!b.center.is_finite() || !b.half_extents.is_finite()) {
        throw Error(ErrorCode::InvariantViolation, "box fields must be finite");
    }
}

OrientedBox transform_box(const Pose& p, const OrientedBox& b) {
    return {pose_apply(p, b.center), b.half_extents, p.rotation * b.rotation};
}

Vec3 PointCloud::centroid() const {
    Vec3 c;
    if (points.empty()) {
        return c;
    }
    for (const auto& p : points) {
        c += p;
    }
    return c / static_cast<double>(points.size());
}

PointCloud transform_cloud(const Pose& p, const PointCloud& cloud) {
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const auto& v : cloud.points) {
        out.points.push_back(pose_apply(p, v));
    }
    return out;
}

PointCloud sample_box_surface(const OrientedBox& b, std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw std::invalid_argument("sample_box_surface: n must be >= 1");
    }
    const Vec3 h = b.half_extents;
    // Faces in order +x, -x, +y, -y, +z, -z.
    const std::array<double, 6> area = {h.y * h.z, h.y * h.z, h.x * h.z,
                                        h.x * h.z, h.x * h.y, h.x * h.y};
    std::array<double, 6> cumulative{};
    double total = 0.0;
    for (int f = 0; f < 6; ++f) {
        total += area[f];
        cumulative[f] = total;
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Pose box_pose = b.pose();

    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pick = unit(rng) * total;
        int face = static_cast<int>(std::lower_bound(cumulative.begin(), cumulative.end(), pick) -
                                    cumulative.begin());
        face = std::min(face, 5);
        const double a = 2.0 * unit(rng) - 1.0;
        const double c = 2.0 * unit(rng) - 1.0;
        const double sign = (face % 2 == 0) ? 1.0 : -1.0;
        Vec3 local;
        switch (face / 2) {
        case 0: local = {sign * h.x, a * h.y, c * h.z}; break;
        case 1: local = {a * h.x, sign * h.y, c * h.z}; break;
        default: local = {a * h.x, c * h.y, sign * h.z}; break;
        }
        cloud.points.push_back(pose_apply(box_pose, local));
    }
    return cloud;
}

PointCloud read_xyz(std::istream& in) {
    PointCloud cloud;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        std::istringstream ss(line);
        Vec3 p;
        if (!(ss >> p.x >> p.y >> p.z) || !p.is_finite()) {
            throw Error(ErrorCode::IoError, "malformed point on line " + std::to_string(lineno));
        }
        cloud.points.push_back(p);
    }
    return cloud;
}

PointCloud read_xyz_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path);
    }
    return read_xyz(in);
}

void write_xyz(std::ostream& out, const PointCloud& cloud) {
    out << std::setprecision(17);
    for (const auto& p : cloud.points) {
        out << p.x << ' ' << p.y << ' ' << p.z << '\n';
    }
}

void write_xyz_file(const std::string& path, const PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path);
    }
    write_xyz(out, cloud);
}

void to_json(nlohmann::json& j, const Vec3& v) { j = nlohmann::json::array({v.x, v.y, v.z}); }

void from_json(const nlohmann::json& j, Vec3& v) {
    if (!j.is_array() || j.size() != 3) {
        throw std::invalid_argument("Vec3 must be a 3-element array");
    }
    v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void to_json(nlohmann::json& j, const Rotation& r) {
    const Rotation c = r.canonical();
    j = nlohmann::json::array({c.w(), c.x(), c.y(), c.z()});
}

void from_json(const nlohmann::json& j, Rotation& r) {
    if (!j.is_array() || j.size() != 4) {
        throw std::invalid_argument("Rotation must be a 4-element [w,x,y,z] array");
    }
    r = Rotation(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

void to_json(nlohmann::json& j, const Pose& p) {
    j = nlohmann::json{{"rotation", p.rotation}, {"translation", p.translation}};
}

void from_json(const nlohmann::json& j, Pose& p) {
    p.rotation = j.at("rotation").get<Rotation>();
    p.translation = j.at("translation").get<Vec3>();
}

void to_json(nlohmann::json& j, const OrientedBox& b) {
    j = nlohmann::json{{"center", b.center}, {"half_extents", b.half_extents}, {"rotation", b.rotation}};
}

void from_json(const nlohmann::json& j, OrientedBox& b) {
    b.center = j.at("center").get<Vec3>();
    b.half_extents = j.at("half_extents").get<Vec3>();
    b.rotation = j.contains("rotation") ? j.at("rotation").get<Rotation>() : Rotation::identity();
}

}  // namespace artic::geom
