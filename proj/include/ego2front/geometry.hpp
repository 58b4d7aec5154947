#pragma once

// Rigid poses and the two camera models. Camera frames follow the usual
// computer-vision convention: +z optical axis into the scene, +x right,
// +y down (aligned with pixel axes).

#include <array>
#include <cmath>

#include "ego2front/common.hpp"

namespace ego2front {

struct Vec2 {
    double x = 0, y = 0;
};

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0 ? Vec3{x / n, y / n, z / n} : Vec3{0, 0, 0};
    }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
};

struct Mat3 {
    // row-major
    std::array<double, 9> m = {1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return {}; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += m[i * 3 + k] * o.m[k * 3 + j];
                r.m[i * 3 + j] = s;
            }
        return r;
    }

    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i * 3 + j] = m[j * 3 + i];
        return r;
    }

    // rotation about +x (pitch), +y (yaw), +z (roll)
    static Mat3 rot_x(double a) {
        double c = std::cos(a), s = std::sin(a);
        Mat3 r;
        r.m = {1, 0, 0, 0, c, -s, 0, s, c};
        return r;
    }
    static Mat3 rot_y(double a) {
        double c = std::cos(a), s = std::sin(a);
        Mat3 r;
        r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
        return r;
    }
    static Mat3 rot_z(double a) {
        double c = std::cos(a), s = std::sin(a);
        Mat3 r;
        r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
        return r;
    }
};

// Euler angles (radians) applied intrinsically as yaw, then pitch, then roll,
// plus a translation in scene units.
struct RigidPose {
    double yaw = 0, pitch = 0, roll = 0;
    Vec3 translation;

    Mat3 rotation() const {
        return Mat3::rot_y(yaw) * Mat3::rot_x(pitch) * Mat3::rot_z(roll);
    }

    Vec3 apply(const Vec3& p) const { return rotation() * p + translation; }

    bool operator==(const RigidPose& o) const {
        return yaw == o.yaw && pitch == o.pitch && roll == o.roll &&
               translation.x == o.translation.x && translation.y == o.translation.y &&
               translation.z == o.translation.z;
    }
};

// rigid transform with a precomputed rotation matrix
struct Transform {
    Mat3 rot;
    Vec3 t;

    Vec3 apply(const Vec3& p) const { return rot * p + t; }
    Vec3 apply_dir(const Vec3& d) const { return rot * d; }
    Transform inverse() const {
        Mat3 rt = rot.transposed();
        return {rt, (rt * t) * -1.0};
    }
    Transform then(const Transform& outer) const {
        // outer ∘ this
        return {outer.rot * rot, outer.rot * t + outer.t};
    }
    static Transform from_pose(const RigidPose& p) { return {p.rotation(), p.translation}; }
};

// Equidistant fisheye: r = focal * theta.
struct FisheyeCamera {
    double focal = 0;
    Vec2 principal_point;
    double fov_diagonal = 3.141592653589793;  // 180 degree lens
    RigidPose mount_offset;                   // camera-to-head transform

    void validate() const {
        require(focal > 0, ErrorCode::ConfigMismatch, "fisheye: focal must be positive");
        require(fov_diagonal <= 3.14159265358979323846 + 1e-12, ErrorCode::ConfigMismatch,
                "fisheye: fov_diagonal must be <= pi");
    }
};

// point given in camera coordinates -> pixel
inline Vec2 fisheye_project(const Vec3& point, const FisheyeCamera& cam) {
    double rxy = std::sqrt(point.x * point.x + point.y * point.y);
    double theta = std::atan2(rxy, point.z);
    if (theta >= cam.fov_diagonal / 2.0)
        raise(ErrorCode::PointOutsideFov,
              "fisheye_project: theta=" + std::to_string(theta) + " outside fov/2");
    if (rxy == 0.0) return cam.principal_point;  // on the optical axis
    double r = cam.focal * theta;
    double phi = std::atan2(point.y, point.x);
    return {cam.principal_point.x + r * std::cos(phi),
            cam.principal_point.y + r * std::sin(phi)};
}

// pixel -> unit ray in camera coordinates (inverse of the equidistant model)
inline Vec3 fisheye_unproject(const Vec2& px, const FisheyeCamera& cam) {
    double dx = px.x - cam.principal_point.x;
    double dy = px.y - cam.principal_point.y;
    double r = std::sqrt(dx * dx + dy * dy);
    double theta = r / cam.focal;
    if (r == 0.0) return {0, 0, 1};
    double st = std::sin(theta), ct = std::cos(theta);
    return {st * dx / r, st * dy / r, ct};
}

struct PinholeCamera {
    double focal = 0;
    Vec2 principal_point;

    Vec2 project(const Vec3& p) const {
        require(p.z > 1e-9, ErrorCode::PointOutsideFov, "pinhole: point behind camera");
        return {principal_point.x + focal * p.x / p.z, principal_point.y + focal * p.y / p.z};
    }

    Vec3 unproject(const Vec2& px) const {
        return Vec3{(px.x - principal_point.x) / focal, (px.y - principal_point.y) / focal, 1.0}
            .normalized();
    }
};

}  // namespace ego2front
