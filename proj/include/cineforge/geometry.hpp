// SPDX-License-Identifier: Apache-2.0

#pragma once

// Pinhole camera, rigid pose and oriented-box primitives.
//
// Conventions: right-handed, camera looks down +z with +x right and +y down.
// Poses are world-to-camera (extrinsic) transforms: X_cam = R * X_world + t.
// "Depth" is always camera-space z, never ray length.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "cineforge/error.hpp"

namespace cineforge {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

    constexpr bool operator==(const Vec3&) const = default;

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const { return *this / norm(); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Row-major 3x3 matrix.
using Mat3 = std::array<std::array<double, 3>, 3>;

inline Vec3 mul(const Mat3& m, const Vec3& v) {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

inline Mat3 transpose(const Mat3& m) {
    Mat3 t{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t[r][c] = m[c][r];
    return t;
}

inline double determinant(const Mat3& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

/// Rotation stored as a unit quaternion (w, x, y, z).
class Rot3 {
public:
    constexpr Rot3() = default;

    /// Normalizes the given quaternion; a zero quaternion is rejected.
    static Rot3 from_quaternion(double w, double x, double y, double z) {
        const double n = std::sqrt(w * w + x * x + y * y + z * z);
        if (!(n > 0.0) || !std::isfinite(n)) {
            throw Error(ErrorCode::InvalidArgument, "quaternion must be finite and non-zero");
        }
        return Rot3(w / n, x / n, y / n, z / n);
    }

    /// Stores the components verbatim. Callers guarantee unit norm.
    static constexpr Rot3 from_unit_quaternion(double w, double x, double y, double z) {
        return Rot3(w, x, y, z);
    }

    static Rot3 from_axis_angle(const Vec3& axis, double angle) {
        const Vec3 a = axis.normalized();
        const double s = std::sin(angle * 0.5);
        return from_quaternion(std::cos(angle * 0.5), a.x * s, a.y * s, a.z * s);
    }

    static Rot3 about_x(double angle) { return from_axis_angle({1, 0, 0}, angle); }
    static Rot3 about_y(double angle) { return from_axis_angle({0, 1, 0}, angle); }
    static Rot3 about_z(double angle) { return from_axis_angle({0, 0, 1}, angle); }

    /// Shepperd's method; the input must be a proper rotation.
    static Rot3 from_matrix(const Mat3& m) {
        const double trace = m[0][0] + m[1][1] + m[2][2];
        double w, x, y, z;
        if (trace > 0.0) {
            const double s = std::sqrt(trace + 1.0) * 2.0;
            w = 0.25 * s;
            x = (m[2][1] - m[1][2]) / s;
            y = (m[0][2] - m[2][0]) / s;
            z = (m[1][0] - m[0][1]) / s;
        } else if (m[0][0] > m[1][1] && m[0][0] > m[2][2]) {
            const double s = std::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2.0;
            w = (m[2][1] - m[1][2]) / s;
            x = 0.25 * s;
            y = (m[0][1] + m[1][0]) / s;
            z = (m[0][2] + m[2][0]) / s;
        } else if (m[1][1] > m[2][2]) {
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
        if (w < 0.0) { w = -w; x = -x; y = -y; z = -z; }
        return from_quaternion(w, x, y, z);
    }

    /// Rotation whose columns are the given orthonormal axes.
    static Rot3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
        Mat3 m{{{c0.x, c1.x, c2.x}, {c0.y, c1.y, c2.y}, {c0.z, c1.z, c2.z}}};
        return from_matrix(m);
    }

    constexpr double w() const { return w_; }
    constexpr double x() const { return x_; }
    constexpr double y() const { return y_; }
    constexpr double z() const { return z_; }
    double norm() const { return std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_); }

    Mat3 matrix() const {
        const double ww = w_ * w_, xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
        const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
        const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
        return {{{ww + xx - yy - zz, 2.0 * (xy - wz), 2.0 * (xz + wy)},
                 {2.0 * (xy + wz), ww - xx + yy - zz, 2.0 * (yz - wx)},
                 {2.0 * (xz - wy), 2.0 * (yz + wx), ww - xx - yy + zz}}};
    }

    /// Column i of the rotation matrix, i.e. the image of the i-th basis vector.
    Vec3 axis(int i) const {
        const Mat3 m = matrix();
        return {m[0][i], m[1][i], m[2][i]};
    }

    Vec3 rotate(const Vec3& v) const {
        // v' = v + 2w(q x v) + 2 q x (q x v)
        const Vec3 q{x_, y_, z_};
        const Vec3 t = q.cross(v) * 2.0;
        return v + t * w_ + q.cross(t);
    }

    Vec3 inverse_rotate(const Vec3& v) const { return inverse().rotate(v); }

    constexpr Rot3 inverse() const { return Rot3(w_, -x_, -y_, -z_); }

    /// Hamilton product followed by renormalization.
    Rot3 operator*(const Rot3& o) const {
        return from_quaternion(w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_,
                               w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_,
                               w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_,
                               w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_);
    }

    constexpr double dot(const Rot3& o) const {
        return w_ * o.w_ + x_ * o.x_ + y_ * o.y_ + z_ * o.z_;
    }

    /// Rotation angle in [0, pi] between this and another rotation.
    double angle_to(const Rot3& o) const {
        const double d = std::min(1.0, std::abs(dot(o)));
        return 2.0 * std::acos(d);
    }

    constexpr bool operator==(const Rot3&) const = default;

private:
    constexpr Rot3(double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {}

    double w_ = 1.0;
    double x_ = 0.0;
    double y_ = 0.0;
    double z_ = 0.0;
};

/// Shortest-arc spherical interpolation. Identical endpoints return the endpoint
/// unchanged so that constant tracks stay bit-exact.
inline Rot3 slerp(const Rot3& a, const Rot3& b, double t) {
    if (a == b || t == 0.0) return a;
    if (t == 1.0) return b;
    double bw = b.w(), bx = b.x(), by = b.y(), bz = b.z();
    double d = a.dot(b);
    if (d < 0.0) {
        d = -d;
        bw = -bw; bx = -bx; by = -by; bz = -bz;
    }
    double wa, wb;
    if (d > 1.0 - 1e-12) {
        wa = 1.0 - t;
        wb = t;
    } else {
        const double theta = std::acos(d);
        const double s = std::sin(theta);
        wa = std::sin((1.0 - t) * theta) / s;
        wb = std::sin(t * theta) / s;
    }
    return Rot3::from_quaternion(wa * a.w() + wb * bw, wa * a.x() + wb * bx,
                                 wa * a.y() + wb * by, wa * a.z() + wb * bz);
}

/// Rigid transform, stored world-to-camera when used as a camera pose.
struct Pose {
    Rot3 rotation;
    Vec3 translation;

    static Pose identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return rotation.rotate(p) + translation; }

    bool operator==(const Pose&) const = default;
};

/// compose(a, b) applies b first, then a.
inline Pose compose(const Pose& a, const Pose& b) {
    return {a.rotation * b.rotation, a.rotation.rotate(b.translation) + a.translation};
}

inline Pose invert(const Pose& p) {
    const Rot3 inv = p.rotation.inverse();
    return {inv, -inv.rotate(p.translation)};
}

/// Camera center in world coordinates for a world-to-camera pose.
inline Vec3 camera_center(const Pose& world_to_camera) {
    return world_to_camera.rotation.inverse_rotate(-world_to_camera.translation);
}

/// World-to-camera pose for a camera at `eye` looking at `target`. `up` is the
/// world direction that should appear upward in the image (image -y).
inline Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = {0, -1, 0}) {
    const Vec3 forward = (target - eye).normalized();
    const Vec3 right = forward.cross(up).normalized();
    const Vec3 down = forward.cross(right);
    // Camera axes expressed in world are the rows of R.
    const Mat3 r{{{right.x, right.y, right.z}, {down.x, down.y, down.z},
                  {forward.x, forward.y, forward.z}}};
    const Rot3 rot = Rot3::from_matrix(r);
    return {rot, -rot.rotate(eye)};
}

struct Intrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    bool operator==(const Intrinsics&) const = default;

    bool valid() const {
        return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 && cx < width &&
               cy >= 0.0 && cy < height && std::isfinite(fx) && std::isfinite(fy);
    }

    /// Square-pixel intrinsics with the principal point at the raster center.
    static Intrinsics from_fov(int width, int height, double horizontal_fov_deg = 60.0) {
        const double half = horizontal_fov_deg * std::numbers::pi / 360.0;
        const double f = 0.5 * width / std::tan(half);
        return {f, f, 0.5 * width, 0.5 * height, width, height};
    }

    /// Same camera sampled onto a different raster size.
    Intrinsics rescaled(int new_width, int new_height) const {
        const double sx = static_cast<double>(new_width) / width;
        const double sy = static_cast<double>(new_height) / height;
        return {fx * sx, fy * sy, cx * sx, cy * sy, new_width, new_height};
    }
};

struct Projection {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
};

/// Throws BehindCamera when the point's camera-space z is not positive.
inline Projection project(const Vec3& p, const Pose& pose, const Intrinsics& k) {
    const Vec3 c = pose.apply(p);
    if (!(c.z > 0.0)) {
        throw Error(ErrorCode::BehindCamera, "camera-space z = " + std::to_string(c.z));
    }
    return {k.fx * c.x / c.z + k.cx, k.fy * c.y / c.z + k.cy, c.z};
}

inline Vec3 unproject(double u, double v, double depth, const Pose& pose, const Intrinsics& k) {
    if (!(depth > 0.0)) {
        throw Error(ErrorCode::NonPositiveDepth, "depth = " + std::to_string(depth));
    }
    const Vec3 c{(u - k.cx) / k.fx * depth, (v - k.cy) / k.fy * depth, depth};
    return pose.rotation.inverse_rotate(c - pose.translation);
}

struct Box3 {
    Vec3 center;
    Vec3 half_extents{0.5, 0.5, 0.5};
    Rot3 rotation;

    double volume() const { return 8.0 * half_extents.x * half_extents.y * half_extents.z; }

    Vec3 to_local(const Vec3& p) const { return rotation.inverse_rotate(p - center); }
    Vec3 to_world(const Vec3& local) const { return rotation.rotate(local) + center; }

    bool contains(const Vec3& p, double tolerance = 0.0) const {
        const Vec3 l = to_local(p);
        return std::abs(l.x) <= half_extents.x + tolerance &&
               std::abs(l.y) <= half_extents.y + tolerance &&
               std::abs(l.z) <= half_extents.z + tolerance;
    }

    bool operator==(const Box3&) const = default;
};

/// Corner i has local coordinates (sx*hx, sy*hy, sz*hz) where bit 0 of i selects
/// sx, bit 1 selects sy and bit 2 selects sz (bit set = +, clear = -).
inline std::array<Vec3, 8> box_corners(const Box3& b) {
    std::array<Vec3, 8> out;
    for (int i = 0; i < 8; ++i) {
        const Vec3 local{(i & 1) ? b.half_extents.x : -b.half_extents.x,
                         (i & 2) ? b.half_extents.y : -b.half_extents.y,
                         (i & 4) ? b.half_extents.z : -b.half_extents.z};
        out[i] = b.to_world(local);
    }
    return out;
}

/// The 12 edges of a box as corner index pairs.
inline constexpr std::array<std::array<int, 2>, 12> kBoxEdges{{
    {0, 1}, {2, 3}, {4, 5}, {6, 7},  // along x
    {0, 2}, {1, 3}, {4, 6}, {5, 7},  // along y
    {0, 4}, {1, 5}, {2, 6}, {3, 7},  // along z
}};

/// The 6 faces as outward-wound corner quads (counter-clockwise seen from outside).
inline constexpr std::array<std::array<int, 4>, 6> kBoxFaces{{
    {0, 4, 6, 2},  // -x
    {1, 3, 7, 5},  // +x
    {0, 1, 5, 4},  // -y
    {2, 6, 7, 3},  // +y
    {0, 2, 3, 1},  // -z
    {4, 5, 7, 6},  // +z
}};

} // namespace cineforge
