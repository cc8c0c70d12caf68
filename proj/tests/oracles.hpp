// SPDX-License-Identifier: Apache-2.0

#pragma once

// Test-only reference implementations. These deliberately avoid the library's
// fitting and rasterization paths so they can serve as independent checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "cineforge/geometry.hpp"
#include "cineforge/render.hpp"
#include "cineforge/scene.hpp"

namespace cineforge::oracle {

/// Row-major matrix product used to cross-check quaternion composition.
inline Mat3 matmul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

inline Mat3 rot_z_matrix(double a) {
    return {{{std::cos(a), -std::sin(a), 0.0}, {std::sin(a), std::cos(a), 0.0}, {0.0, 0.0, 1.0}}};
}

inline Mat3 euler_zyx(double yaw, double pitch, double roll) {
    const Mat3 rz{{{std::cos(yaw), -std::sin(yaw), 0}, {std::sin(yaw), std::cos(yaw), 0}, {0, 0, 1}}};
    const Mat3 ry{{{std::cos(pitch), 0, std::sin(pitch)}, {0, 1, 0}, {-std::sin(pitch), 0, std::cos(pitch)}}};
    const Mat3 rx{{{1, 0, 0}, {0, std::cos(roll), -std::sin(roll)}, {0, std::sin(roll), std::cos(roll)}}};
    return matmul(matmul(rz, ry), rx);
}

/// Exhaustive orientation search: Euler angles on a 6 degree grid, axis-aligned
/// extents in each rotated frame, smallest volume wins.
inline double grid_obb_volume(const std::vector<Vec3>& pts, double step_deg = 6.0) {
    const double d = step_deg * std::numbers::pi / 180.0;
    double best = std::numeric_limits<double>::infinity();
    // Right-multiplying by a quarter turn about the local x axis maps a box onto
    // itself, so roll only needs a quarter turn; yaw and pitch span their full range.
    for (double yaw = 0.0; yaw < 2.0 * std::numbers::pi - 1e-9; yaw += d) {
        for (double pitch = -std::numbers::pi / 2; pitch <= std::numbers::pi / 2 + 1e-9; pitch += d) {
            for (double roll = 0.0; roll < std::numbers::pi / 2 - 1e-9; roll += d) {
                const Mat3 r = euler_zyx(yaw, pitch, roll);
                double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
                for (const Vec3& p : pts) {
                    for (int k = 0; k < 3; ++k) {
                        const double v = r[0][k] * p.x + r[1][k] * p.y + r[2][k] * p.z;
                        lo[k] = std::min(lo[k], v);
                        hi[k] = std::max(hi[k], v);
                    }
                }
                best = std::min(best, (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]));
            }
        }
    }
    return best;
}

/// Camera-space z of the first visible box surface along the ray through the
/// pixel center, or +inf. Mirrors near-plane clipping: surfaces in front of
/// `near` are skipped, so a camera inside a box sees its back faces.
inline double ray_box_depth(const Box3& box, const Pose& camera, const Intrinsics& k, int px, int py,
                            double near) {
    // Ray in camera space parameterized by camera z: X(z) = z * dir, dir.z = 1.
    const Vec3 dir{(px + 0.5 - k.cx) / k.fx, (py + 0.5 - k.cy) / k.fy, 1.0};
    const Pose cam_to_world = invert(camera);
    const Vec3 origin_w = cam_to_world.translation;
    const Vec3 dir_w = cam_to_world.rotation.rotate(dir);
    const Vec3 o = box.to_local(origin_w);
    const Vec3 dl = box.rotation.inverse_rotate(dir_w);
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double h = box.half_extents[a];
        if (std::abs(dl[a]) < 1e-300) {
            if (std::abs(o[a]) > h) return std::numeric_limits<double>::infinity();
            continue;
        }
        double ta = (-h - o[a]) / dl[a];
        double tb = (h - o[a]) / dl[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (t0 > t1) return std::numeric_limits<double>::infinity();
    if (t0 >= near) return t0;
    if (t1 >= near) return t1;
    return std::numeric_limits<double>::infinity();
}

/// Brute-force per-pixel ray casting of every box in a sample.
inline RenderedFrame raycast_frame(const SceneSample& sample, const Intrinsics& k, double near, double far) {
    RenderedFrame out{DepthMap(k.width, k.height, 0.0), IdMap(k.width, k.height, 0)};
    for (int y = 0; y < k.height; ++y) {
        for (int x = 0; x < k.width; ++x) {
            double best = std::numeric_limits<double>::infinity();
            int best_id = 0;
            for (const auto& [id, box] : sample.boxes) {
                const double z = ray_box_depth(box, sample.camera_pose, k, x, y, near);
                if (z < best && z <= far) {
                    best = z;
                    best_id = id;
                }
            }
            if (best_id != 0) {
                out.depth.at(x, y) = best;
                out.ids.at(x, y) = static_cast<std::uint16_t>(best_id);
            }
        }
    }
    return out;
}

inline Rot3 random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return Rot3::from_quaternion(n(rng), n(rng), n(rng), n(rng));
}

} // namespace cineforge::oracle
