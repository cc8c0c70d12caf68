// SPDX-License-Identifier: Apache-2.0

#pragma once

// Oriented bounding box fitting: minimum-volume search over convex hull facets
// plus a covariance (PCA) fit used as a fast fallback.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cineforge/error.hpp"
#include "cineforge/geometry.hpp"
#include "cineforge/hull.hpp"

namespace cineforge {

using PointCloud = std::vector<Vec3>;

/// Half-extent floor applied to flat or thin directions.
inline constexpr double kMinHalfExtent = 1e-4;

enum class ObbMethod { HullFacet, Pca, Degenerate };

inline std::string_view to_string(ObbMethod m) {
    switch (m) {
        case ObbMethod::HullFacet: return "hull-facet";
        case ObbMethod::Pca: return "pca";
        case ObbMethod::Degenerate: return "degenerate";
    }
    return "unknown";
}

struct ObbFitReport {
    double volume = 0.0;
    ObbMethod method = ObbMethod::HullFacet;
    int candidate_count = 0;
};

struct ObbFit {
    Box3 box;
    ObbFitReport report;
};

struct ObbOptions {
    /// When set, boxes keep one axis along this direction and only yaw is searched.
    std::optional<Vec3> up_axis;
    /// Local coordinate descent over small rotations after the facet search.
    bool refine = true;
};

namespace detail {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Andrew's monotone chain; counter-clockwise without collinear points.
inline std::vector<Vec2> hull2d(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(),
              [](const Vec2& a, const Vec2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    if (pts.size() < 3) return pts;
    std::vector<Vec2> h(2 * pts.size());
    std::size_t k = 0;
    for (const Vec2& p : pts) {
        while (k >= 2 && cross2(h[k - 2], h[k - 1], p) <= 0.0) --k;
        h[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross2(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

struct Rect2 {
    double area = std::numeric_limits<double>::infinity();
    Vec2 dir{1.0, 0.0};  // first rectangle axis; second is its left perpendicular
};

/// Minimum-area enclosing rectangle of a convex CCW polygon by rotating calipers.
inline Rect2 min_area_rect(const std::vector<Vec2>& poly) {
    Rect2 best;
    const std::size_t m = poly.size();
    if (m < 3) {
        if (m == 2) {
            const double dx = poly[1].x - poly[0].x, dy = poly[1].y - poly[0].y;
            const double len = std::hypot(dx, dy);
            if (len > 0.0) best.dir = {dx / len, dy / len};
        }
        best.area = 0.0;
        return best;
    }
    auto dot = [](const Vec2& a, const Vec2& d) { return a.x * d.x + a.y * d.y; };
    std::size_t right = 0, top = 0, left = 0;
    bool seeded = false;
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2& p0 = poly[i];
        const Vec2& p1 = poly[(i + 1) % m];
        const double len = std::hypot(p1.x - p0.x, p1.y - p0.y);
        if (len == 0.0) continue;
        const Vec2 e{(p1.x - p0.x) / len, (p1.y - p0.y) / len};
        const Vec2 n{-e.y, e.x};
        if (!seeded) {
            seeded = true;
            right = top = left = 0;
            for (std::size_t j = 0; j < m; ++j) {
                if (dot(poly[j], e) > dot(poly[right], e)) right = j;
                if (dot(poly[j], n) > dot(poly[top], n)) top = j;
                if (dot(poly[j], e) < dot(poly[left], e)) left = j;
            }
        } else {
            while (dot(poly[(right + 1) % m], e) > dot(poly[right], e)) right = (right + 1) % m;
            while (dot(poly[(top + 1) % m], n) > dot(poly[top], n)) top = (top + 1) % m;
            while (dot(poly[(left + 1) % m], e) < dot(poly[left], e)) left = (left + 1) % m;
        }
        const double width = dot(poly[right], e) - dot(poly[left], e);
        const double height = dot(poly[top], n) - dot(p0, n);
        const double area = width * height;
        if (area < best.area) {
            best.area = area;
            best.dir = e;
        }
    }
    return best;
}

/// Any orthonormal pair spanning the plane perpendicular to unit `n`.
inline std::array<Vec3, 2> plane_basis(const Vec3& n) {
    const Vec3 helper = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 u = n.cross(helper).normalized();
    return {u, n.cross(u)};
}

struct Orientation {
    std::array<Vec3, 3> axes;  // right-handed orthonormal
};

inline double oriented_volume(std::span<const Vec3> pts, const Orientation& o) {
    double vol = 1.0;
    for (const Vec3& a : o.axes) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const Vec3& p : pts) {
            const double d = a.dot(p);
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        vol *= (hi - lo);
    }
    return vol;
}

/// Best box with `normal` as one axis: in-plane rectangle via rotating calipers.
inline std::optional<Orientation> orientation_for_normal(std::span<const Vec3> pts,
                                                         const Vec3& normal) {
    const auto [u, v] = plane_basis(normal);
    std::vector<Vec2> flat;
    flat.reserve(pts.size());
    for (const Vec3& p : pts) flat.push_back({u.dot(p), v.dot(p)});
    const auto poly = hull2d(std::move(flat));
    if (poly.size() < 2) return std::nullopt;
    const Rect2 r = min_area_rect(poly);
    const Vec3 a0 = (u * r.dir.x + v * r.dir.y).normalized();
    const Vec3 a1 = normal.cross(a0).normalized();
    return Orientation{{a0, a1, normal}};
}

inline Orientation rotate_orientation(const Orientation& o, int axis, double angle) {
    const Rot3 r = Rot3::from_axis_angle(o.axes[axis], angle);
    Orientation out;
    for (int k = 0; k < 3; ++k) out.axes[k] = r.rotate(o.axes[k]);
    return out;
}

/// Coordinate descent over small rotations about the current axes.
inline Orientation refine_orientation(std::span<const Vec3> pts, Orientation best,
                                      double& best_volume, int& evaluations) {
    const double deg = std::numbers::pi / 180.0;
    for (double step = 2.0 * deg; step > 0.005 * deg; step *= 0.5) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (int axis = 0; axis < 3; ++axis) {
                for (double sign : {1.0, -1.0}) {
                    const Orientation cand = rotate_orientation(best, axis, sign * step);
                    const double vol = oriented_volume(pts, cand);
                    ++evaluations;
                    if (vol < best_volume * (1.0 - 1e-12)) {
                        best_volume = vol;
                        best = cand;
                        improved = true;
                    }
                }
            }
        }
    }
    return best;
}

/// Box along the given axes containing every point, extents floor-clamped.
inline Box3 box_from_axes(std::span<const Vec3> pts, const Orientation& o) {
    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi = -lo;
    for (const Vec3& p : pts) {
        for (int k = 0; k < 3; ++k) {
            const double d = o.axes[k].dot(p);
            lo[k] = std::min(lo[k], d);
            hi[k] = std::max(hi[k], d);
        }
    }
    Box3 b;
    const Vec3 mid = (lo + hi) * 0.5;
    b.center = o.axes[0] * mid.x + o.axes[1] * mid.y + o.axes[2] * mid.z;
    for (int k = 0; k < 3; ++k) b.half_extents[k] = std::max(0.5 * (hi[k] - lo[k]), kMinHalfExtent);
    b.rotation = Rot3::from_columns(o.axes[0], o.axes[1], o.axes[2]);
    // The quaternion round trip may tilt the axes by ~1e-16; keep containment exact.
    for (const Vec3& p : pts) {
        const Vec3 l = b.to_local(p);
        for (int k = 0; k < 3; ++k) b.half_extents[k] = std::max(b.half_extents[k], std::abs(l[k]));
    }
    return b;
}

inline Orientation pca_orientation(std::span<const Vec3> pts) {
    Vec3 mean;
    for (const Vec3& p : pts) mean += p;
    mean = mean / static_cast<double>(pts.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Vec3& p : pts) {
        const Eigen::Vector3d d(p.x - mean.x, p.y - mean.y, p.z - mean.z);
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(pts.size());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Eigen::Matrix3d vecs = solver.eigenvectors();  // ascending eigenvalues
    const Vec3 a0{vecs(0, 2), vecs(1, 2), vecs(2, 2)};
    const Vec3 a1{vecs(0, 1), vecs(1, 1), vecs(2, 1)};
    const Vec3 n0 = a0.normalized();
    const Vec3 n1 = (a1 - n0 * n0.dot(a1)).normalized();
    return Orientation{{n0, n1, n0.cross(n1)}};
}

inline Orientation identity_orientation() {
    return Orientation{{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}}};
}

inline ObbFit fit_up_locked(std::span<const Vec3> pts, const Vec3& up, ObbMethod method) {
    const Vec3 n = up.normalized();
    auto o = orientation_for_normal(pts, n);
    if (!o) {
        const auto [u, v] = plane_basis(n);
        o = Orientation{{u, v, n}};
    }
    ObbFit fit;
    fit.box = box_from_axes(pts, *o);
    fit.report = {fit.box.volume(), method, 1};
    return fit;
}

} // namespace detail

/// Covariance-axis box. Always succeeds; flat directions are floor-clamped.
inline ObbFit fit_obb_pca(std::span<const Vec3> pc) {
    if (pc.empty()) throw Error(ErrorCode::EmptyCloud, "point cloud is empty");
    ObbFit fit;
    fit.box = detail::box_from_axes(pc, detail::pca_orientation(pc));
    fit.report = {fit.box.volume(), ObbMethod::Pca, 1};
    return fit;
}

/// Minimum-volume oriented box. For each hull facet one box axis is aligned with
/// the facet normal and the in-plane rectangle is solved by rotating calipers;
/// the PCA and axis-aligned orientations are also evaluated so the result never
/// loses to either. Ties keep the earliest candidate (lowest facet index).
/// Coincident, collinear or coplanar clouds fall back to the PCA axes with a
/// rotating-calipers rectangle in the dominant plane, reported as degenerate.
inline ObbFit fit_min_volume_obb(std::span<const Vec3> pc, const ObbOptions& opts = {}) {
    if (pc.empty()) throw Error(ErrorCode::EmptyCloud, "point cloud is empty");

    std::optional<ConvexHull> hull;
    try {
        hull = convex_hull(pc);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateInput) throw;
    }

    if (opts.up_axis) {
        return detail::fit_up_locked(pc, *opts.up_axis,
                                     hull ? ObbMethod::HullFacet : ObbMethod::Degenerate);
    }

    if (!hull) {
        const detail::Orientation pca = detail::pca_orientation(pc);
        auto o = detail::orientation_for_normal(pc, pca.axes[2]);
        ObbFit fit;
        fit.box = detail::box_from_axes(pc, o ? *o : pca);
        const ObbFit plain = fit_obb_pca(pc);
        if (plain.box.volume() < fit.box.volume()) fit.box = plain.box;
        fit.report = {fit.box.volume(), ObbMethod::Degenerate, 2};
        return fit;
    }

    const std::span<const Vec3> verts(hull->vertices);
    int evaluations = 0;
    detail::Orientation best = detail::identity_orientation();
    double best_volume = std::numeric_limits<double>::infinity();
    auto consider = [&](const detail::Orientation& o) {
        const double vol = detail::oriented_volume(verts, o);
        ++evaluations;
        if (vol < best_volume) {
            best_volume = vol;
            best = o;
        }
    };
    for (std::size_t i = 0; i < hull->facets.size(); ++i) {
        if (auto o = detail::orientation_for_normal(verts, hull->facet_normal(i))) consider(*o);
    }
    consider(detail::pca_orientation(pc));
    consider(detail::identity_orientation());
    if (opts.refine) best = detail::refine_orientation(verts, best, best_volume, evaluations);

    ObbFit fit;
    fit.box = detail::box_from_axes(pc, best);
    fit.report = {fit.box.volume(), ObbMethod::HullFacet, evaluations};
    return fit;
}

} // namespace cineforge
