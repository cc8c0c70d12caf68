// SPDX-License-Identifier: Apache-2.0

#pragma once

// 3D convex hull (quickhull).

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "cineforge/error.hpp"
#include "cineforge/geometry.hpp"

namespace cineforge {

struct ConvexHull {
    std::vector<Vec3> vertices;
    /// Triangles indexing `vertices`, wound counter-clockwise seen from outside.
    std::vector<std::array<int, 3>> facets;

    Vec3 facet_normal(std::size_t i) const {
        const auto& f = facets[i];
        return (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]).normalized();
    }

    /// Largest signed distance from `p` to any facet plane; <= 0 means inside.
    double signed_distance(const Vec3& p) const {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < facets.size(); ++i) {
            const Vec3 n = facet_normal(i);
            best = std::max(best, n.dot(p - vertices[facets[i][0]]));
        }
        return best;
    }
};

/// Length of the diagonal of the axis-aligned bounding box of `points`.
inline double bbox_diagonal(std::span<const Vec3> points) {
    if (points.empty()) return 0.0;
    Vec3 lo = points[0], hi = points[0];
    for (const Vec3& p : points) {
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
        }
    }
    return (hi - lo).norm();
}

namespace detail {

struct HullFacet {
    std::array<int, 3> v{};
    Vec3 normal;
    double offset = 0.0;
    std::vector<int> outside;
    bool alive = true;

    double distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

inline std::uint64_t edge_key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

class QuickHull {
public:
    explicit QuickHull(std::span<const Vec3> pts) : pts_(pts) {}

    ConvexHull run() {
        if (pts_.size() < 4) {
            throw Error(ErrorCode::DegenerateInput, "a 3D hull needs at least 4 points");
        }
        const double diag = bbox_diagonal(pts_);
        eps_ = 1e-10 * diag;
        if (!(diag > 0.0)) {
            throw Error(ErrorCode::DegenerateInput, "all points coincide");
        }
        build_simplex();
        assign_initial();

        for (std::size_t scan = 0; scan < facets_.size();) {
            HullFacet& f = facets_[scan];
            if (!f.alive || f.outside.empty()) {
                ++scan;
                continue;
            }
            // Orphaned points only move to facets appended after `scan`.
            add_point(scan);
            ++scan;
        }
        return collect();
    }

private:
    void build_simplex() {
        // Extreme points along each axis seed the first edge.
        std::array<int, 6> ext{};
        for (int k = 0; k < 3; ++k) {
            int lo = 0, hi = 0;
            for (int i = 0; i < static_cast<int>(pts_.size()); ++i) {
                if (pts_[i][k] < pts_[lo][k]) lo = i;
                if (pts_[i][k] > pts_[hi][k]) hi = i;
            }
            ext[2 * k] = lo;
            ext[2 * k + 1] = hi;
        }
        int a = ext[0], b = ext[1];
        double best = -1.0;
        for (int i = 0; i < 6; ++i) {
            for (int j = i + 1; j < 6; ++j) {
                const double d = (pts_[ext[i]] - pts_[ext[j]]).norm();
                if (d > best) {
                    best = d;
                    a = ext[i];
                    b = ext[j];
                }
            }
        }
        if (best <= eps_) throw Error(ErrorCode::DegenerateInput, "all points coincide");

        const Vec3 ab = (pts_[b] - pts_[a]).normalized();
        int c = -1;
        best = eps_;
        for (int i = 0; i < static_cast<int>(pts_.size()); ++i) {
            const double d = ab.cross(pts_[i] - pts_[a]).norm();
            if (d > best) {
                best = d;
                c = i;
            }
        }
        if (c < 0) throw Error(ErrorCode::DegenerateInput, "points are collinear");

        const Vec3 n = (pts_[b] - pts_[a]).cross(pts_[c] - pts_[a]).normalized();
        int d = -1;
        best = eps_;
        for (int i = 0; i < static_cast<int>(pts_.size()); ++i) {
            const double dist = std::abs(n.dot(pts_[i] - pts_[a]));
            if (dist > best) {
                best = dist;
                d = i;
            }
        }
        if (d < 0) throw Error(ErrorCode::DegenerateInput, "points are coplanar");

        if (n.dot(pts_[d] - pts_[a]) > 0.0) std::swap(b, c);
        // (a, b, c) now faces away from d.
        make_facet(a, b, c);
        make_facet(a, d, b);
        make_facet(b, d, c);
        make_facet(c, d, a);
        simplex_ = {a, b, c, d};
    }

    int make_facet(int a, int b, int c) {
        HullFacet f;
        f.v = {a, b, c};
        f.normal = (pts_[b] - pts_[a]).cross(pts_[c] - pts_[a]).normalized();
        f.offset = f.normal.dot(pts_[a]);
        const int idx = static_cast<int>(facets_.size());
        facets_.push_back(std::move(f));
        edges_[edge_key(a, b)] = idx;
        edges_[edge_key(b, c)] = idx;
        edges_[edge_key(c, a)] = idx;
        return idx;
    }

    void assign_to(std::span<const int> candidates, int point) {
        int best_facet = -1;
        double best = eps_;
        for (int fi : candidates) {
            const double d = facets_[fi].distance(pts_[point]);
            if (d > best) {
                best = d;
                best_facet = fi;
            }
        }
        if (best_facet >= 0) facets_[best_facet].outside.push_back(point);
    }

    void assign_initial() {
        const std::array<int, 4> all{0, 1, 2, 3};
        for (int i = 0; i < static_cast<int>(pts_.size()); ++i) {
            if (std::find(simplex_.begin(), simplex_.end(), i) != simplex_.end()) continue;
            assign_to(all, i);
        }
    }

    void add_point(std::size_t start) {
        const HullFacet& sf = facets_[start];
        int eye = sf.outside.front();
        double far = sf.distance(pts_[eye]);
        for (int p : sf.outside) {
            const double d = sf.distance(pts_[p]);
            if (d > far) {
                far = d;
                eye = p;
            }
        }
        const Vec3& e = pts_[eye];

        // Flood the visible region and record its horizon.
        std::vector<int> visible{static_cast<int>(start)};
        std::vector<char> seen(facets_.size(), 0);
        seen[start] = 1;
        std::vector<std::array<int, 2>> horizon;
        for (std::size_t i = 0; i < visible.size(); ++i) {
            const auto v = facets_[visible[i]].v;
            for (int k = 0; k < 3; ++k) {
                const int a = v[k], b = v[(k + 1) % 3];
                const int nb = edges_.at(edge_key(b, a));
                if (seen[nb] == 1) continue;
                if (seen[nb] == 2) {
                    horizon.push_back({a, b});
                    continue;
                }
                if (facets_[nb].distance(e) > eps_) {
                    seen[nb] = 1;
                    visible.push_back(nb);
                } else {
                    seen[nb] = 2;
                    horizon.push_back({a, b});
                }
            }
        }

        std::vector<int> orphans;
        for (int fi : visible) {
            HullFacet& f = facets_[fi];
            f.alive = false;
            for (int p : f.outside)
                if (p != eye) orphans.push_back(p);
            f.outside.clear();
            for (int k = 0; k < 3; ++k) {
                const auto it = edges_.find(edge_key(f.v[k], f.v[(k + 1) % 3]));
                if (it != edges_.end() && it->second == fi) edges_.erase(it);
            }
        }

        std::vector<int> created;
        created.reserve(horizon.size());
        for (const auto& h : horizon) created.push_back(make_facet(h[0], h[1], eye));
        std::sort(orphans.begin(), orphans.end());
        for (int p : orphans) assign_to(created, p);
    }

    ConvexHull collect() const {
        ConvexHull hull;
        std::vector<int> remap(pts_.size(), -1);
        for (const HullFacet& f : facets_) {
            if (!f.alive) continue;
            std::array<int, 3> tri{};
            for (int k = 0; k < 3; ++k) {
                int& slot = remap[f.v[k]];
                if (slot < 0) {
                    slot = static_cast<int>(hull.vertices.size());
                    hull.vertices.push_back(pts_[f.v[k]]);
                }
                tri[k] = slot;
            }
            hull.facets.push_back(tri);
        }
        return hull;
    }

    std::span<const Vec3> pts_;
    double eps_ = 0.0;
    std::vector<HullFacet> facets_;
    std::unordered_map<std::uint64_t, int> edges_;
    std::array<int, 4> simplex_{};
};

} // namespace detail

/// Throws DegenerateInput for coincident, collinear or coplanar input.
inline ConvexHull convex_hull(std::span<const Vec3> points) {
    return detail::QuickHull(points).run();
}

} // namespace cineforge
