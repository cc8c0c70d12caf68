// SPDX-License-Identifier: Apache-2.0

#pragma once

// Software rasterizer turning resolved scenes into metric depth maps and
// entity-ID maps. Boxes are opaque solids drawn as 12 triangles each; pixels are
// sampled at their centers (x + 0.5, y + 0.5) with a top-left fill rule and a
// z-buffer on camera-space depth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "cineforge/geometry.hpp"
#include "cineforge/parallel.hpp"
#include "cineforge/scene.hpp"

namespace cineforge {

template <typename T>
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Raster() = default;
    Raster(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    const T& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    bool operator==(const Raster&) const = default;
};

/// Metric camera-space depth in meters; 0.0 marks "no geometry".
using DepthMap = Raster<double>;
/// Entity ids; 0 is background.
using IdMap = Raster<std::uint16_t>;
/// Per-entity binary mask.
using Mask = Raster<std::uint8_t>;

inline constexpr double kNoDepth = 0.0;

struct RenderSettings {
    /// 0 means "use the intrinsics raster size".
    int width = 0;
    int height = 0;
    double near = 0.05;
    double far = 1000.0;
};

struct RenderedFrame {
    DepthMap depth;
    IdMap ids;
};

namespace detail {

/// Sutherland-Hodgman against z >= near.
inline std::vector<Vec3> clip_near(const std::array<Vec3, 3>& tri, double near) {
    std::vector<Vec3> out;
    out.reserve(4);
    for (int i = 0; i < 3; ++i) {
        const Vec3& a = tri[i];
        const Vec3& b = tri[(i + 1) % 3];
        const bool a_in = a.z >= near;
        const bool b_in = b.z >= near;
        if (a_in) out.push_back(a);
        if (a_in != b_in) {
            const double t = (near - a.z) / (b.z - a.z);
            Vec3 p = a + (b - a) * t;
            p.z = near;
            out.push_back(p);
        }
    }
    return out;
}

struct ScreenVertex {
    double x;
    double y;
    double inv_z;
};

inline bool is_top_left(const ScreenVertex& a, const ScreenVertex& b) {
    // With positive signed area in y-down raster coordinates, a horizontal edge
    // running toward -x is a top edge and an edge running toward -y is a left edge.
    const double dx = b.x - a.x, dy = b.y - a.y;
    return (dy == 0.0 && dx < 0.0) || dy < 0.0;
}

class Rasterizer {
public:
    Rasterizer(const Intrinsics& k, const RenderSettings& s)
        : k_(k), s_(s), zbuf_(k.width, k.height, std::numeric_limits<double>::infinity()),
          ids_(k.width, k.height, 0) {}

    void draw_box(const Box3& box, const Pose& camera, std::uint16_t id) {
        const auto corners = box_corners(box);
        std::array<Vec3, 8> cam;
        for (int i = 0; i < 8; ++i) cam[i] = camera.apply(corners[i]);
        for (const auto& face : kBoxFaces) {
            draw_triangle({cam[face[0]], cam[face[1]], cam[face[2]]}, id);
            draw_triangle({cam[face[0]], cam[face[2]], cam[face[3]]}, id);
        }
    }

    RenderedFrame finish() && {
        RenderedFrame out{DepthMap(k_.width, k_.height, kNoDepth), std::move(ids_)};
        for (std::size_t i = 0; i < zbuf_.data.size(); ++i) {
            if (std::isfinite(zbuf_.data[i])) out.depth.data[i] = zbuf_.data[i];
        }
        return out;
    }

    /// Camera-space triangle; either winding.
    void draw_triangle(const std::array<Vec3, 3>& tri, std::uint16_t id) {
        if (tri[0].z < s_.near && tri[1].z < s_.near && tri[2].z < s_.near) return;
        const std::vector<Vec3> poly = clip_near(tri, s_.near);
        if (poly.size() < 3) return;
        std::vector<ScreenVertex> sv;
        sv.reserve(poly.size());
        for (const Vec3& p : poly) {
            sv.push_back({k_.fx * p.x / p.z + k_.cx, k_.fy * p.y / p.z + k_.cy, 1.0 / p.z});
        }
        for (std::size_t i = 1; i + 1 < sv.size(); ++i) fill(sv[0], sv[i], sv[i + 1], id);
    }

private:

    void fill(ScreenVertex a, ScreenVertex b, ScreenVertex c, std::uint16_t id) {
        auto edge = [](const ScreenVertex& p, const ScreenVertex& q, double x, double y) {
            return (q.x - p.x) * (y - p.y) - (q.y - p.y) * (x - p.x);
        };
        double area = edge(a, b, c.x, c.y);
        if (area == 0.0 || !std::isfinite(area)) return;
        if (area < 0.0) {
            std::swap(b, c);
            area = -area;
        }
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}) - 0.5)));
        const int x1 = std::min(k_.width - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}) - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}) - 0.5)));
        const int y1 = std::min(k_.height - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}) - 0.5)));
        const bool tl_bc = is_top_left(b, c), tl_ca = is_top_left(c, a), tl_ab = is_top_left(a, b);
        for (int y = y0; y <= y1; ++y) {
            const double py = y + 0.5;
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5;
                const double w0 = edge(b, c, px, py);
                const double w1 = edge(c, a, px, py);
                const double w2 = edge(a, b, px, py);
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                if ((w0 == 0.0 && !tl_bc) || (w1 == 0.0 && !tl_ca) || (w2 == 0.0 && !tl_ab)) continue;
                const double inv_z = (w0 * a.inv_z + w1 * b.inv_z + w2 * c.inv_z) / area;
                const double z = 1.0 / inv_z;
                if (z > s_.far) continue;
                double& slot = zbuf_.at(x, y);
                if (z < slot) {
                    slot = z;
                    ids_.at(x, y) = id;
                }
            }
        }
    }

    Intrinsics k_;
    RenderSettings s_;
    DepthMap zbuf_;
    IdMap ids_;
};

} // namespace detail

/// Intrinsics actually used for a render: the scene camera, resampled when the
/// settings ask for a different raster.
inline Intrinsics render_intrinsics(const Intrinsics& k, const RenderSettings& s) {
    const int w = s.width > 0 ? s.width : k.width;
    const int h = s.height > 0 ? s.height : k.height;
    return (w == k.width && h == k.height) ? k : k.rescaled(w, h);
}

inline RenderedFrame render_frame(const SceneSample& sample, const Intrinsics& k,
                                  const RenderSettings& s = {}) {
    if (!(s.near > 0.0 && s.near < s.far)) {
        throw Error(ErrorCode::InvalidArgument, "render settings need 0 < near < far");
    }
    const Intrinsics kr = render_intrinsics(k, s);
    detail::Rasterizer r(kr, s);
    for (const auto& [id, box] : sample.boxes) {
        r.draw_box(box, sample.camera_pose, static_cast<std::uint16_t>(id));
    }
    return std::move(r).finish();
}

/// Element f equals render_frame(resolve(scene, f)); frames render independently.
inline std::vector<RenderedFrame> render_sequence(const Scene& scene, const RenderSettings& s = {},
                                                  unsigned jobs = 1) {
    std::vector<RenderedFrame> frames(scene.frame_count);
    parallel_for(frames.size(), jobs, [&](std::size_t f) {
        frames[f] = render_frame(resolve(scene, static_cast<int>(f)), scene.camera.intrinsics, s);
    });
    return frames;
}

/// Binary mask of one entity in an id map.
inline Mask entity_mask(const IdMap& ids, EntityId id) {
    Mask m(ids.width, ids.height, 0);
    for (std::size_t i = 0; i < ids.data.size(); ++i) m.data[i] = ids.data[i] == id ? 1 : 0;
    return m;
}

} // namespace cineforge
