// SPDX-License-Identifier: Apache-2.0

#pragma once

// Controllability metrics computed from prediction / ground-truth pairs:
// box mIoU, center trajectory deviation (pixels) and depth RMSE (meters).
// Frames missing either side of a pair are excluded and reported as coverage.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cineforge/error.hpp"
#include "cineforge/geometry.hpp"
#include "cineforge/render.hpp"

namespace cineforge::metrics {

struct Box2 {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    bool valid() const { return x0 < x1 && y0 < y1; }
    double area() const { return (x1 - x0) * (y1 - y0); }
    double cx() const { return 0.5 * (x0 + x1); }
    double cy() const { return 0.5 * (y0 + y1); }

    bool operator==(const Box2&) const = default;
};

inline double iou(const Box2& a, const Box2& b) {
    const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

struct FrameEval {
    int frame = 0;
    std::optional<Box2> pred_box;
    std::optional<Box2> gt_box;
    std::optional<double> pred_depth;
    std::optional<double> gt_depth;
};

using TrackEval = std::vector<FrameEval>;

struct Coverage {
    int used = 0;
    int total = 0;
    double fraction() const { return total > 0 ? static_cast<double>(used) / total : 0.0; }
};

inline Coverage box_coverage(const TrackEval& pairs) {
    Coverage c{0, static_cast<int>(pairs.size())};
    for (const auto& f : pairs) c.used += (f.pred_box && f.gt_box) ? 1 : 0;
    return c;
}

inline Coverage depth_coverage(const TrackEval& pairs) {
    Coverage c{0, static_cast<int>(pairs.size())};
    for (const auto& f : pairs) c.used += (f.pred_depth && f.gt_depth) ? 1 : 0;
    return c;
}

namespace detail {

/// Sums in a frame-order-independent way: values are sorted before accumulation
/// so permuting frames cannot change the rounding.
inline double stable_mean(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

} // namespace detail

inline double miou(const TrackEval& pairs) {
    std::vector<double> v;
    for (const auto& f : pairs)
        if (f.pred_box && f.gt_box) v.push_back(iou(*f.pred_box, *f.gt_box));
    if (v.empty()) throw Error(ErrorCode::NoValidPairs, "no frame has both a predicted and a ground-truth box");
    return detail::stable_mean(std::move(v));
}

inline double traj_deviation(const TrackEval& pairs) {
    std::vector<double> v;
    for (const auto& f : pairs) {
        if (f.pred_box && f.gt_box) {
            v.push_back(std::hypot(f.pred_box->cx() - f.gt_box->cx(), f.pred_box->cy() - f.gt_box->cy()));
        }
    }
    if (v.empty()) throw Error(ErrorCode::NoValidPairs, "no frame has both a predicted and a ground-truth box");
    return detail::stable_mean(std::move(v));
}

inline double depth_deviation(const TrackEval& pairs) {
    std::vector<double> v;
    for (const auto& f : pairs) {
        if (f.pred_depth && f.gt_depth) {
            const double d = *f.pred_depth - *f.gt_depth;
            v.push_back(d * d);
        }
    }
    if (v.empty()) throw Error(ErrorCode::NoValidPairs, "no frame has both a predicted and a ground-truth depth");
    return std::sqrt(detail::stable_mean(std::move(v)));
}

/// Mean of the valid (nonzero, finite) depth values under the mask.
inline double mean_region_depth(const Mask& mask, const DepthMap& depth) {
    if (mask.width != depth.width || mask.height != depth.height) {
        throw Error(ErrorCode::ConsistencyError, "mask and depth rasters differ in size");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.data.size(); ++i) {
        const double d = depth.data[i];
        if (mask.data[i] && d > 0.0 && std::isfinite(d)) {
            sum += d;
            ++n;
        }
    }
    if (n == 0) throw Error(ErrorCode::EmptyRegion, "mask covers no valid depth");
    return sum / static_cast<double>(n);
}

enum class BoxDepthMode { Center, NearestFace };

/// Ground-truth depth of a 3D box seen from `camera`: camera-space z of the box
/// center, or of its nearest point (minimum corner z) when asked.
inline double box_depth(const Box3& box, const Pose& camera, BoxDepthMode mode = BoxDepthMode::Center) {
    if (mode == BoxDepthMode::Center) return camera.apply(box.center).z;
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& c : box_corners(box)) best = std::min(best, camera.apply(c).z);
    return best;
}

/// 2D image-space box around a projected 3D box (corners behind the camera are
/// ignored). Returns nullopt if no corner is in front.
inline std::optional<Box2> projected_box(const Box3& box, const Pose& camera, const Intrinsics& k) {
    Box2 b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    bool any = false;
    for (const Vec3& c : box_corners(box)) {
        const Vec3 cam = camera.apply(c);
        if (!(cam.z > 0.0)) continue;
        const Projection p = project(c, camera, k);
        b.x0 = std::min(b.x0, p.u);
        b.y0 = std::min(b.y0, p.v);
        b.x1 = std::max(b.x1, p.u);
        b.y1 = std::max(b.y1, p.v);
        any = true;
    }
    if (!any) return std::nullopt;
    return b;
}

struct MetricsReport {
    std::optional<double> miou;
    std::optional<double> traj_d;
    std::optional<double> depth_d;
    Coverage box;
    Coverage depth;
};

/// Every metric that has at least one valid pair.
inline MetricsReport evaluate(const TrackEval& pairs) {
    MetricsReport r;
    r.box = box_coverage(pairs);
    r.depth = depth_coverage(pairs);
    if (r.box.used > 0) {
        r.miou = miou(pairs);
        r.traj_d = traj_deviation(pairs);
    }
    if (r.depth.used > 0) r.depth_d = depth_deviation(pairs);
    return r;
}

} // namespace cineforge::metrics
