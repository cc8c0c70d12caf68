// SPDX-License-Identifier: Apache-2.0

#pragma once

// Scene reconstruction from externally produced per-frame masks, metric depth,
// camera poses and 3D point tracks. Per entity: pick the frame where its mask is
// largest, lift the masked depth to a world-space point cloud, fit a
// minimum-volume box there, then translate that box to every other frame by the
// mean displacement of the entity's tracked points. Size and orientation stay
// fixed, so each entity keeps a constant volume.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cineforge/error.hpp"
#include "cineforge/geometry.hpp"
#include "cineforge/metrics.hpp"
#include "cineforge/obb.hpp"
#include "cineforge/parallel.hpp"
#include "cineforge/render.hpp"
#include "cineforge/scene.hpp"

namespace cineforge::autolabel {

struct Detection2D {
    std::string label;
    metrics::Box2 box;
    /// Precomputed label/region similarity in [0, 1]; missing counts as 1.
    std::optional<double> score;
};

/// Greedy suppression in descending score order (stable for equal scores).
/// Detections scoring below `score_floor` are dropped; a detection is kept only if
/// its IoU with every already-kept detection is below `iou_threshold`.
inline std::vector<Detection2D> filter_overlapping_boxes(std::span<const Detection2D> dets,
                                                         double iou_threshold, double score_floor = 0.0) {
    if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "iou threshold must lie in [0, 1]");
    }
    std::vector<std::size_t> order(dets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto score = [&](std::size_t i) { return dets[i].score.value_or(1.0); };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score(a) > score(b); });

    std::vector<Detection2D> kept;
    for (std::size_t i : order) {
        if (score(i) < score_floor) continue;
        const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const Detection2D& k) {
            return metrics::iou(k.box, dets[i].box) >= iou_threshold;
        });
        if (!overlaps) kept.push_back(dets[i]);
    }
    return kept;
}

inline std::size_t mask_area(const Mask& m) {
    return static_cast<std::size_t>(std::count_if(m.data.begin(), m.data.end(), [](std::uint8_t v) { return v != 0; }));
}

/// Index of the largest area; ties resolve to the lowest index.
inline int select_optimal_frame(std::span<const std::size_t> areas) {
    int best = -1;
    for (std::size_t i = 0; i < areas.size(); ++i) {
        if (areas[i] > 0 && (best < 0 || areas[i] > areas[best])) best = static_cast<int>(i);
    }
    if (best < 0) throw Error(ErrorCode::EntityNeverVisible, "mask is empty in every frame");
    return best;
}

inline int select_optimal_frame(std::span<const Mask> masks) {
    std::vector<std::size_t> areas;
    areas.reserve(masks.size());
    for (const Mask& m : masks) areas.push_back(mask_area(m));
    return select_optimal_frame(areas);
}

struct CloudOptions {
    /// Drop masked pixels whose depth is more than `mad_factor` median absolute
    /// deviations from the masked median, unless a chain of depths with gaps of at
    /// most `gap_factor` MADs links them to the pixels inside that fence. A
    /// gap_factor of 0 applies the plain fence.
    bool reject_outliers = true;
    double mad_factor = 3.0;
    double gap_factor = 1.0;
};

namespace detail {

inline double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
    }
    return m;
}

} // namespace detail

/// One world-space point per masked pixel with valid (positive, finite) depth,
/// lifted through the pixel center.
inline PointCloud entity_point_cloud(const Mask& mask, const DepthMap& depth, const Pose& pose,
                                     const Intrinsics& k, const CloudOptions& opts = {}) {
    if (mask.width != depth.width || mask.height != depth.height) {
        throw Error(ErrorCode::ConsistencyError, "mask " + std::to_string(mask.width) + "x" +
                                                     std::to_string(mask.height) + " vs depth " +
                                                     std::to_string(depth.width) + "x" +
                                                     std::to_string(depth.height));
    }
    struct Sample {
        int x, y;
        double d;
    };
    std::vector<Sample> samples;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            const double d = depth.at(x, y);
            if (mask.at(x, y) && d > 0.0 && std::isfinite(d)) samples.push_back({x, y, d});
        }
    }
    if (samples.empty()) throw Error(ErrorCode::EmptyCloud, "no masked pixel has valid depth");

    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    if (opts.reject_outliers && samples.size() >= 3) {
        std::vector<double> ds;
        ds.reserve(samples.size());
        for (const auto& s : samples) ds.push_back(s.d);
        const double med = detail::median(ds);
        for (double& d : ds) d = std::abs(d - med);
        const double mad = detail::median(ds);
        // A zero MAD (most pixels at one depth) gives the fence no scale.
        if (mad > 0.0) {
            lo = med - opts.mad_factor * mad;
            hi = med + opts.mad_factor * mad;
        }
        if (mad > 0.0 && opts.gap_factor > 0.0) {
            // Grow the fence through densely sampled depths: a continuous surface
            // runs past 3 MAD on its own, whereas bleed sits behind a gap.
            std::vector<double> sorted;
            sorted.reserve(samples.size());
            for (const auto& smp : samples) sorted.push_back(smp.d);
            std::sort(sorted.begin(), sorted.end());
            const double gap = opts.gap_factor * mad;
            auto up = std::upper_bound(sorted.begin(), sorted.end(), hi);
            for (; up != sorted.end() && *up - hi <= gap; ++up) hi = *up;
            auto down = std::lower_bound(sorted.begin(), sorted.end(), lo);
            while (down != sorted.begin() && lo - *std::prev(down) <= gap) lo = *--down;
        }
    }

    PointCloud cloud;
    cloud.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.d < lo || s.d > hi) continue;
        cloud.push_back(unproject(s.x + 0.5, s.y + 0.5, s.d, pose, k));
    }
    return cloud;
}

enum class FrameOfReference { World, Camera };

struct Track {
    int track_id = 0;
    std::map<int, Vec3> points;
};

struct TrackSet {
    FrameOfReference frame_of_reference = FrameOfReference::World;
    std::map<EntityId, std::vector<Track>> tracks;
};

/// Copy of `tracks` expressed in world coordinates. Camera-frame points are
/// mapped through the inverse of the frame's world-to-camera pose.
inline TrackSet to_world(const TrackSet& tracks, std::span<const Pose> poses) {
    if (tracks.frame_of_reference == FrameOfReference::World) return tracks;
    TrackSet out;
    out.frame_of_reference = FrameOfReference::World;
    for (const auto& [id, list] : tracks.tracks) {
        auto& dst = out.tracks[id];
        for (const Track& t : list) {
            Track w{t.track_id, {}};
            for (const auto& [f, p] : t.points) {
                if (f < 0 || f >= static_cast<int>(poses.size())) {
                    throw Error(ErrorCode::ConsistencyError, "track " + std::to_string(t.track_id) +
                                                                 " references frame " + std::to_string(f) +
                                                                 " without a pose");
                }
                w.points.emplace(f, invert(poses[f]).apply(p));
            }
            dst.push_back(std::move(w));
        }
    }
    return out;
}

struct Propagation {
    std::map<int, Box3> boxes;
    /// Frames where no tracked point was observed together with the anchor frame.
    std::vector<int> missing;
};

/// Translates `anchor_box` to each frame in [0, frame_count) by the mean world
/// displacement of the points observed both there and at `anchor_frame`.
inline Propagation propagate_boxes(const Box3& anchor_box, int anchor_frame, std::span<const Track> tracks,
                                   int frame_count) {
    Propagation out;
    for (int f = 0; f < frame_count; ++f) {
        if (f == anchor_frame) {
            out.boxes.emplace(f, anchor_box);
            continue;
        }
        Vec3 sum;
        std::size_t n = 0;
        for (const Track& t : tracks) {
            const auto a = t.points.find(anchor_frame);
            const auto b = t.points.find(f);
            if (a == t.points.end() || b == t.points.end()) continue;
            sum += b->second - a->second;
            ++n;
        }
        if (n == 0) {
            out.missing.push_back(f);
            continue;
        }
        Box3 moved = anchor_box;
        moved.center = anchor_box.center + sum / static_cast<double>(n);
        out.boxes.emplace(f, moved);
    }
    return out;
}

struct FrameObservation {
    int frame = 0;
    std::map<EntityId, Mask> masks;
    /// Estimator depth; 0 marks an invalid pixel.
    DepthMap depth;
};

/// Splits an instance-id raster into one binary mask per nonzero id.
inline std::map<EntityId, Mask> masks_from_ids(const IdMap& ids) {
    std::map<EntityId, Mask> out;
    for (int y = 0; y < ids.height; ++y) {
        for (int x = 0; x < ids.width; ++x) {
            const int id = ids.at(x, y);
            if (id == 0) continue;
            auto it = out.find(id);
            if (it == out.end()) it = out.emplace(id, Mask(ids.width, ids.height, 0)).first;
            it->second.at(x, y) = 1;
        }
    }
    return out;
}

struct LabelOptions {
    CloudOptions cloud;
    ObbOptions obb;
    double fps = 15.0;
    unsigned jobs = 1;
};

struct EntityReport {
    EntityId id = 0;
    std::string label;
    bool recovered = false;
    /// Error code name when the entity was dropped.
    std::string reason;
    int anchor_frame = -1;
    std::size_t cloud_points = 0;
    double volume = 0.0;
    ObbMethod method = ObbMethod::HullFacet;
    std::vector<int> missing_frames;
};

struct LabelResult {
    Scene scene;
    std::vector<EntityReport> entities;
};

/// End-to-end reconstruction of one clip. Entities that are never visible or
/// yield an empty cloud are dropped with a report entry; the clip still succeeds.
inline LabelResult label_clip(std::span<const FrameObservation> obs, const TrackSet& tracks,
                              std::span<const Pose> poses, const Intrinsics& k,
                              const std::map<EntityId, std::string>& labels, const LabelOptions& opts = {}) {
    const int frame_count = static_cast<int>(obs.size());
    if (frame_count == 0) throw Error(ErrorCode::InvalidArgument, "clip has no frames");
    if (poses.size() != obs.size()) {
        throw Error(ErrorCode::ConsistencyError, std::to_string(obs.size()) + " observations but " +
                                                     std::to_string(poses.size()) + " poses");
    }
    for (int f = 0; f < frame_count; ++f) {
        if (obs[f].frame != f) {
            throw Error(ErrorCode::ConsistencyError, "observation " + std::to_string(f) + " carries frame index " +
                                                         std::to_string(obs[f].frame));
        }
    }
    const TrackSet world = to_world(tracks, poses);

    std::vector<std::pair<EntityId, std::string>> entities(labels.begin(), labels.end());
    std::vector<EntityReport> reports(entities.size());
    std::vector<std::optional<Entity>> results(entities.size());

    parallel_for(entities.size(), opts.jobs, [&](std::size_t i) {
        const auto& [id, label] = entities[i];
        EntityReport& rep = reports[i];
        rep.id = id;
        rep.label = label;
        try {
            std::vector<std::size_t> areas(frame_count, 0);
            for (int f = 0; f < frame_count; ++f) {
                const auto it = obs[f].masks.find(id);
                if (it != obs[f].masks.end()) areas[f] = mask_area(it->second);
            }
            const int anchor = select_optimal_frame(areas);
            rep.anchor_frame = anchor;
            const PointCloud cloud =
                entity_point_cloud(obs[anchor].masks.at(id), obs[anchor].depth, poses[anchor], k, opts.cloud);
            if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "every point was rejected as an outlier");
            rep.cloud_points = cloud.size();
            const ObbFit fit = fit_min_volume_obb(cloud, opts.obb);
            rep.volume = fit.box.volume();
            rep.method = fit.report.method;

            static const std::vector<Track> kNoTracks;
            const auto tit = world.tracks.find(id);
            const std::vector<Track>& ent_tracks = tit == world.tracks.end() ? kNoTracks : tit->second;
            Propagation prop = propagate_boxes(fit.box, anchor, ent_tracks, frame_count);
            rep.missing_frames = prop.missing;

            Entity e;
            e.id = id;
            e.label = label;
            e.track = std::move(prop.boxes);
            results[i] = std::move(e);
            rep.recovered = true;
        } catch (const Error& err) {
            if (err.code() != ErrorCode::EntityNeverVisible && err.code() != ErrorCode::EmptyCloud) throw;
            rep.recovered = false;
            rep.reason = std::string(to_string(err.code()));
        }
    });

    LabelResult out;
    out.scene.frame_count = frame_count;
    out.scene.fps = opts.fps;
    out.scene.camera.intrinsics = k;
    for (int f = 0; f < frame_count; ++f) out.scene.camera.keyframes.emplace(f, poses[f]);
    for (auto& r : results)
        if (r) out.scene.entities.push_back(std::move(*r));
    out.entities = std::move(reports);
    return out;
}

} // namespace cineforge::autolabel
