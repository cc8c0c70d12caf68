// SPDX-License-Identifier: Apache-2.0

#pragma once

// Seeded synthetic clips with known ground truth: a few boxes sliding over a
// ground plane, an elevated camera drifting sideways, and everything an
// auto-labeling run consumes (per-frame masks, metric depth, poses and 3D point
// tracks). World coordinates follow the camera convention, so "up" is -y.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "cineforge/autolabel.hpp"
#include "cineforge/error.hpp"
#include "cineforge/geometry.hpp"
#include "cineforge/metrics.hpp"
#include "cineforge/render.hpp"
#include "cineforge/scene.hpp"

namespace cineforge::synth {

struct SynthOptions {
    int frame_count = 16;
    int width = 640;
    int height = 480;
    int min_entities = 1;
    int max_entities = 3;
    int tracks_per_entity = 48;
    bool moving_camera = true;
    /// Emit tracks in camera coordinates instead of world coordinates.
    bool camera_frame_tracks = false;
};

struct SynthClip {
    Scene truth;
    std::vector<Pose> poses;
    std::vector<RenderedFrame> frames;
    std::vector<autolabel::FrameObservation> observations;
    autolabel::TrackSet tracks;
    std::map<EntityId, std::string> labels;
};

namespace detail {

inline constexpr std::array<const char*, 6> kLabels{"car", "person", "dog", "chair", "crate", "bicycle"};

inline double deg(double d) { return d * std::numbers::pi / 180.0; }

/// Smallest angle between the horizontal viewing direction and either
/// horizontal box axis, folded into [0, 45] degrees.
inline double view_obliquity(const Box3& box, const Vec3& eye) {
    const Vec3 ray = box.center - eye;
    const double ray_yaw = std::atan2(ray.x, ray.z);
    const Vec3 ax = box.rotation.axis(0);
    const double box_yaw = std::atan2(ax.x, ax.z);
    double a = std::fmod(std::abs(ray_yaw - box_yaw), std::numbers::pi / 2);
    return std::min(a, std::numbers::pi / 2 - a);
}

inline bool inside_view(const Box3& box, const Pose& cam, const Intrinsics& k, double margin) {
    for (const Vec3& c : box_corners(box)) {
        const Vec3 p = cam.apply(c);
        if (p.z < 0.5) return false;
        const Projection q = project(c, cam, k);
        if (q.u < margin || q.v < margin || q.u > k.width - margin || q.v > k.height - margin) return false;
    }
    return true;
}

inline bool separated(const metrics::Box2& a, const metrics::Box2& b, double gap) {
    return a.x1 + gap < b.x0 || b.x1 + gap < a.x0 || a.y1 + gap < b.y0 || b.y1 + gap < a.y0;
}

} // namespace detail

/// Deterministic for a given (seed, options). Boxes translate without rotating,
/// stay fully in view, never overlap in image space, and are seen obliquely so
/// three faces are visible in every frame.
inline SynthClip make_clip(std::uint64_t seed, const SynthOptions& opts = {}) {
    if (opts.frame_count < 1 || opts.width < 16 || opts.height < 16 || opts.min_entities < 1 ||
        opts.max_entities < opts.min_entities || opts.tracks_per_entity < 1) {
        throw Error(ErrorCode::InvalidArgument, "bad synthetic clip options");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    const int F = opts.frame_count;
    SynthClip clip;
    Scene& s = clip.truth;
    s.frame_count = F;
    s.fps = 15.0;
    s.camera.intrinsics = Intrinsics::from_fov(opts.width, opts.height, 60.0);
    const Intrinsics& k = s.camera.intrinsics;

    const Vec3 target{0.0, -0.3, 6.0};
    const Vec3 eye0{uniform(-0.5, 0.5), uniform(-3.0, -2.0), 0.0};
    const Vec3 eye1 = opts.moving_camera ? eye0 + Vec3{uniform(-0.6, 0.6), uniform(-0.2, 0.2), uniform(0.0, 0.5)} : eye0;
    s.camera.keyframes[0] = look_at(eye0, target);
    if (F > 1) s.camera.keyframes[F - 1] = look_at(eye1, target);
    for (int f = 0; f < F; ++f) clip.poses.push_back(sample_track(s.camera.keyframes, f));

    const int n = opts.min_entities + static_cast<int>(rng() % (opts.max_entities - opts.min_entities + 1));
    std::vector<std::vector<metrics::Box2>> footprints;
    for (int id = 1; id <= n; ++id) {
        bool placed = false;
        for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
            const Vec3 half{uniform(0.25, 0.6), uniform(0.2, 0.5), uniform(0.25, 0.6)};
            const Rot3 rot = Rot3::about_y(uniform(0.0, std::numbers::pi));
            const Vec3 c0{uniform(-2.0, 2.0), -half.y, uniform(4.5, 8.0)};
            const Vec3 step{uniform(-0.6, 0.6), 0.0, uniform(-0.6, 0.6)};
            BoxTrack track;
            track[0] = Box3{c0, half, rot};
            if (F > 1) track[F - 1] = Box3{c0 + step, half, rot};

            std::vector<metrics::Box2> fp;
            bool ok = true;
            for (int f = 0; f < F && ok; ++f) {
                const Box3 b = sample_track(track, f);
                const double ob = detail::view_obliquity(b, camera_center(clip.poses[f]));
                ok = ob > detail::deg(22.0) && detail::inside_view(b, clip.poses[f], k, 8.0);
                if (!ok) break;
                fp.push_back(*metrics::projected_box(b, clip.poses[f], k));
                for (const auto& other : footprints) ok = ok && detail::separated(fp.back(), other[f], 4.0);
            }
            if (!ok) continue;
            footprints.push_back(std::move(fp));
            s.entities.push_back({id, detail::kLabels[rng() % detail::kLabels.size()], std::move(track)});
            placed = true;
        }
        if (!placed) {
            // Crowded layout: keep what fits once the minimum is met.
            if (id > opts.min_entities) break;
            throw Error(ErrorCode::InvalidArgument, "could not place synthetic entity " + std::to_string(id));
        }
    }

    clip.frames = render_sequence(s);
    for (int f = 0; f < F; ++f) {
        clip.observations.push_back({f, autolabel::masks_from_ids(clip.frames[f].ids), clip.frames[f].depth});
    }

    clip.tracks.frame_of_reference =
        opts.camera_frame_tracks ? autolabel::FrameOfReference::Camera : autolabel::FrameOfReference::World;
    for (const Entity& e : s.entities) {
        clip.labels[e.id] = e.label;
        auto& list = clip.tracks.tracks[e.id];
        const Box3& first = e.track.begin()->second;
        for (int t = 0; t < opts.tracks_per_entity; ++t) {
            const Vec3 local{uniform(-1, 1) * first.half_extents.x, uniform(-1, 1) * first.half_extents.y,
                             uniform(-1, 1) * first.half_extents.z};
            autolabel::Track track{t, {}};
            for (int f = 0; f < F; ++f) {
                const Box3 b = sample_track(e.track, f);
                const Vec3 w = b.center + b.rotation.rotate(local);
                track.points.emplace(f, opts.camera_frame_tracks ? clip.poses[f].apply(w) : w);
            }
            list.push_back(std::move(track));
        }
    }
    return clip;
}

} // namespace cineforge::synth
