// SPDX-License-Identifier: Apache-2.0

#pragma once

// Authored scenes: labeled entities with keyframed box tracks and a keyframed
// camera. Scenes are values; every edit returns an updated copy.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cineforge/error.hpp"
#include "cineforge/geometry.hpp"

namespace cineforge {

using EntityId = int;
using BoxTrack = std::map<int, Box3>;
using PoseTrack = std::map<int, Pose>;

struct Entity {
    EntityId id = 1;
    std::string label;
    BoxTrack track;

    bool operator==(const Entity&) const = default;
};

struct CameraTrack {
    PoseTrack keyframes;
    Intrinsics intrinsics;

    bool operator==(const CameraTrack&) const = default;
};

struct Scene {
    int frame_count = 1;
    double fps = 15.0;
    std::vector<Entity> entities;
    CameraTrack camera;

    const Entity* find(EntityId id) const {
        for (const Entity& e : entities)
            if (e.id == id) return &e;
        return nullptr;
    }
    Entity* find(EntityId id) {
        for (Entity& e : entities)
            if (e.id == id) return &e;
        return nullptr;
    }

    bool operator==(const Scene&) const = default;
};

struct SceneSample {
    int frame = 0;
    std::map<EntityId, Box3> boxes;
    Pose camera_pose;
};

/// Keyframe target: an entity id, or the scene camera.
struct CameraTarget {
    bool operator==(const CameraTarget&) const = default;
};
using Target = std::variant<EntityId, CameraTarget>;

// ---------------------------------------------------------------------------
// Interpolation

inline Box3 interpolate(const Box3& a, const Box3& b, double t) {
    return {a.center + (b.center - a.center) * t,
            a.half_extents + (b.half_extents - a.half_extents) * t, slerp(a.rotation, b.rotation, t)};
}

inline Pose interpolate(const Pose& a, const Pose& b, double t) {
    return {slerp(a.rotation, b.rotation, t), a.translation + (b.translation - a.translation) * t};
}

/// Piecewise interpolation of a keyframed track; clamps outside the key range
/// and returns stored keyframes verbatim.
template <typename T>
T sample_track(const std::map<int, T>& track, int frame) {
    if (track.empty()) throw Error(ErrorCode::InvalidArgument, "track has no keyframes");
    const auto hi = track.lower_bound(frame);
    if (hi != track.end() && hi->first == frame) return hi->second;
    if (hi == track.begin()) return hi->second;
    const auto lo = std::prev(hi);
    if (hi == track.end()) return lo->second;
    const double t = static_cast<double>(frame - lo->first) / (hi->first - lo->first);
    return interpolate(lo->second, hi->second, t);
}

// ---------------------------------------------------------------------------
// Editing

inline void check_frame(const Scene& s, int frame) {
    if (frame < 0 || frame >= s.frame_count) {
        throw Error(ErrorCode::FrameOutOfRange, "frame " + std::to_string(frame) +
                                                    " outside [0, " +
                                                    std::to_string(s.frame_count) + ")");
    }
}

using KeyframeValue = std::variant<Box3, Pose>;

inline Scene set_keyframe(Scene scene, const Target& target, int frame, const KeyframeValue& value) {
    check_frame(scene, frame);
    if (std::holds_alternative<CameraTarget>(target)) {
        const Pose* p = std::get_if<Pose>(&value);
        if (!p) throw Error(ErrorCode::InvalidArgument, "camera keyframes take a pose");
        scene.camera.keyframes[frame] = *p;
        return scene;
    }
    const EntityId id = std::get<EntityId>(target);
    Entity* e = scene.find(id);
    if (!e) throw Error(ErrorCode::UnknownEntity, "entity " + std::to_string(id));
    const Box3* b = std::get_if<Box3>(&value);
    if (!b) throw Error(ErrorCode::InvalidArgument, "entity keyframes take a box");
    e->track[frame] = *b;
    return scene;
}

inline Scene remove_keyframe(Scene scene, const Target& target, int frame) {
    check_frame(scene, frame);
    auto erase = [frame](auto& track, const std::string& who) {
        if (!track.contains(frame)) {
            throw Error(ErrorCode::InvalidArgument,
                        who + " has no keyframe at frame " + std::to_string(frame));
        }
        if (track.size() == 1) {
            throw Error(ErrorCode::LastKeyframeRemoval, who + " would be left without keyframes");
        }
        track.erase(frame);
    };
    if (std::holds_alternative<CameraTarget>(target)) {
        erase(scene.camera.keyframes, "camera");
        return scene;
    }
    const EntityId id = std::get<EntityId>(target);
    Entity* e = scene.find(id);
    if (!e) throw Error(ErrorCode::UnknownEntity, "entity " + std::to_string(id));
    erase(e->track, "entity " + std::to_string(id));
    return scene;
}

// ---------------------------------------------------------------------------
// Resolution and export

inline SceneSample resolve(const Scene& scene, int frame) {
    check_frame(scene, frame);
    SceneSample s;
    s.frame = frame;
    for (const Entity& e : scene.entities) s.boxes.emplace(e.id, sample_track(e.track, frame));
    s.camera_pose = sample_track(scene.camera.keyframes, frame);
    return s;
}

/// Row-major 3x3 rotation followed by the translation, one row per frame.
using CameraRow = std::array<double, 12>;
using CameraSequence = std::vector<CameraRow>;

inline CameraRow pose_to_row(const Pose& p) {
    const Mat3 r = p.rotation.matrix();
    return {r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2],
            r[2][0], r[2][1], r[2][2], p.translation.x, p.translation.y, p.translation.z};
}

inline Pose row_to_pose(const CameraRow& row) {
    const Mat3 r{{{row[0], row[1], row[2]}, {row[3], row[4], row[5]}, {row[6], row[7], row[8]}}};
    return {Rot3::from_matrix(r), {row[9], row[10], row[11]}};
}

inline CameraSequence export_camera_rt(const Scene& scene) {
    CameraSequence seq;
    seq.reserve(scene.frame_count);
    for (int f = 0; f < scene.frame_count; ++f) {
        seq.push_back(pose_to_row(sample_track(scene.camera.keyframes, f)));
    }
    return seq;
}

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind {
    InvalidFrameCount,
    InvalidFps,
    InvalidIntrinsics,
    DuplicateId,
    InvalidId,
    EmptyLabel,
    EmptyTrack,
    FrameOutOfRange,
    InvalidBox,
    NonUnitRotation,
    NonFinite,
    VolumeVaries,
};

inline std::string_view to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::InvalidFrameCount: return "InvalidFrameCount";
        case ViolationKind::InvalidFps: return "InvalidFps";
        case ViolationKind::InvalidIntrinsics: return "InvalidIntrinsics";
        case ViolationKind::DuplicateId: return "DuplicateId";
        case ViolationKind::InvalidId: return "InvalidId";
        case ViolationKind::EmptyLabel: return "EmptyLabel";
        case ViolationKind::EmptyTrack: return "EmptyTrack";
        case ViolationKind::FrameOutOfRange: return "FrameOutOfRange";
        case ViolationKind::InvalidBox: return "InvalidBox";
        case ViolationKind::NonUnitRotation: return "NonUnitRotation";
        case ViolationKind::NonFinite: return "NonFinite";
        case ViolationKind::VolumeVaries: return "VolumeVaries";
    }
    return "Unknown";
}

struct Violation {
    ViolationKind kind;
    /// "camera", "entity 3", or "scene".
    std::string subject;
    /// -1 when the violation is not tied to a frame.
    int frame = -1;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> errors;
    /// Non-fatal findings, e.g. an entity whose box volume changes over time.
    std::vector<Violation> warnings;
};

namespace detail {

inline void check_rotation(const Rot3& r, const std::string& subject, int frame,
                           std::vector<Violation>& out) {
    if (!std::isfinite(r.norm()) || std::abs(r.norm() - 1.0) > 1e-9) {
        out.push_back({ViolationKind::NonUnitRotation, subject, frame, "quaternion is not unit norm"});
    }
}

} // namespace detail

inline ValidationReport validate_report(const Scene& scene) {
    ValidationReport rep;
    auto& err = rep.errors;
    if (scene.frame_count < 1) {
        err.push_back({ViolationKind::InvalidFrameCount, "scene", -1, "frame_count must be >= 1"});
    }
    if (!(scene.fps > 0.0) || !std::isfinite(scene.fps)) {
        err.push_back({ViolationKind::InvalidFps, "scene", -1, "fps must be positive"});
    }
    if (!scene.camera.intrinsics.valid()) {
        err.push_back({ViolationKind::InvalidIntrinsics, "camera", -1,
                       "need fx, fy > 0 and the principal point inside the raster"});
    }
    auto in_range = [&](int f) { return f >= 0 && f < scene.frame_count; };

    if (scene.camera.keyframes.empty()) {
        err.push_back({ViolationKind::EmptyTrack, "camera", -1, "camera has no keyframes"});
    }
    for (const auto& [f, pose] : scene.camera.keyframes) {
        if (!in_range(f)) err.push_back({ViolationKind::FrameOutOfRange, "camera", f, "keyframe outside clip"});
        if (!pose.translation.finite()) err.push_back({ViolationKind::NonFinite, "camera", f, "non-finite translation"});
        detail::check_rotation(pose.rotation, "camera", f, err);
    }

    std::set<EntityId> seen;
    for (const Entity& e : scene.entities) {
        const std::string who = "entity " + std::to_string(e.id);
        if (e.id <= 0) err.push_back({ViolationKind::InvalidId, who, -1, "ids must be positive (0 is background)"});
        if (!seen.insert(e.id).second) err.push_back({ViolationKind::DuplicateId, who, -1, "id used more than once"});
        if (e.label.empty()) err.push_back({ViolationKind::EmptyLabel, who, -1, "label is empty"});
        if (e.track.empty()) err.push_back({ViolationKind::EmptyTrack, who, -1, "track has no keyframes"});
        double first_volume = -1.0;
        bool varies = false;
        for (const auto& [f, box] : e.track) {
            if (!in_range(f)) err.push_back({ViolationKind::FrameOutOfRange, who, f, "keyframe outside clip"});
            if (!box.center.finite() || !box.half_extents.finite()) {
                err.push_back({ViolationKind::NonFinite, who, f, "non-finite box"});
            } else if (!(box.half_extents.x > 0.0 && box.half_extents.y > 0.0 && box.half_extents.z > 0.0)) {
                err.push_back({ViolationKind::InvalidBox, who, f, "half extents must be positive"});
            }
            detail::check_rotation(box.rotation, who, f, err);
            const double v = box.volume();
            if (first_volume < 0.0) first_volume = v;
            else if (v != first_volume) varies = true;
        }
        if (varies) {
            rep.warnings.push_back({ViolationKind::VolumeVaries, who, -1, "box volume changes across keyframes"});
        }
    }
    return rep;
}

/// Empty iff every scene invariant holds. Warnings are not included.
inline std::vector<Violation> validate(const Scene& scene) { return validate_report(scene).errors; }

} // namespace cineforge
