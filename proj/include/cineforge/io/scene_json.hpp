// SPDX-License-Identifier: Apache-2.0

#pragma once

// Versioned scene documents. Reals are written as the shortest decimal that
// parses back to the same double, so save/load is exact. Fields this version does
// not know about (top level, camera, entity) ride along untouched.
//
//   {
//     "schema_version": 1, "fps": 15.0, "frame_count": 16,
//     "camera": {"intrinsics": {"fx": .., "fy": .., "cx": .., "cy": .., "width": .., "height": ..},
//                "keyframes": [{"frame": 0, "rotation": [w, x, y, z], "translation": [x, y, z]}]},
//     "entities": [{"id": 1, "label": "car",
//                   "keyframes": [{"frame": 0, "center": [..], "half_extents": [..], "rotation": [w, x, y, z]}]}]
//   }

#include <array>
#include <limits>
#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cineforge/error.hpp"
#include "cineforge/io/file.hpp"
#include "cineforge/scene.hpp"

namespace cineforge::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct SceneDocument {
    Scene scene;
    json extra = json::object();
    json camera_extra = json::object();
    std::map<EntityId, json> entity_extra;

    bool operator==(const SceneDocument&) const = default;
};

namespace detail {

[[noreturn]] inline void field_error(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::ParseError, path + ": " + what);
}

inline const json& member(const json& obj, const char* key, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) field_error(path, std::string("missing field \"") + key + "\"");
    return *it;
}

inline double get_real(const json& j, const std::string& path) {
    if (!j.is_number()) field_error(path, "expected a number");
    return j.get<double>();
}

inline long long get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) field_error(path, "expected an integer");
    return j.get<long long>();
}

template <std::size_t N>
std::array<double, N> get_reals(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != N) field_error(path, "expected an array of " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = get_real(j[i], path + "[" + std::to_string(i) + "]");
    return out;
}

inline Vec3 get_vec3(const json& j, const std::string& path) {
    const auto a = get_reals<3>(j, path);
    return {a[0], a[1], a[2]};
}

/// Stored verbatim; non-unit quaternions are reported by validation, not here.
inline Rot3 get_rotation(const json& j, const std::string& path) {
    const auto q = get_reals<4>(j, path);
    return Rot3::from_unit_quaternion(q[0], q[1], q[2], q[3]);
}

inline json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
inline json rot_json(const Rot3& r) { return json::array({r.w(), r.x(), r.y(), r.z()}); }

inline json without(const json& obj, std::initializer_list<const char*> known) {
    json out = json::object();
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool is_known = false;
        for (const char* k : known) is_known = is_known || it.key() == k;
        if (!is_known) out[it.key()] = it.value();
    }
    return out;
}

inline Intrinsics parse_intrinsics(const json& j, const std::string& path) {
    if (!j.is_object()) field_error(path, "expected an object");
    const long long w = get_int(member(j, "width", path), path + ".width");
    const long long h = get_int(member(j, "height", path), path + ".height");
    if (w <= 0 || h <= 0 || w > 65535 || h > 65535) field_error(path, "raster size out of range");
    const bool any = j.contains("fx") || j.contains("fy") || j.contains("cx") || j.contains("cy");
    if (!any) return Intrinsics::from_fov(static_cast<int>(w), static_cast<int>(h));
    return {get_real(member(j, "fx", path), path + ".fx"), get_real(member(j, "fy", path), path + ".fy"),
            get_real(member(j, "cx", path), path + ".cx"), get_real(member(j, "cy", path), path + ".cy"),
            static_cast<int>(w), static_cast<int>(h)};
}

inline int get_frame(const json& kf, const std::string& path) {
    const long long f = get_int(member(kf, "frame", path), path + ".frame");
    if (f < std::numeric_limits<int>::min() || f > std::numeric_limits<int>::max()) field_error(path, "frame out of range");
    return static_cast<int>(f);
}

} // namespace detail

inline json intrinsics_json(const Intrinsics& k) {
    return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

inline json to_json(const SceneDocument& doc) {
    const Scene& s = doc.scene;
    json root = doc.extra.is_object() ? doc.extra : json::object();
    root["schema_version"] = kSchemaVersion;
    root["fps"] = s.fps;
    root["frame_count"] = s.frame_count;

    json cam = doc.camera_extra.is_object() ? doc.camera_extra : json::object();
    cam["intrinsics"] = intrinsics_json(s.camera.intrinsics);
    json ckf = json::array();
    for (const auto& [f, p] : s.camera.keyframes) {
        ckf.push_back({{"frame", f}, {"rotation", detail::rot_json(p.rotation)}, {"translation", detail::vec_json(p.translation)}});
    }
    cam["keyframes"] = std::move(ckf);
    root["camera"] = std::move(cam);

    json ents = json::array();
    for (const Entity& e : s.entities) {
        const auto it = doc.entity_extra.find(e.id);
        json ej = it != doc.entity_extra.end() && it->second.is_object() ? it->second : json::object();
        ej["id"] = e.id;
        ej["label"] = e.label;
        json kfs = json::array();
        for (const auto& [f, b] : e.track) {
            kfs.push_back({{"frame", f},
                           {"center", detail::vec_json(b.center)},
                           {"half_extents", detail::vec_json(b.half_extents)},
                           {"rotation", detail::rot_json(b.rotation)}});
        }
        ej["keyframes"] = std::move(kfs);
        ents.push_back(std::move(ej));
    }
    root["entities"] = std::move(ents);
    return root;
}

inline SceneDocument from_json(const json& root) {
    if (!root.is_object()) detail::field_error("$", "document must be a JSON object");
    const long long version = detail::get_int(detail::member(root, "schema_version", "$"), "schema_version");
    if (version != kSchemaVersion) {
        throw Error(ErrorCode::SchemaVersionUnsupported,
                    "schema_version " + std::to_string(version) + " (supported: " + std::to_string(kSchemaVersion) + ")");
    }
    SceneDocument doc;
    Scene& s = doc.scene;
    s.fps = detail::get_real(detail::member(root, "fps", "$"), "fps");
    s.frame_count = static_cast<int>(detail::get_int(detail::member(root, "frame_count", "$"), "frame_count"));
    doc.extra = detail::without(root, {"schema_version", "fps", "frame_count", "camera", "entities"});

    const json& cam = detail::member(root, "camera", "$");
    if (!cam.is_object()) detail::field_error("camera", "expected an object");
    s.camera.intrinsics = detail::parse_intrinsics(detail::member(cam, "intrinsics", "camera"), "camera.intrinsics");
    const json& ckf = detail::member(cam, "keyframes", "camera");
    if (!ckf.is_array()) detail::field_error("camera.keyframes", "expected an array");
    for (std::size_t i = 0; i < ckf.size(); ++i) {
        const std::string p = "camera.keyframes[" + std::to_string(i) + "]";
        if (!ckf[i].is_object()) detail::field_error(p, "expected an object");
        const int f = detail::get_frame(ckf[i], p);
        const Pose pose{detail::get_rotation(detail::member(ckf[i], "rotation", p), p + ".rotation"),
                        detail::get_vec3(detail::member(ckf[i], "translation", p), p + ".translation")};
        if (!s.camera.keyframes.emplace(f, pose).second) detail::field_error(p, "duplicate keyframe " + std::to_string(f));
    }
    doc.camera_extra = detail::without(cam, {"intrinsics", "keyframes"});

    const json& ents = detail::member(root, "entities", "$");
    if (!ents.is_array()) detail::field_error("entities", "expected an array");
    for (std::size_t i = 0; i < ents.size(); ++i) {
        const std::string p = "entities[" + std::to_string(i) + "]";
        const json& ej = ents[i];
        if (!ej.is_object()) detail::field_error(p, "expected an object");
        Entity e;
        const long long id = detail::get_int(detail::member(ej, "id", p), p + ".id");
        if (id < std::numeric_limits<int>::min() || id > std::numeric_limits<int>::max()) detail::field_error(p + ".id", "out of range");
        e.id = static_cast<int>(id);
        const json& label = detail::member(ej, "label", p);
        if (!label.is_string()) detail::field_error(p + ".label", "expected a string");
        e.label = label.get<std::string>();
        const json& kfs = detail::member(ej, "keyframes", p);
        if (!kfs.is_array()) detail::field_error(p + ".keyframes", "expected an array");
        for (std::size_t j = 0; j < kfs.size(); ++j) {
            const std::string kp = p + ".keyframes[" + std::to_string(j) + "]";
            if (!kfs[j].is_object()) detail::field_error(kp, "expected an object");
            const int f = detail::get_frame(kfs[j], kp);
            const Box3 b{detail::get_vec3(detail::member(kfs[j], "center", kp), kp + ".center"),
                         detail::get_vec3(detail::member(kfs[j], "half_extents", kp), kp + ".half_extents"),
                         detail::get_rotation(detail::member(kfs[j], "rotation", kp), kp + ".rotation")};
            if (!e.track.emplace(f, b).second) detail::field_error(kp, "duplicate keyframe " + std::to_string(f));
        }
        json extra = detail::without(ej, {"id", "label", "keyframes"});
        if (!extra.empty()) doc.entity_extra[e.id] = std::move(extra);
        s.entities.push_back(std::move(e));
    }
    return doc;
}

inline SceneDocument to_document(Scene scene) {
    SceneDocument d;
    d.scene = std::move(scene);
    return d;
}

/// Canonical text: two-space indentation, sorted keys, trailing newline.
inline std::string dump_scene(const SceneDocument& doc) { return to_json(doc).dump(2) + "\n"; }

inline SceneDocument parse_scene(std::string_view text) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, "at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    return from_json(root);
}

inline SceneDocument load_scene(const fs::path& path) {
    const std::string text = read_text(path);
    try {
        return parse_scene(text);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.message());
    }
}

inline void save_scene(const fs::path& path, const SceneDocument& doc) { write_atomic(path, dump_scene(doc)); }

} // namespace cineforge::io
