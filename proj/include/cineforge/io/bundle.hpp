// SPDX-License-Identifier: Apache-2.0

#pragma once

// Condition bundle: everything a video generator is conditioned on, one
// directory per clip.
//
//   depth/00000.png ...   16-bit depth (or .pfm), see meta.json for the scale
//   idmap/00000.png ...   8-bit indexed entity ids
//   camera.txt            F lines x 12 reals
//   labels.json           {"<id>": "<class>"}
//   meta.json             fps, frame_count, intrinsics, depth encoding + scale
//
// The bundle is assembled in a sibling staging directory and renamed into
// place, so a reader never sees a half-written bundle.

#include <atomic>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <unistd.h>

#include "cineforge/error.hpp"
#include "cineforge/io/camera_txt.hpp"
#include "cineforge/io/file.hpp"
#include "cineforge/io/raster_codec.hpp"
#include "cineforge/io/scene_json.hpp"
#include "cineforge/parallel.hpp"
#include "cineforge/render.hpp"
#include "cineforge/scene.hpp"

namespace cineforge::io {

enum class DepthEncoding { Png16, Pfm };

inline std::string_view to_string(DepthEncoding e) { return e == DepthEncoding::Png16 ? "png16" : "pfm"; }

inline DepthEncoding parse_depth_encoding(std::string_view s) {
    if (s == "png16") return DepthEncoding::Png16;
    if (s == "pfm") return DepthEncoding::Pfm;
    throw Error(ErrorCode::InvalidArgument, "unknown depth encoding \"" + std::string(s) + "\" (png16|pfm)");
}

inline std::string_view depth_extension(DepthEncoding e) { return e == DepthEncoding::Png16 ? ".png" : ".pfm"; }

struct BundleSettings {
    RenderSettings render;
    DepthEncoding depth_encoding = DepthEncoding::Png16;
    /// Meters per stored unit for PNG16.
    double depth_scale = kMillimeter;
    unsigned jobs = 1;
};

struct BundleMeta {
    double fps = 15.0;
    int frame_count = 0;
    Intrinsics intrinsics;
    DepthEncoding depth_encoding = DepthEncoding::Png16;
    double depth_scale = kMillimeter;
};

struct Bundle {
    BundleMeta meta;
    std::map<EntityId, std::string> labels;
    CameraSequence camera;
    std::vector<RenderedFrame> frames;
};

inline json meta_json(const BundleMeta& m) {
    json depth = {{"encoding", to_string(m.depth_encoding)}, {"unit", "m"}};
    if (m.depth_encoding == DepthEncoding::Png16) depth["scale"] = m.depth_scale;
    return {{"fps", m.fps},
            {"frame_count", m.frame_count},
            {"intrinsics", intrinsics_json(m.intrinsics)},
            {"depth", depth},
            {"idmap", {{"encoding", "png8-indexed"}}}};
}

inline BundleMeta meta_from_json(const json& j) {
    if (!j.is_object()) detail::field_error("$", "expected an object");
    BundleMeta m;
    m.fps = detail::get_real(detail::member(j, "fps", "$"), "fps");
    const long long f = detail::get_int(detail::member(j, "frame_count", "$"), "frame_count");
    if (f < 0 || f > 1000000) detail::field_error("frame_count", "out of range");
    m.frame_count = static_cast<int>(f);
    m.intrinsics = detail::parse_intrinsics(detail::member(j, "intrinsics", "$"), "intrinsics");
    if (j.contains("depth")) {
        const json& d = j["depth"];
        if (!d.is_object()) detail::field_error("depth", "expected an object");
        const json& enc = detail::member(d, "encoding", "depth");
        if (!enc.is_string()) detail::field_error("depth.encoding", "expected a string");
        try {
            m.depth_encoding = parse_depth_encoding(enc.get<std::string>());
        } catch (const Error& e) {
            detail::field_error("depth.encoding", e.message());
        }
        if (d.contains("scale")) m.depth_scale = detail::get_real(d["scale"], "depth.scale");
        if (!(m.depth_scale > 0.0)) detail::field_error("depth.scale", "must be positive");
    }
    return m;
}

inline json labels_json(const std::map<EntityId, std::string>& labels) {
    json j = json::object();
    for (const auto& [id, label] : labels) j[std::to_string(id)] = label;
    return j;
}

inline std::map<EntityId, std::string> labels_from_json(const json& j) {
    if (!j.is_object()) detail::field_error("$", "labels must be an object of id -> class");
    std::map<EntityId, std::string> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto id = parse_int(it.key());
        if (!id || *id <= 0 || *id > 65535) detail::field_error(it.key(), "key is not a positive entity id");
        if (!it.value().is_string()) detail::field_error(it.key(), "expected a class string");
        out[static_cast<EntityId>(*id)] = it.value().get<std::string>();
    }
    return out;
}

inline json load_json(const fs::path& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

/// Wraps a parse of `path` so errors name the file.
template <typename Fn>
auto with_path(const fs::path& path, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.message().rfind(path.string(), 0) == 0) throw;
        throw Error(e.code(), path.string() + ": " + e.message());
    }
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

inline Bytes encode_depth(const DepthMap& d, DepthEncoding enc, double scale) {
    return enc == DepthEncoding::Png16 ? encode_depth_png16(d, scale) : encode_depth_pfm(d);
}

inline DepthMap decode_depth(std::span<const std::uint8_t> bytes, DepthEncoding enc, double scale) {
    return enc == DepthEncoding::Png16 ? decode_depth_png16(bytes, scale) : decode_depth_pfm(bytes);
}

namespace detail {

inline fs::path sibling_temp(const fs::path& dir, std::string_view tag) {
    static std::atomic<unsigned> counter{0};
    const fs::path abs = fs::absolute(dir).lexically_normal();
    const fs::path parent = abs.has_parent_path() ? abs.parent_path() : fs::path(".");
    std::string name = abs.filename().string();
    if (name.empty()) name = abs.parent_path().filename().string();
    return parent / ("." + name + "." + std::string(tag) + "." + std::to_string(::getpid()) + "." +
                     std::to_string(counter.fetch_add(1)));
}

/// Moves a fully written staging directory to `dir`. An existing bundle at
/// `dir` is replaced; any other non-empty directory is left alone.
inline void publish_dir(const fs::path& staging, const fs::path& dir) {
    std::error_code ec;
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) {
            fs::remove_all(staging, ec);
            throw Error(ErrorCode::IoError, dir.string() + ": exists and is not a directory");
        }
        const bool empty = fs::is_empty(dir);
        if (!empty && !fs::exists(dir / "meta.json")) {
            fs::remove_all(staging, ec);
            throw Error(ErrorCode::IoError, dir.string() + ": refusing to replace a non-empty directory that is not a bundle");
        }
        const fs::path old = sibling_temp(dir, "old");
        fs::rename(dir, old, ec);
        if (ec) {
            fs::remove_all(staging, ec);
            throw Error(ErrorCode::IoError, dir.string() + ": cannot move old contents aside: " + ec.message());
        }
        fs::rename(staging, dir, ec);
        if (ec) {
            std::error_code ec2;
            fs::rename(old, dir, ec2);
            fs::remove_all(staging, ec2);
            throw Error(ErrorCode::IoError, dir.string() + ": rename failed: " + ec.message());
        }
        fs::remove_all(old, ec);
        return;
    }
    if (dir.has_parent_path()) fs::create_directories(fs::absolute(dir).parent_path(), ec);
    fs::rename(staging, dir, ec);
    if (ec) {
        std::error_code ec2;
        fs::remove_all(staging, ec2);
        throw Error(ErrorCode::IoError, dir.string() + ": rename failed: " + ec.message());
    }
}

inline void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) { write_atomic(path, bytes); }

} // namespace detail

/// Writes frames, camera rows and labels as a bundle at `dir` (atomic).
inline void write_bundle(fs::path dir, const Bundle& b, unsigned jobs = 1) {
    if (!dir.has_filename()) dir = dir.parent_path();
    if (static_cast<int>(b.frames.size()) != b.meta.frame_count || static_cast<int>(b.camera.size()) != b.meta.frame_count) {
        throw Error(ErrorCode::ConsistencyError, "bundle frame_count " + std::to_string(b.meta.frame_count) + " but " +
                                                     std::to_string(b.frames.size()) + " frames and " +
                                                     std::to_string(b.camera.size()) + " camera rows");
    }
    const fs::path staging = detail::sibling_temp(dir, "staging");
    std::error_code ec;
    fs::create_directories(staging / "depth", ec);
    fs::create_directories(staging / "idmap", ec);
    if (ec) throw Error(ErrorCode::IoError, staging.string() + ": " + ec.message());
    try {
        parallel_for(b.frames.size(), jobs, [&](std::size_t f) {
            const int frame = static_cast<int>(f);
            const fs::path dp = staging / "depth" / frame_name(frame, depth_extension(b.meta.depth_encoding));
            const fs::path ip = staging / "idmap" / frame_name(frame, ".png");
            with_path(dp, [&] {
                detail::write_file(dp, encode_depth(b.frames[f].depth, b.meta.depth_encoding, b.meta.depth_scale));
            });
            with_path(ip, [&] { detail::write_file(ip, encode_idmap_png(b.frames[f].ids)); });
        });
        write_camera_txt(staging / "camera.txt", b.camera);
        write_atomic(staging / "labels.json", dump_json(labels_json(b.labels)));
        write_atomic(staging / "meta.json", dump_json(meta_json(b.meta)));
    } catch (...) {
        fs::remove_all(staging, ec);
        throw;
    }
    detail::publish_dir(staging, dir);
}

/// Renders every frame of `scene` and writes the bundle.
inline Bundle make_bundle(const Scene& scene, const BundleSettings& settings = {}) {
    Bundle b;
    b.meta.fps = scene.fps;
    b.meta.frame_count = scene.frame_count;
    b.meta.intrinsics = render_intrinsics(scene.camera.intrinsics, settings.render);
    b.meta.depth_encoding = settings.depth_encoding;
    b.meta.depth_scale = settings.depth_scale;
    for (const Entity& e : scene.entities) b.labels[e.id] = e.label;
    b.camera = export_camera_rt(scene);
    b.frames = render_sequence(scene, settings.render, settings.jobs);
    return b;
}

inline Bundle export_condition_bundle(const Scene& scene, const fs::path& dir, const BundleSettings& settings = {}) {
    const auto violations = validate(scene);
    if (!violations.empty()) {
        throw Error(ErrorCode::InvalidArgument, "scene has " + std::to_string(violations.size()) +
                                                    " violation(s); first: " + violations.front().subject + ": " +
                                                    violations.front().message);
    }
    Bundle b = make_bundle(scene, settings);
    write_bundle(dir, b, settings.jobs);
    return b;
}

inline BundleMeta read_bundle_meta(const fs::path& dir) {
    const fs::path p = dir / "meta.json";
    return with_path(p, [&] { return meta_from_json(load_json(p)); });
}

inline std::map<EntityId, std::string> read_labels(const fs::path& path) {
    return with_path(path, [&] { return labels_from_json(load_json(path)); });
}

/// Frame indices of files named %05d<ext> in `dir`; other names are reported.
inline std::vector<int> list_frames(const fs::path& dir, std::string_view ext, std::vector<std::string>* stray = nullptr) {
    std::vector<int> frames;
    if (!fs::is_directory(dir)) return frames;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        const std::string stem = entry.path().stem().string();
        const auto n = parse_int(stem);
        if (entry.path().extension() == ext && stem.size() >= 5 && n && *n >= 0 && frame_name(static_cast<int>(*n), ext) == name) {
            frames.push_back(static_cast<int>(*n));
        } else if (stray) {
            stray->push_back((dir / name).string());
        }
    }
    std::sort(frames.begin(), frames.end());
    return frames;
}

/// Every ConditionBundle invariant that fails, as readable messages. Empty
/// means the bundle is self-consistent.
inline std::vector<std::string> validate_bundle(const fs::path& dir) {
    std::vector<std::string> problems;
    BundleMeta meta;
    try {
        meta = read_bundle_meta(dir);
    } catch (const Error& e) {
        problems.push_back(e.what());
        return problems;
    }
    const int F = meta.frame_count;
    const auto expect_frames = [&](const fs::path& sub, std::string_view ext) {
        std::vector<std::string> stray;
        const auto frames = list_frames(dir / sub, ext, &stray);
        if (!fs::is_directory(dir / sub)) {
            problems.push_back((dir / sub).string() + ": missing directory");
            return frames;
        }
        for (const auto& s : stray) problems.push_back(s + ": unexpected file");
        bool dense = static_cast<int>(frames.size()) == F;
        for (std::size_t i = 0; dense && i < frames.size(); ++i) dense = frames[i] == static_cast<int>(i);
        if (!dense) {
            problems.push_back((dir / sub).string() + ": expected frames 0.." + std::to_string(F - 1) + ", found " +
                               std::to_string(frames.size()) + " file(s)");
        }
        return frames;
    };
    const auto depth_frames = expect_frames("depth", depth_extension(meta.depth_encoding));
    const auto id_frames = expect_frames("idmap", ".png");

    try {
        const auto cam = read_camera_txt(dir / "camera.txt");
        if (static_cast<int>(cam.size()) != F) {
            problems.push_back((dir / "camera.txt").string() + ": " + std::to_string(cam.size()) +
                               " line(s), frame_count is " + std::to_string(F));
        }
    } catch (const Error& e) {
        problems.push_back(e.what());
    }

    std::map<EntityId, std::string> labels;
    bool have_labels = true;
    try {
        labels = read_labels(dir / "labels.json");
    } catch (const Error& e) {
        problems.push_back(e.what());
        have_labels = false;
    }

    const int W = meta.intrinsics.width, H = meta.intrinsics.height;
    std::set<int> unlabeled;
    for (int f : depth_frames) {
        const fs::path p = dir / "depth" / frame_name(f, depth_extension(meta.depth_encoding));
        try {
            const DepthMap d = with_path(p, [&] { return decode_depth(read_bytes(p), meta.depth_encoding, meta.depth_scale); });
            if (d.width != W || d.height != H) {
                problems.push_back(p.string() + ": raster " + std::to_string(d.width) + "x" + std::to_string(d.height) +
                                   ", intrinsics say " + std::to_string(W) + "x" + std::to_string(H));
            }
        } catch (const Error& e) {
            problems.push_back(e.what());
        }
    }
    for (int f : id_frames) {
        const fs::path p = dir / "idmap" / frame_name(f, ".png");
        try {
            const IdMap m = with_path(p, [&] { return decode_idmap_png(read_bytes(p)); });
            if (m.width != W || m.height != H) {
                problems.push_back(p.string() + ": raster " + std::to_string(m.width) + "x" + std::to_string(m.height) +
                                   ", intrinsics say " + std::to_string(W) + "x" + std::to_string(H));
            }
            if (have_labels) {
                for (auto id : m.data)
                    if (id != 0 && !labels.count(id)) unlabeled.insert(id);
            }
        } catch (const Error& e) {
            problems.push_back(e.what());
        }
    }
    for (int id : unlabeled) {
        problems.push_back((dir / "labels.json").string() + ": id " + std::to_string(id) + " appears in idmap/ but has no label");
    }
    return problems;
}

inline Bundle read_bundle(const fs::path& dir) {
    Bundle b;
    b.meta = read_bundle_meta(dir);
    b.labels = read_labels(dir / "labels.json");
    b.camera = read_camera_txt(dir / "camera.txt");
    for (int f = 0; f < b.meta.frame_count; ++f) {
        const fs::path dp = dir / "depth" / frame_name(f, depth_extension(b.meta.depth_encoding));
        const fs::path ip = dir / "idmap" / frame_name(f, ".png");
        RenderedFrame fr;
        fr.depth = with_path(dp, [&] { return decode_depth(read_bytes(dp), b.meta.depth_encoding, b.meta.depth_scale); });
        fr.ids = with_path(ip, [&] { return decode_idmap_png(read_bytes(ip)); });
        b.frames.push_back(std::move(fr));
    }
    if (static_cast<int>(b.camera.size()) != b.meta.frame_count) {
        throw Error(ErrorCode::ConsistencyError, (dir / "camera.txt").string() + " has " + std::to_string(b.camera.size()) +
                                                     " rows, meta.json frame_count is " + std::to_string(b.meta.frame_count));
    }
    return b;
}

} // namespace cineforge::io
