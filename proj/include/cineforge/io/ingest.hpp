// SPDX-License-Identifier: Apache-2.0

#pragma once

// Auto-labeling inputs produced by external models.
//
//   masks/00000.png ...   instance ids (indexed or grayscale PNG); idmap/ is
//                         accepted instead so an exported bundle ingests as is
//   depth/00000.png|.pfm  metric depth; PNG16 scale comes from meta.json
//   camera.txt            world-to-camera poses, F x 12
//   tracks.csv            3D point tracks, see below
//   labels.json           {"<id>": "<class>"}
//   meta.json             fps and intrinsics (same shape as a bundle's)
//
// tracks.csv:
//   # frame_of_reference: world
//   entity_id,track_id,frame,x,y,z
//   1,0,0,0.25,-0.4,6.1
// An optional trailing frame_flag column is accepted and ignored.

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cineforge/autolabel.hpp"
#include "cineforge/error.hpp"
#include "cineforge/io/bundle.hpp"
#include "cineforge/io/camera_txt.hpp"
#include "cineforge/io/file.hpp"
#include "cineforge/io/raster_codec.hpp"

namespace cineforge::io {

struct LabelInputs {
    std::vector<autolabel::FrameObservation> observations;
    autolabel::TrackSet tracks;
    std::vector<Pose> poses;
    Intrinsics intrinsics;
    std::map<EntityId, std::string> labels;
    double fps = 15.0;
};

inline std::string format_tracks_csv(const autolabel::TrackSet& ts) {
    std::string out = "# frame_of_reference: ";
    out += ts.frame_of_reference == autolabel::FrameOfReference::World ? "world" : "camera";
    out += "\nentity_id,track_id,frame,x,y,z\n";
    for (const auto& [id, tracks] : ts.tracks) {
        for (const auto& t : tracks) {
            for (const auto& [f, p] : t.points) {
                out += std::to_string(id) + "," + std::to_string(t.track_id) + "," + std::to_string(f) + "," +
                       format_double(p.x) + "," + format_double(p.y) + "," + format_double(p.z) + "\n";
            }
        }
    }
    return out;
}

inline autolabel::TrackSet parse_tracks_csv(std::string_view text) {
    autolabel::TrackSet ts;
    bool have_ref = false, have_header = false, with_flag = false;
    std::map<EntityId, std::map<int, autolabel::Track>> acc;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string where = "line " + std::to_string(i + 1);
        std::string_view line = lines[i];
        if (split_ws(line).empty()) continue;
        if (line.front() == '#') {
            constexpr std::string_view key = "frame_of_reference:";
            const auto pos = line.find(key);
            if (pos == std::string_view::npos) continue;
            const auto tokens = split_ws(line.substr(pos + key.size()));
            if (tokens.size() != 1 || (tokens[0] != "world" && tokens[0] != "camera")) {
                throw Error(ErrorCode::ParseError, where + ": frame_of_reference must be world or camera");
            }
            ts.frame_of_reference =
                tokens[0] == "world" ? autolabel::FrameOfReference::World : autolabel::FrameOfReference::Camera;
            have_ref = true;
            continue;
        }
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            std::string_view c = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
            while (!c.empty() && (c.front() == ' ' || c.front() == '\t')) c.remove_prefix(1);
            while (!c.empty() && (c.back() == ' ' || c.back() == '\t')) c.remove_suffix(1);
            cells.push_back(c);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (!have_header) {
            const std::vector<std::string_view> expected{"entity_id", "track_id", "frame", "x", "y", "z"};
            const bool base = cells.size() >= 6 && std::equal(expected.begin(), expected.end(), cells.begin());
            with_flag = cells.size() == 7 && cells[6] == "frame_flag";
            if (!base || (cells.size() != 6 && !with_flag)) {
                throw Error(ErrorCode::ParseError, where + ": expected header entity_id,track_id,frame,x,y,z");
            }
            have_header = true;
            continue;
        }
        const std::size_t want = with_flag ? 7 : 6;
        if (cells.size() != want) {
            throw Error(ErrorCode::FieldCountError, where + ": expected " + std::to_string(want) + " fields, got " +
                                                        std::to_string(cells.size()));
        }
        const auto id = parse_int(cells[0]), tid = parse_int(cells[1]), frame = parse_int(cells[2]);
        if (!id || !tid || !frame) throw Error(ErrorCode::ParseError, where + ": entity_id, track_id and frame must be integers");
        if (*frame < 0) throw Error(ErrorCode::ParseError, where + ": negative frame");
        Vec3 p;
        for (int k = 0; k < 3; ++k) {
            const auto v = parse_double(cells[3 + k]);
            if (!v) throw Error(ErrorCode::ParseError, where + ": not a number: \"" + std::string(cells[3 + k]) + "\"");
            if (!std::isfinite(*v)) throw Error(ErrorCode::NonFiniteValue, where + ", field " + std::to_string(4 + k));
            (k == 0 ? p.x : k == 1 ? p.y : p.z) = *v;
        }
        auto& track = acc[static_cast<EntityId>(*id)][static_cast<int>(*tid)];
        track.track_id = static_cast<int>(*tid);
        if (!track.points.emplace(static_cast<int>(*frame), p).second) {
            throw Error(ErrorCode::ParseError, where + ": duplicate row for entity " + std::to_string(*id) + ", track " +
                                                   std::to_string(*tid) + ", frame " + std::to_string(*frame));
        }
    }
    if (!have_ref) throw Error(ErrorCode::ParseError, "missing \"# frame_of_reference: world|camera\" line");
    if (!have_header) throw Error(ErrorCode::ParseError, "missing header line");
    for (auto& [id, tracks] : acc) {
        auto& list = ts.tracks[id];
        for (auto& [tid, t] : tracks) list.push_back(std::move(t));
    }
    return ts;
}

/// Writes an ingest directory (masks as id maps). Used by the synthetic
/// generator and tests.
inline void write_label_inputs(const fs::path& dir, const std::vector<RenderedFrame>& frames, const std::vector<Pose>& poses,
                               const Intrinsics& k, const std::map<EntityId, std::string>& labels,
                               const autolabel::TrackSet& tracks, double fps, DepthEncoding enc = DepthEncoding::Pfm,
                               double scale = kMillimeter) {
    BundleMeta meta;
    meta.fps = fps;
    meta.frame_count = static_cast<int>(frames.size());
    meta.intrinsics = k;
    meta.depth_encoding = enc;
    meta.depth_scale = scale;
    CameraSequence cam;
    for (const Pose& p : poses) cam.push_back(pose_to_row(p));
    std::error_code ec;
    fs::create_directories(dir / "masks", ec);
    fs::create_directories(dir / "depth", ec);
    if (ec) throw Error(ErrorCode::IoError, dir.string() + ": " + ec.message());
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const int frame = static_cast<int>(f);
        write_atomic(dir / "masks" / frame_name(frame, ".png"), std::span<const std::uint8_t>(encode_idmap_png(frames[f].ids)));
        write_atomic(dir / "depth" / frame_name(frame, depth_extension(enc)),
                     std::span<const std::uint8_t>(encode_depth(frames[f].depth, enc, scale)));
    }
    write_camera_txt(dir / "camera.txt", cam);
    write_atomic(dir / "tracks.csv", format_tracks_csv(tracks));
    write_atomic(dir / "labels.json", dump_json(labels_json(labels)));
    write_atomic(dir / "meta.json", dump_json(meta_json(meta)));
}

/// Reads and cross-checks an ingest directory. Every error names the file
/// (and line, for text files) or the mismatched pair.
inline LabelInputs ingest_label_inputs(const fs::path& dir) {
    LabelInputs in;
    const BundleMeta meta = read_bundle_meta(dir);
    in.fps = meta.fps;
    in.intrinsics = meta.intrinsics;
    in.labels = read_labels(dir / "labels.json");

    const fs::path mask_dir = fs::is_directory(dir / "masks") ? dir / "masks" : dir / "idmap";
    if (!fs::is_directory(mask_dir)) throw Error(ErrorCode::IoError, (dir / "masks").string() + ": missing directory");
    const auto mask_frames = list_frames(mask_dir, ".png");
    const auto depth_frames = list_frames(dir / "depth", depth_extension(meta.depth_encoding));
    const CameraSequence cam = read_camera_txt(dir / "camera.txt");

    const auto check_dense = [&](const std::vector<int>& frames, const fs::path& where) {
        for (std::size_t i = 0; i < frames.size(); ++i) {
            if (frames[i] != static_cast<int>(i)) {
                throw Error(ErrorCode::ConsistencyError, where.string() + ": frame " + std::to_string(i) + " is missing");
            }
        }
    };
    check_dense(mask_frames, mask_dir);
    check_dense(depth_frames, dir / "depth");
    if (mask_frames.empty()) throw Error(ErrorCode::ConsistencyError, mask_dir.string() + ": no frames");
    if (mask_frames.size() != depth_frames.size()) {
        throw Error(ErrorCode::ConsistencyError, mask_dir.string() + " has " + std::to_string(mask_frames.size()) +
                                                     " frames but " + (dir / "depth").string() + " has " +
                                                     std::to_string(depth_frames.size()));
    }
    if (cam.size() != mask_frames.size()) {
        throw Error(ErrorCode::ConsistencyError, (dir / "camera.txt").string() + " has " + std::to_string(cam.size()) +
                                                     " rows but " + mask_dir.string() + " has " +
                                                     std::to_string(mask_frames.size()) + " frames");
    }
    const int F = static_cast<int>(mask_frames.size());
    if (meta.frame_count != F) {
        throw Error(ErrorCode::ConsistencyError, (dir / "meta.json").string() + " says frame_count " +
                                                     std::to_string(meta.frame_count) + " but " + mask_dir.string() +
                                                     " has " + std::to_string(F) + " frames");
    }

    std::set<EntityId> seen;
    for (int f = 0; f < F; ++f) {
        const fs::path mp = mask_dir / frame_name(f, ".png");
        const fs::path dp = dir / "depth" / frame_name(f, depth_extension(meta.depth_encoding));
        const IdMap ids = with_path(mp, [&] { return decode_idmap_png(read_bytes(mp)); });
        const DepthMap depth = with_path(dp, [&] { return decode_depth(read_bytes(dp), meta.depth_encoding, meta.depth_scale); });
        if (ids.width != depth.width || ids.height != depth.height) {
            throw Error(ErrorCode::ConsistencyError, mp.string() + " is " + std::to_string(ids.width) + "x" +
                                                         std::to_string(ids.height) + " but " + dp.string() + " is " +
                                                         std::to_string(depth.width) + "x" + std::to_string(depth.height));
        }
        if (depth.width != meta.intrinsics.width || depth.height != meta.intrinsics.height) {
            throw Error(ErrorCode::ConsistencyError, dp.string() + " is " + std::to_string(depth.width) + "x" +
                                                         std::to_string(depth.height) + " but meta.json intrinsics are " +
                                                         std::to_string(meta.intrinsics.width) + "x" +
                                                         std::to_string(meta.intrinsics.height));
        }
        autolabel::FrameObservation obs{f, autolabel::masks_from_ids(ids), depth};
        for (const auto& [id, m] : obs.masks) {
            if (!in.labels.count(id)) {
                throw Error(ErrorCode::ConsistencyError, mp.string() + ": id " + std::to_string(id) +
                                                             " has no entry in labels.json");
            }
            seen.insert(id);
        }
        in.observations.push_back(std::move(obs));
        in.poses.push_back(row_to_pose(cam[f]));
    }

    const fs::path tp = dir / "tracks.csv";
    in.tracks = with_path(tp, [&] { return parse_tracks_csv(read_text(tp)); });
    for (const auto& [id, tracks] : in.tracks.tracks) {
        if (!in.labels.count(id)) {
            throw Error(ErrorCode::ConsistencyError, tp.string() + ": entity " + std::to_string(id) + " has no entry in labels.json");
        }
        for (const auto& t : tracks) {
            if (!t.points.empty() && t.points.rbegin()->first >= F) {
                throw Error(ErrorCode::ConsistencyError, tp.string() + ": entity " + std::to_string(id) + ", track " +
                                                             std::to_string(t.track_id) + " references frame " +
                                                             std::to_string(t.points.rbegin()->first) + " of " + std::to_string(F));
            }
        }
    }
    // Propagation starts from the frame with the largest mask; the tracks must be
    // observed there.
    for (EntityId id : seen) {
        std::vector<std::size_t> areas(F, 0);
        for (int f = 0; f < F; ++f) {
            const auto it = in.observations[f].masks.find(id);
            if (it != in.observations[f].masks.end()) areas[f] = autolabel::mask_area(it->second);
        }
        const int anchor = autolabel::select_optimal_frame(areas);
        const auto it = in.tracks.tracks.find(id);
        bool anchored = false;
        if (it != in.tracks.tracks.end()) {
            for (const auto& t : it->second) anchored = anchored || t.points.count(anchor);
        }
        if (!anchored) {
            throw Error(ErrorCode::ConsistencyError, tp.string() + ": entity " + std::to_string(id) +
                                                         " has no track row at its anchor frame " + std::to_string(anchor));
        }
    }
    return in;
}

} // namespace cineforge::io
