// SPDX-License-Identifier: Apache-2.0

#pragma once

// Editing sessions behind the HTTP API, independent of the transport.
//
// Each scene lives in a session holding an immutable snapshot (document +
// revision). Readers grab the current snapshot and never block writers for
// long; writers are serialized per scene, check If-Match against the current
// revision, validate, persist, and only then publish the new snapshot. A
// preview tagged with revision r is always rendered from the snapshot at r.

#include <atomic>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "cineforge/error.hpp"
#include "cineforge/io/camera_txt.hpp"
#include "cineforge/io/file.hpp"
#include "cineforge/io/raster_codec.hpp"
#include "cineforge/io/scene_json.hpp"
#include "cineforge/render.hpp"
#include "cineforge/scene.hpp"

namespace cineforge::service {

using nlohmann::json;
namespace fs = std::filesystem;

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::map<std::string, std::string> headers;
};

struct ServiceOptions {
    /// Scenes persist as <data_dir>/<id>.json; empty keeps everything in memory.
    fs::path data_dir;
    std::size_t preview_cache_entries = 256;
    int max_preview_side = 4096;
};

struct Snapshot {
    std::uint64_t revision = 0;
    io::SceneDocument doc;
};

/// Small thread-safe LRU of encoded previews.
class PreviewCache {
public:
    explicit PreviewCache(std::size_t capacity) : capacity_(capacity) {}

    std::shared_ptr<const std::string> get(const std::string& key) {
        std::lock_guard lock(mu_);
        const auto it = index_.find(key);
        if (it == index_.end()) return nullptr;
        order_.splice(order_.begin(), order_, it->second);
        ++hits_;
        return it->second->second;
    }

    void put(const std::string& key, std::shared_ptr<const std::string> value) {
        if (capacity_ == 0) return;
        std::lock_guard lock(mu_);
        const auto it = index_.find(key);
        if (it != index_.end()) {
            order_.splice(order_.begin(), order_, it->second);
            return;
        }
        order_.emplace_front(key, std::move(value));
        index_[key] = order_.begin();
        while (order_.size() > capacity_) {
            index_.erase(order_.back().first);
            order_.pop_back();
        }
    }

    std::size_t hits() const {
        std::lock_guard lock(mu_);
        return hits_;
    }

private:
    using Entry = std::pair<std::string, std::shared_ptr<const std::string>>;
    std::size_t capacity_;
    mutable std::mutex mu_;
    std::list<Entry> order_;
    std::unordered_map<std::string, std::list<Entry>::iterator> index_;
    std::size_t hits_ = 0;
};

namespace detail {

inline Response json_response(int status, const json& body) {
    return {status, "application/json", body.dump(2) + "\n", {}};
}

inline Response error_response(int status, std::string_view code, const std::string& message, json extra = json::object()) {
    extra["error"] = code;
    extra["message"] = message;
    return json_response(status, extra);
}

inline json violation_json(const Violation& v) {
    json j = {{"kind", to_string(v.kind)}, {"subject", v.subject}, {"message", v.message}};
    j["frame"] = v.frame >= 0 ? json(v.frame) : json(nullptr);
    return j;
}

inline json violations_json(const std::vector<Violation>& vs) {
    json a = json::array();
    for (const auto& v : vs) a.push_back(violation_json(v));
    return a;
}

/// Accepts 3, "3" and W/"3".
inline std::optional<std::uint64_t> parse_if_match(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    if (s.substr(0, 2) == "W/") s.remove_prefix(2);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    const auto v = io::parse_int(s);
    if (!v || *v < 0) return std::nullopt;
    return static_cast<std::uint64_t>(*v);
}

inline void set_revision_headers(Response& r, std::uint64_t rev) {
    r.headers["X-Revision"] = std::to_string(rev);
    r.headers["ETag"] = "\"" + std::to_string(rev) + "\"";
}

/// A default scene for an empty POST /scenes: 16 frames, 640x480, identity camera.
inline io::SceneDocument default_document() {
    Scene s;
    s.frame_count = 16;
    s.fps = 15.0;
    s.camera.intrinsics = Intrinsics::from_fov(640, 480, 60.0);
    s.camera.keyframes[0] = Pose::identity();
    return io::to_document(std::move(s));
}

/// Body parse failures are 400; well-formed JSON that is not a valid scene is 422.
struct BodyError {
    Response response;
};

inline json parse_body(const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw BodyError{error_response(400, "ParseError", "request body is not JSON: " + std::string(e.what()))};
    }
}

inline io::SceneDocument document_from_body(const json& j) {
    try {
        return io::from_json(j);
    } catch (const Error& e) {
        throw BodyError{error_response(422, to_string(e.code()), e.message())};
    }
}

inline std::optional<Response> invalid(const Scene& scene) {
    const auto violations = validate(scene);
    if (violations.empty()) return std::nullopt;
    return error_response(422, "ValidationFailed", "scene violates " + std::to_string(violations.size()) + " invariant(s)",
                          {{"violations", violations_json(violations)}});
}

} // namespace detail

class SceneService {
public:
    explicit SceneService(ServiceOptions opts = {}) : opts_(std::move(opts)), cache_(opts_.preview_cache_entries) {
        if (!opts_.data_dir.empty()) load_all();
    }

    // -- endpoints ----------------------------------------------------------

    /// POST /scenes. An empty body creates a default scene.
    Response create(const std::string& body) {
        io::SceneDocument doc;
        try {
            doc = body.find_first_not_of(" \t\r\n") == std::string::npos ? detail::default_document()
                                                                           : detail::document_from_body(detail::parse_body(body));
        } catch (const detail::BodyError& e) {
            return e.response;
        }
        if (auto bad = detail::invalid(doc.scene)) return *bad;
        auto session = std::make_shared<Session>();
        auto snap = std::make_shared<const Snapshot>(Snapshot{0, std::move(doc)});
        std::string id;
        {
            std::unique_lock lock(sessions_mu_);
            do id = new_id(); while (sessions_.count(id));
            session->id = id;
            session->snapshot = snap;
            sessions_[id] = session;
        }
        try {
            persist(id, *snap);
        } catch (const Error& e) {
            std::unique_lock lock(sessions_mu_);
            sessions_.erase(id);
            return detail::error_response(500, to_string(e.code()), e.message());
        }
        Response r = detail::json_response(201, {{"id", id}, {"revision", 0}, {"scene", io::to_json(snap->doc)}});
        r.headers["Location"] = "/scenes/" + id;
        detail::set_revision_headers(r, 0);
        return r;
    }

    /// GET /scenes/{id}
    Response get(const std::string& id) const {
        const auto snap = snapshot(id);
        if (!snap) return not_found(id);
        Response r = detail::json_response(200, {{"id", id}, {"revision", snap->revision}, {"scene", io::to_json(snap->doc)}});
        detail::set_revision_headers(r, snap->revision);
        return r;
    }

    /// GET /scenes
    Response list() const {
        json a = json::array();
        std::shared_lock lock(sessions_mu_);
        for (const auto& [id, s] : sessions_) a.push_back({{"id", id}, {"revision", s->current()->revision}});
        return detail::json_response(200, {{"scenes", a}});
    }

    /// PUT /scenes/{id}: full replacement.
    Response put(const std::string& id, const std::optional<std::string>& if_match, const std::string& body) {
        return mutate(id, if_match, [&](const Snapshot&) {
            io::SceneDocument doc = detail::document_from_body(detail::parse_body(body));
            return doc;
        });
    }

    /// POST /scenes/{id}/keyframes
    ///   {"target": "camera" | <entity id>, "frame": n, "value": {...} | null, "label": "car"}
    /// A missing or null value removes the keyframe. For an unknown entity id, a
    /// label creates the entity with this first keyframe.
    Response post_keyframe(const std::string& id, const std::optional<std::string>& if_match, const std::string& body) {
        return mutate(id, if_match, [&](const Snapshot& cur) { return apply_keyframe(cur.doc, detail::parse_body(body)); });
    }

    /// GET /scenes/{id}/preview/{frame}?kind=depth|id&width=&height=
    Response preview(const std::string& id, const std::string& frame_str, const std::string& kind,
                     const std::optional<std::string>& width_str, const std::optional<std::string>& height_str,
                     const std::optional<std::string>& scale_str = std::nullopt) {
        const auto snap = snapshot(id);
        if (!snap) return not_found(id);
        const Scene& scene = snap->doc.scene;
        const auto frame = io::parse_int(frame_str);
        if (!frame || *frame < 0 || *frame >= scene.frame_count) {
            return detail::error_response(400, "FrameOutOfRange", "frame \"" + frame_str + "\" is not in [0, " +
                                                                      std::to_string(scene.frame_count) + ")");
        }
        if (kind != "depth" && kind != "id") {
            return detail::error_response(400, "InvalidArgument", "kind must be depth or id, got \"" + kind + "\"");
        }
        auto side = [&](const std::optional<std::string>& s, int fallback) -> std::optional<int> {
            if (!s || s->empty()) return fallback;
            const auto v = io::parse_int(*s);
            if (!v || *v < 1 || *v > opts_.max_preview_side) return std::nullopt;
            return static_cast<int>(*v);
        };
        const auto w = side(width_str, scene.camera.intrinsics.width);
        const auto h = side(height_str, scene.camera.intrinsics.height);
        if (!w || !h) {
            return detail::error_response(400, "InvalidArgument",
                                          "width and height must be integers in [1, " + std::to_string(opts_.max_preview_side) + "]");
        }
        double scale = io::kMillimeter;
        if (scale_str && !scale_str->empty()) {
            const auto v = io::parse_double(*scale_str);
            if (!v || !(*v > 0.0) || !std::isfinite(*v)) return detail::error_response(400, "InvalidArgument", "scale must be positive");
            scale = *v;
        }
        const std::string key = id + "|" + std::to_string(snap->revision) + "|" + std::to_string(*frame) + "|" + kind +
                                "|" + std::to_string(*w) + "x" + std::to_string(*h) + "|" + io::format_double(scale);
        auto bytes = cache_.get(key);
        if (!bytes) {
            try {
                RenderSettings rs;
                rs.width = *w;
                rs.height = *h;
                const RenderedFrame f = render_frame(resolve(scene, static_cast<int>(*frame)), scene.camera.intrinsics, rs);
                const io::Bytes png = kind == "depth" ? io::encode_depth_png16(f.depth, scale) : io::encode_idmap_png(f.ids);
                bytes = std::make_shared<const std::string>(png.begin(), png.end());
            } catch (const Error& e) {
                return detail::error_response(422, to_string(e.code()), e.message());
            }
            cache_.put(key, bytes);
        }
        Response r{200, "image/png", *bytes, {}};
        detail::set_revision_headers(r, snap->revision);
        if (kind == "depth") r.headers["X-Depth-Scale"] = io::format_double(scale);
        return r;
    }

    /// GET /scenes/{id}/camera.txt
    Response camera_txt(const std::string& id) const {
        const auto snap = snapshot(id);
        if (!snap) return not_found(id);
        Response r{200, "text/plain; charset=utf-8", io::format_camera_txt(export_camera_rt(snap->doc.scene)), {}};
        detail::set_revision_headers(r, snap->revision);
        return r;
    }

    /// POST /scenes/{id}/validate: violations of the current revision. A
    /// non-empty body is validated instead (without being stored).
    Response validate_scene(const std::string& id, const std::string& body = {}) const {
        const auto snap = snapshot(id);
        if (!snap) return not_found(id);
        Scene scene = snap->doc.scene;
        if (body.find_first_not_of(" \t\r\n") != std::string::npos) {
            try {
                scene = detail::document_from_body(detail::parse_body(body)).scene;
            } catch (const detail::BodyError& e) {
                return e.response;
            }
        }
        const auto rep = validate_report(scene);
        Response r = detail::json_response(200, {{"valid", rep.errors.empty()},
                                                 {"revision", snap->revision},
                                                 {"violations", detail::violations_json(rep.errors)},
                                                 {"warnings", detail::violations_json(rep.warnings)}});
        detail::set_revision_headers(r, snap->revision);
        return r;
    }

    std::shared_ptr<const Snapshot> snapshot(const std::string& id) const {
        std::shared_lock lock(sessions_mu_);
        const auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second->current();
    }

    std::size_t cache_hits() const { return cache_.hits(); }

private:
    struct Session {
        std::string id;
        std::mutex write_mu;
        mutable std::mutex snap_mu;
        std::shared_ptr<const Snapshot> snapshot;

        std::shared_ptr<const Snapshot> current() const {
            std::lock_guard lock(snap_mu);
            return snapshot;
        }
        void publish(std::shared_ptr<const Snapshot> s) {
            std::lock_guard lock(snap_mu);
            snapshot = std::move(s);
        }
    };

    static Response not_found(const std::string& id) {
        return detail::error_response(404, "NotFound", "no scene with id \"" + id + "\"");
    }

    std::shared_ptr<Session> session(const std::string& id) const {
        std::shared_lock lock(sessions_mu_);
        const auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    template <typename Fn>
    Response mutate(const std::string& id, const std::optional<std::string>& if_match, Fn&& fn) {
        const auto s = session(id);
        if (!s) return not_found(id);
        if (!if_match) return detail::error_response(428, "PreconditionRequired", "mutations require an If-Match revision");
        const auto expected = detail::parse_if_match(*if_match);
        if (!expected) return detail::error_response(400, "InvalidArgument", "If-Match must be a revision number");

        std::lock_guard write(s->write_mu);
        const auto cur = s->current();
        if (*expected != cur->revision) {
            Response r = detail::error_response(409, "RevisionConflict",
                                                "If-Match " + std::to_string(*expected) + " but the scene is at revision " +
                                                    std::to_string(cur->revision),
                                                {{"revision", cur->revision}});
            detail::set_revision_headers(r, cur->revision);
            return r;
        }
        io::SceneDocument next;
        try {
            next = fn(*cur);
        } catch (const detail::BodyError& e) {
            return e.response;
        } catch (const Error& e) {
            return detail::error_response(422, to_string(e.code()), e.message());
        }
        if (auto bad = detail::invalid(next.scene)) return *bad;
        auto snap = std::make_shared<const Snapshot>(Snapshot{cur->revision + 1, std::move(next)});
        try {
            persist(id, *snap);
        } catch (const Error& e) {
            return detail::error_response(500, to_string(e.code()), e.message());
        }
        s->publish(snap);
        Response r = detail::json_response(200, {{"id", id}, {"revision", snap->revision}, {"scene", io::to_json(snap->doc)}});
        detail::set_revision_headers(r, snap->revision);
        return r;
    }

    static io::SceneDocument apply_keyframe(const io::SceneDocument& cur, const json& body) {
        auto fail = [](const std::string& msg) -> io::SceneDocument {
            throw detail::BodyError{detail::error_response(422, "ParseError", msg)};
        };
        if (!body.is_object()) return fail("body must be an object");
        const auto tit = body.find("target");
        if (tit == body.end()) return fail("missing field \"target\"");
        Target target;
        if (tit->is_string() && tit->get<std::string>() == "camera") {
            target = CameraTarget{};
        } else if (tit->is_number_integer()) {
            target = tit->get<int>();
        } else if (tit->is_object() && tit->contains("entity") && (*tit)["entity"].is_number_integer()) {
            target = (*tit)["entity"].get<int>();
        } else {
            return fail("target must be \"camera\" or an entity id");
        }
        const auto fit = body.find("frame");
        if (fit == body.end() || !fit->is_number_integer()) return fail("frame must be an integer");
        const int frame = fit->get<int>();

        io::SceneDocument doc = cur;
        const auto lit = body.find("label");
        if (lit != body.end() && !lit->is_null() && !lit->is_string()) return fail("label must be a string");
        const auto vit = body.find("value");
        const bool remove = vit == body.end() || vit->is_null();
        if (const EntityId* eid = std::get_if<EntityId>(&target); eid && lit != body.end() && lit->is_string()) {
            if (Entity* e = doc.scene.find(*eid)) {
                e->label = lit->get<std::string>();
            } else if (!remove) {
                doc.scene.entities.push_back({*eid, lit->get<std::string>(), {}});
            }
        }
        if (remove) {
            doc.scene = remove_keyframe(std::move(doc.scene), target, frame);
            return doc;
        }
        const json& v = *vit;
        if (!v.is_object()) return fail("value must be an object");
        try {
            if (std::holds_alternative<CameraTarget>(target)) {
                const Pose p{io::detail::get_rotation(io::detail::member(v, "rotation", "value"), "value.rotation"),
                             io::detail::get_vec3(io::detail::member(v, "translation", "value"), "value.translation")};
                doc.scene = set_keyframe(std::move(doc.scene), target, frame, p);
            } else {
                const Box3 b{io::detail::get_vec3(io::detail::member(v, "center", "value"), "value.center"),
                             io::detail::get_vec3(io::detail::member(v, "half_extents", "value"), "value.half_extents"),
                             io::detail::get_rotation(io::detail::member(v, "rotation", "value"), "value.rotation")};
                doc.scene = set_keyframe(std::move(doc.scene), target, frame, b);
            }
        } catch (const Error& e) {
            throw detail::BodyError{detail::error_response(422, to_string(e.code()), e.message())};
        }
        return doc;
    }

    std::string new_id() {
        std::uniform_int_distribution<std::uint64_t> d;
        const std::uint64_t v = d(rng_);
        static constexpr char hex[] = "0123456789abcdef";
        std::string s(12, '0');
        for (int i = 0; i < 12; ++i) s[i] = hex[(v >> (4 * i)) & 0xf];
        return s;
    }

    void persist(const std::string& id, const Snapshot& snap) const {
        if (opts_.data_dir.empty()) return;
        const json j = {{"revision", snap.revision}, {"scene", io::to_json(snap.doc)}};
        io::write_atomic(opts_.data_dir / (id + ".json"), j.dump(2) + "\n");
    }

    void load_all() {
        std::error_code ec;
        fs::create_directories(opts_.data_dir, ec);
        if (ec) throw Error(ErrorCode::IoError, opts_.data_dir.string() + ": " + ec.message());
        for (const auto& entry : fs::directory_iterator(opts_.data_dir)) {
            const fs::path p = entry.path();
            if (p.extension() != ".json" || p.filename().string().front() == '.') continue;
            json j;
            try {
                j = json::parse(io::read_text(p));
            } catch (const json::parse_error& e) {
                throw Error(ErrorCode::ParseError, p.string() + ": at byte " + std::to_string(e.byte));
            }
            if (!j.is_object() || !j.contains("revision") || !j["revision"].is_number_unsigned() || !j.contains("scene")) {
                throw Error(ErrorCode::ParseError, p.string() + ": expected {revision, scene}");
            }
            io::SceneDocument doc;
            try {
                doc = io::from_json(j["scene"]);
            } catch (const Error& e) {
                throw Error(e.code(), p.string() + ": " + e.message());
            }
            auto s = std::make_shared<Session>();
            s->id = p.stem().string();
            s->snapshot = std::make_shared<const Snapshot>(Snapshot{j["revision"].get<std::uint64_t>(), std::move(doc)});
            sessions_[s->id] = s;
        }
    }

    ServiceOptions opts_;
    mutable std::shared_mutex sessions_mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    PreviewCache cache_;
    std::mt19937_64 rng_{std::random_device{}()};
};

} // namespace cineforge::service
