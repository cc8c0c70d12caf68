// SPDX-License-Identifier: Apache-2.0

#pragma once

// HTTP/1.1 front end for SceneService (cpp-httplib).
//
//   POST /scenes                              create, 201 {id, revision: 0}
//   GET  /scenes                              list ids and revisions
//   GET  /scenes/{id}                         document + revision
//   PUT  /scenes/{id}                         replace (If-Match)
//   POST /scenes/{id}/keyframes               set/remove one keyframe (If-Match)
//   GET  /scenes/{id}/preview/{frame}         ?kind=depth|id&width=&height=
//   GET  /scenes/{id}/camera.txt              F x 12 export
//   POST /scenes/{id}/validate                violations list
//
// Every response carries permissive CORS headers so a browser editor served
// from another origin can call the API.

#include <functional>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>

#include "cineforge/service/scene_service.hpp"

namespace cineforge::service {

class HttpServer {
public:
    explicit HttpServer(SceneService& svc) : svc_(svc) { routes(); }

    /// Binds without serving; returns the bound port (useful with port 0).
    int bind(const std::string& host, int port) {
        if (port == 0) return server_.bind_to_any_port(host);
        return server_.bind_to_port(host, port) ? port : -1;
    }

    /// Blocks until stop() is called.
    bool serve() { return server_.listen_after_bind(); }

    void stop() { server_.stop(); }
    void wait_until_ready() const { server_.wait_until_ready(); }

    void set_logger(std::function<void(const httplib::Request&, const httplib::Response&)> fn) {
        server_.set_logger(std::move(fn));
    }

private:
    static std::optional<std::string> header(const httplib::Request& req, const char* name) {
        if (!req.has_header(name)) return std::nullopt;
        return req.get_header_value(name);
    }

    static std::optional<std::string> param(const httplib::Request& req, const char* name) {
        if (!req.has_param(name)) return std::nullopt;
        return req.get_param_value(name);
    }

    static void send(httplib::Response& res, const Response& r) {
        res.status = r.status;
        for (const auto& [k, v] : r.headers) res.set_header(k, v);
        res.set_content(r.body, r.content_type);
    }

    void routes() {
        server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                     {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"},
                                     {"Access-Control-Allow-Headers", "Content-Type, If-Match"},
                                     {"Access-Control-Expose-Headers", "ETag, X-Revision, X-Depth-Scale, Location"}});
        server_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server_.Post("/scenes", [this](const httplib::Request& req, httplib::Response& res) { send(res, svc_.create(req.body)); });
        server_.Get("/scenes", [this](const httplib::Request&, httplib::Response& res) { send(res, svc_.list()); });
        server_.Get(R"(/scenes/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            send(res, svc_.get(req.matches[1]));
        });
        server_.Put(R"(/scenes/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            send(res, svc_.put(req.matches[1], header(req, "If-Match"), req.body));
        });
        server_.Post(R"(/scenes/([^/]+)/keyframes)", [this](const httplib::Request& req, httplib::Response& res) {
            send(res, svc_.post_keyframe(req.matches[1], header(req, "If-Match"), req.body));
        });
        server_.Get(R"(/scenes/([^/]+)/preview/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            send(res, svc_.preview(req.matches[1], req.matches[2], param(req, "kind").value_or("depth"), param(req, "width"),
                                   param(req, "height"), param(req, "scale")));
        });
        server_.Get(R"(/scenes/([^/]+)/camera\.txt)", [this](const httplib::Request& req, httplib::Response& res) {
            send(res, svc_.camera_txt(req.matches[1]));
        });
        server_.Post(R"(/scenes/([^/]+)/validate)", [this](const httplib::Request& req, httplib::Response& res) {
            send(res, svc_.validate_scene(req.matches[1], req.body));
        });
        server_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (!res.body.empty()) return;
            const std::string code = res.status == 404 ? "NotFound" : "HttpError";
            res.set_content(json{{"error", code}, {"message", "HTTP " + std::to_string(res.status)}}.dump(2) + "\n",
                            "application/json");
        });
        server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string msg = "internal error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                msg = e.what();
            } catch (...) {
            }
            res.status = 500;
            res.set_content(json{{"error", "Internal"}, {"message", msg}}.dump(2) + "\n", "application/json");
        });
    }

    SceneService& svc_;
    httplib::Server server_;
};

/// Parses "host:port"; a bare port binds to 127.0.0.1.
inline std::pair<std::string, int> parse_listen(const std::string& s) {
    const auto colon = s.rfind(':');
    const std::string host = colon == std::string::npos ? "127.0.0.1" : s.substr(0, colon);
    const auto port = io::parse_int(colon == std::string::npos ? s : s.substr(colon + 1));
    if (!port || *port < 0 || *port > 65535 || host.empty()) {
        throw Error(ErrorCode::InvalidArgument, "--listen expects host:port, got \"" + s + "\"");
    }
    return {host, static_cast<int>(*port)};
}

} // namespace cineforge::service
