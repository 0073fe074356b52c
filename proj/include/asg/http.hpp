#ifndef ASG_HTTP_HPP
#define ASG_HTTP_HPP

#include "asg/service.hpp"

#include <httplib.h>

#include <string>

namespace asg {

/// Routes the session manager onto an httplib server. `cors_origin` empty
/// disables the CORS headers.
inline void bind_routes(httplib::Server& server, SessionManager& mgr, const std::string& cors_origin = {}) {
    auto send = [cors_origin](httplib::Response& res, const HttpResponse& r) {
        res.status = r.status;
        if (!cors_origin.empty()) res.set_header("Access-Control-Allow-Origin", cors_origin);
        res.set_content(r.body.dump(), "application/json");
    };
    auto parse_body = [](const httplib::Request& req) -> std::optional<json> {
        if (req.body.empty()) return json::object();
        try {
            json j = json::parse(req.body);
            if (!j.is_object()) return std::nullopt;
            return j;
        } catch (const json::exception&) {
            return std::nullopt;
        }
    };
    const HttpResponse bad_json{400, {{"error", "ConfigError"}, {"message", "body must be a JSON object"}, {"detail", ""}}};

    server.Post("/sessions", [&mgr, send, parse_body, bad_json](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        send(res, body ? mgr.create(*body) : bad_json);
    });
    server.Post(R"(/sessions/([^/]+)/feedback)",
                [&mgr, send, parse_body, bad_json](const httplib::Request& req, httplib::Response& res) {
                    auto body = parse_body(req);
                    send(res, body ? mgr.feedback(req.matches[1], *body) : bad_json);
                });
    server.Get(R"(/sessions/([^/]+))",
               [&mgr, send](const httplib::Request& req, httplib::Response& res) { send(res, mgr.get(req.matches[1])); });
    server.Get("/models", [&mgr, send](const httplib::Request&, httplib::Response& res) { send(res, mgr.models()); });
    server.Get("/healthz", [&mgr, send](const httplib::Request&, httplib::Response& res) { send(res, mgr.health()); });
    if (!cors_origin.empty()) {
        server.Options(R"(/.*)", [cors_origin](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", cors_origin);
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });
    }
}

} // namespace asg

#endif
