#include "kgdx/http_api.hpp"

#include "httplib.h"
#include "json.hpp"
#include "kgdx/session_service.hpp"

namespace kgdx {
namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const ServiceError& e) {
  send_json(res, e.status(), e.to_json());
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ServiceError(400, "invalid_json", e.what());
  }
}

}  // namespace

void install_routes(httplib::Server& server, SessionManager& sessions, const HttpOptions& options) {
  const std::string origin = options.cors_origin;
  const std::string token = options.api_token;

  server.set_pre_routing_handler([origin, token](const httplib::Request& req, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Authorization");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    if (req.method == "OPTIONS") {
      res.status = 204;
      return httplib::Server::HandlerResponse::Handled;
    }
    if (!token.empty() && req.get_header_value("Authorization") != "Bearer " + token) {
      send_error(res, ServiceError(401, "unauthorized", "missing or invalid bearer token"));
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  // Wraps a handler so every failure becomes a JSON error body.
  auto guarded = [](auto handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const ServiceError& e) {
        send_error(res, e);
      } catch (const std::exception& e) {
        send_error(res, ServiceError(500, "internal", e.what()));
      }
    };
  };

  server.Post("/sessions", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 201, sessions.create(parse_body(req)));
  }));
  server.Post(R"(/sessions/([A-Za-z0-9_-]+)/messages)",
              guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, sessions.post_message(req.matches[1], parse_body(req)));
              }));
  server.Post(R"(/sessions/([A-Za-z0-9_-]+)/ratings)",
              guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, sessions.rate(req.matches[1], parse_body(req)));
              }));
  server.Get(R"(/sessions/([A-Za-z0-9_-]+))",
             guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, sessions.get(req.matches[1]));
             }));
  server.Get(R"(/sessions/([A-Za-z0-9_-]+)/transcript)",
             guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
               res.status = 200;
               res.set_content(sessions.transcript(req.matches[1]), "application/x-ndjson");
             }));
}

}  // namespace kgdx
