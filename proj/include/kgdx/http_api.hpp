#pragma once

#include <string>

namespace httplib {
class Server;
}

namespace kgdx {

class SessionManager;

struct HttpOptions {
  std::string api_token;  // empty: no bearer check
  std::string cors_origin = "*";
};

/// Registers the session routes on `server`:
///   POST /sessions
///   POST /sessions/{id}/messages
///   GET  /sessions/{id}
///   POST /sessions/{id}/ratings
///   GET  /sessions/{id}/transcript
/// Every response body is JSON except the transcript, which is one JSONL line.
void install_routes(httplib::Server& server, SessionManager& sessions, const HttpOptions& options);

}  // namespace kgdx
