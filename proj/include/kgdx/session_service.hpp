#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgdx/backends.hpp"
#include "kgdx/event_log.hpp"
#include "kgdx/knowledge_graph.hpp"
#include "kgdx/profile.hpp"
#include "kgdx/session.hpp"
#include "kgdx/transcript.hpp"

namespace kgdx {

/// Error with an HTTP status and a short machine-readable code.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message, bool retry = false)
      : std::runtime_error(message), status_(status), code_(std::move(code)), retry_(retry) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }
  bool retry() const { return retry_; }
  nlohmann::json to_json() const;

 private:
  int status_;
  std::string code_;
  bool retry_;
};

struct ServiceConfig {
  std::filesystem::path data_dir;
  std::shared_ptr<const KnowledgeGraph> graph;
  std::vector<PatientProfile> profiles;  // available for replay-mode sessions
  ModelEndpoints endpoints;
  std::size_t max_active_sessions = 0;  // 0: unlimited
  /// Replaces make_components, e.g. to inject stub backends.
  std::function<Components(const BackendChoice&, const VerifierConfig&)> component_factory;
  /// Timestamp source; defaults to the UTC wall clock.
  std::function<std::string()> clock;
};

/// Live sessions backed by per-session event logs. Construction replays every
/// log found in data_dir. Calls on different sessions run in parallel; calls
/// on one session are serialized, and a second concurrent step on the same
/// session is refused with 409.
class SessionManager {
 public:
  explicit SessionManager(ServiceConfig config);
  ~SessionManager();

  nlohmann::json create(const nlohmann::json& request);
  nlohmann::json post_message(const std::string& id, const nlohmann::json& body);
  nlohmann::json get(const std::string& id) const;
  nlohmann::json rate(const std::string& id, const nlohmann::json& body);
  /// The transcript document, available once the session is terminal.
  std::string transcript(const std::string& id) const;

  SessionState state(const std::string& id) const;
  std::vector<std::string> ids() const;
  /// Messages for sessions dropped or repaired while replaying logs.
  const std::vector<std::string>& recovery_notes() const { return recovery_notes_; }

 private:
  struct Live;
  std::shared_ptr<Live> find(const std::string& id) const;
  void load(const std::string& id);
  Components components_for(const Live& live) const;
  nlohmann::json step_payload(const Live& live) const;

  ServiceConfig config_;
  EventLog log_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Live>> sessions_;
  std::vector<std::string> recovery_notes_;
};

}  // namespace kgdx
