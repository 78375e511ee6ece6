#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace kgdx {

class ModelError : public std::runtime_error {
 public:
  enum class Kind { transport, malformed, coverage, range };
  ModelError(Kind kind, const std::string& message);
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(ModelError::Kind kind);

/// Single-prompt text completion.
class ChatModel {
 public:
  virtual ~ChatModel() = default;
  virtual std::string complete(std::string_view prompt) = 0;
};

/// JSON request/response endpoint (used by the external disease scorer).
class JsonEndpoint {
 public:
  virtual ~JsonEndpoint() = default;
  virtual nlohmann::json post(const nlohmann::json& request) = 0;
};

struct EndpointConfig {
  std::string url;      // e.g. "http://localhost:8000/v1"
  std::string api_key;  // sent as a bearer token when non-empty
  std::string model = "gpt-4o-mini";
  double temperature = 0.0;
  int timeout_ms = 30000;
  int retries = 2;  // extra attempts after a transport failure or 5xx

  bool configured() const { return !url.empty(); }

  /// Reads KGDX_MODEL_ENDPOINT, KGDX_MODEL_KEY, KGDX_MODEL_NAME and
  /// KGDX_MODEL_TIMEOUT_MS.
  static EndpointConfig from_env();
};

/// OpenAI-compatible chat completions client: POST {url}/chat/completions.
/// Every call opens its own connection.
class HttpChatModel : public ChatModel {
 public:
  explicit HttpChatModel(EndpointConfig config) : config_(std::move(config)) {}
  std::string complete(std::string_view prompt) override;

 private:
  EndpointConfig config_;
};

/// POSTs the request document to `url` verbatim.
class HttpJsonEndpoint : public JsonEndpoint {
 public:
  explicit HttpJsonEndpoint(EndpointConfig config) : config_(std::move(config)) {}
  nlohmann::json post(const nlohmann::json& request) override;

 private:
  EndpointConfig config_;
};

/// Splits "scheme://host[:port][/path]" into ("scheme://host[:port]", "/path").
std::pair<std::string, std::string> split_url(std::string_view url);

}  // namespace kgdx
