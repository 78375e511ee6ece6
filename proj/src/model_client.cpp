#include "kgdx/model_client.hpp"

#include <cstdlib>

#include "httplib.h"

namespace kgdx {
namespace {

using nlohmann::json;

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::string post_with_retries(const EndpointConfig& config, const std::string& path_suffix,
                              const std::string& body) {
  if (!config.configured()) throw ModelError(ModelError::Kind::transport, "no model endpoint configured");
  auto [base, path] = split_url(config.url);
  path += path_suffix;
  if (path.empty()) path = "/";

  std::string last_error;
  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    httplib::Client client(base);
    const auto seconds = config.timeout_ms / 1000;
    const auto micros = (config.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    httplib::Headers headers;
    if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = "request to " + base + path + " failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "endpoint returned HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw ModelError(ModelError::Kind::transport,
                       "endpoint returned HTTP " + std::to_string(res->status));
    }
    return res->body;
  }
  throw ModelError(ModelError::Kind::transport, last_error);
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ModelError(ModelError::Kind::malformed, std::string("response is not JSON: ") + e.what());
  }
}

}  // namespace

ModelError::ModelError(Kind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

std::string_view to_string(ModelError::Kind kind) {
  switch (kind) {
    case ModelError::Kind::transport:
      return "transport";
    case ModelError::Kind::malformed:
      return "malformed";
    case ModelError::Kind::coverage:
      return "coverage";
    case ModelError::Kind::range:
      return "range";
  }
  return "unknown";
}

EndpointConfig EndpointConfig::from_env() {
  EndpointConfig c;
  c.url = env_or("KGDX_MODEL_ENDPOINT", "");
  c.api_key = env_or("KGDX_MODEL_KEY", "");
  c.model = env_or("KGDX_MODEL_NAME", c.model);
  c.timeout_ms = std::atoi(env_or("KGDX_MODEL_TIMEOUT_MS", std::to_string(c.timeout_ms)).c_str());
  if (c.timeout_ms <= 0) c.timeout_ms = 30000;
  return c;
}

std::pair<std::string, std::string> split_url(std::string_view url) {
  auto scheme = url.find("://");
  auto host_start = scheme == std::string_view::npos ? 0 : scheme + 3;
  auto slash = url.find('/', host_start);
  if (slash == std::string_view::npos) return {std::string(url), ""};
  std::string path(url.substr(slash));
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {std::string(url.substr(0, slash)), path};
}

std::string HttpChatModel::complete(std::string_view prompt) {
  json request = {{"model", config_.model},
                  {"temperature", config_.temperature},
                  {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
  auto doc = parse_body(post_with_retries(config_, "/chat/completions", request.dump()));
  try {
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ModelError(ModelError::Kind::malformed,
                     std::string("unexpected chat completion shape: ") + e.what());
  }
}

json HttpJsonEndpoint::post(const json& request) {
  return parse_body(post_with_retries(config_, "", request.dump()));
}

}  // namespace kgdx
