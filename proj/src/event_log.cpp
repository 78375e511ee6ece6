#include "kgdx/event_log.hpp"

#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kgdx {
namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

EventLog::EventLog(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path EventLog::path_for(const std::string& session_id) const {
  return dir_ / (session_id + ".jsonl");
}

void EventLog::append(const std::string& session_id, const std::vector<nlohmann::json>& events) {
  std::string buffer;
  for (const auto& e : events) buffer += e.dump() + "\n";
  const auto path = path_for(session_id);
  FILE* f = std::fopen(path.c_str(), "ab");
  if (!f) throw std::runtime_error("cannot open event log " + path.string() + ": " + std::strerror(errno));
  const bool ok = std::fwrite(buffer.data(), 1, buffer.size(), f) == buffer.size() &&
                  std::fflush(f) == 0 && ::fsync(fileno(f)) == 0;
  const int saved = errno;
  std::fclose(f);
  if (!ok) throw std::runtime_error("cannot write event log " + path.string() + ": " + std::strerror(saved));
}

std::vector<nlohmann::json> EventLog::read(const std::string& session_id) const {
  const std::string text = slurp(path_for(session_id));
  std::vector<nlohmann::json> events;
  std::size_t start = 0;
  for (auto nl = text.find('\n'); nl != std::string::npos; nl = text.find('\n', start)) {
    auto line = std::string_view(text).substr(start, nl - start);
    start = nl + 1;
    if (line.empty()) continue;
    events.push_back(nlohmann::json::parse(line));
  }
  return events;
}

void EventLog::truncate(const std::string& session_id, std::size_t keep) {
  const auto path = path_for(session_id);
  const std::string text = slurp(path);
  std::size_t offset = 0;
  std::size_t kept = 0;
  while (kept < keep) {
    auto nl = text.find('\n', offset);
    if (nl == std::string::npos) break;
    if (nl > offset) ++kept;
    offset = nl + 1;
  }
  std::filesystem::resize_file(path, offset);
}

void EventLog::remove(const std::string& session_id) { std::filesystem::remove(path_for(session_id)); }

std::vector<std::string> EventLog::session_ids() const {
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() == ".jsonl") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace kgdx
