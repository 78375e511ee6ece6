#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace kgdx {

/// Append-only JSON-lines log, one file per session (`<dir>/<id>.jsonl`).
/// Appends are flushed and fsynced before returning.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path dir);

  /// Writes all events with a single write call.
  void append(const std::string& session_id, const std::vector<nlohmann::json>& events);

  /// Complete events in order. A trailing line without its newline (a write
  /// cut short by a crash) is ignored.
  std::vector<nlohmann::json> read(const std::string& session_id) const;

  /// Shrinks the file to its first `keep` complete events.
  void truncate(const std::string& session_id, std::size_t keep);

  void remove(const std::string& session_id);

  /// Ids with a log file, sorted.
  std::vector<std::string> session_ids() const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& session_id) const;
  std::filesystem::path dir_;
};

}  // namespace kgdx
