#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgdx {

/// Flat keyed word lists: `key = value | value | ...`, one entry per line,
/// `#` comment lines. Keys with a dotted prefix ("location.my belly",
/// "synonym.fever") form families.
class Lexicon {
 public:
  static Lexicon parse(std::string_view text);
  static Lexicon load(const std::filesystem::path& path);
  /// The lexicon compiled in from assets/lexicons/default.lex.
  static const Lexicon& builtin();

  bool has(std::string_view key) const;
  /// Throws std::out_of_range for a missing key.
  const std::vector<std::string>& values(std::string_view key) const;
  const std::vector<std::string>* find(std::string_view key) const;

  /// (suffix, values) for every key starting with `prefix` + ".", sorted by suffix.
  std::vector<std::pair<std::string, std::vector<std::string>>> family(std::string_view prefix) const;

  const std::map<std::string, std::vector<std::string>, std::less<>>& entries() const {
    return entries_;
  }

  bool operator==(const Lexicon&) const = default;

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> entries_;
};

}  // namespace kgdx
