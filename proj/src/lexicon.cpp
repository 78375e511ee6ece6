#include "kgdx/lexicon.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "kgdx/assets.hpp"
#include "kgdx/text.hpp"

namespace kgdx {

Lexicon Lexicon::parse(std::string_view text) {
  Lexicon lex;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("lexicon line " + std::to_string(line_no) + ": missing '='");
    }
    auto key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) {
      throw std::invalid_argument("lexicon line " + std::to_string(line_no) + ": empty key");
    }
    std::vector<std::string> values;
    for (const auto& v : split(std::string_view(line).substr(eq + 1), '|')) {
      auto value = trim(v);
      if (!value.empty()) values.push_back(std::move(value));
    }
    if (values.empty()) {
      throw std::invalid_argument("lexicon line " + std::to_string(line_no) + ": no values for '" +
                                  key + "'");
    }
    if (!lex.entries_.emplace(key, std::move(values)).second) {
      throw std::invalid_argument("lexicon line " + std::to_string(line_no) + ": duplicate key '" +
                                  key + "'");
    }
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lex = parse(asset("lexicons/default.lex"));
  return lex;
}

bool Lexicon::has(std::string_view key) const { return entries_.find(key) != entries_.end(); }

const std::vector<std::string>* Lexicon::find(std::string_view key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

const std::vector<std::string>& Lexicon::values(std::string_view key) const {
  if (const auto* v = find(key)) return *v;
  throw std::out_of_range("lexicon has no key '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::vector<std::string>>> Lexicon::family(
    std::string_view prefix) const {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::string p = std::string(prefix) + ".";
  for (auto it = entries_.lower_bound(p); it != entries_.end(); ++it) {
    if (it->first.compare(0, p.size(), p) != 0) break;
    out.emplace_back(it->first.substr(p.size()), it->second);
  }
  return out;
}

}  // namespace kgdx
