#include "kgdx/profile.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <stdexcept>

#include "kgdx/rng.hpp"
#include "kgdx/text.hpp"

namespace kgdx {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 3> kStanceNames = {"affirmed", "denied", "unknown"};
constexpr std::array<std::string_view, 3> kGenderNames = {"female", "male", "other"};
constexpr std::array<std::string_view, 5> kDetailNames = {"location", "character", "duration",
                                                          "onset", "factors"};
constexpr std::array<std::string_view, 3> kProficiencyNames = {"low", "medium", "high"};
constexpr std::array<std::string_view, 6> kPersonalityNames = {
    "plain", "verbose", "pleasing", "impatient", "distrust", "overanxious"};
constexpr std::array<std::string_view, 2> kLevelNames = {"low", "high"};
constexpr std::array<std::string_view, 2> kSpecificityNames = {"low", "normal"};

template <typename Enum, std::size_t N>
Enum parse_enum(const std::array<std::string_view, N>& names, std::string_view text,
                std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<Enum>(i);
  }
  throw std::invalid_argument("unknown " + std::string(what) + ": '" + std::string(text) + "'");
}

std::vector<std::string> string_list(const json& doc, const char* key) {
  std::vector<std::string> out;
  if (!doc.contains(key)) return out;
  for (const auto& v : doc.at(key)) out.push_back(v.get<std::string>());
  return out;
}

}  // namespace

std::string_view to_string(Stance stance) { return kStanceNames[static_cast<int>(stance)]; }
Stance parse_stance(std::string_view text) {
  return parse_enum<Stance>(kStanceNames, text, "stance");
}

std::string_view to_string(Gender gender) { return kGenderNames[static_cast<int>(gender)]; }

std::string_view to_string(DetailKey key) { return kDetailNames[static_cast<int>(key)]; }
std::optional<DetailKey> parse_detail_key(std::string_view text) {
  for (std::size_t i = 0; i < kDetailNames.size(); ++i) {
    if (kDetailNames[i] == text) return static_cast<DetailKey>(i);
  }
  return std::nullopt;
}

std::string_view to_string(Proficiency v) { return kProficiencyNames[static_cast<int>(v)]; }
std::string_view to_string(Personality v) { return kPersonalityNames[static_cast<int>(v)]; }
std::string_view to_string(RecallLevel v) { return kLevelNames[static_cast<int>(v)]; }
std::string_view to_string(ConfusionLevel v) { return kLevelNames[static_cast<int>(v)]; }
std::string_view to_string(Specificity v) { return kSpecificityNames[static_cast<int>(v)]; }
std::string_view to_string(Role role) { return role == Role::patient ? "patient" : "system"; }

std::string background_head(std::string_view entry) {
  auto cut = entry.find_first_of(",(;");
  return trim(entry.substr(0, cut));
}

std::vector<std::string> Background::all() const {
  std::vector<std::string> out = past_medical;
  out.insert(out.end(), family.begin(), family.end());
  out.insert(out.end(), social.begin(), social.end());
  return out;
}

std::vector<std::string> validate_profile(const PatientProfile& p) {
  std::vector<std::string> problems;
  if (p.id.empty()) problems.push_back("profile id is empty");
  if (p.gold_diseases.empty() || p.gold_diseases.size() > 4) {
    problems.push_back("profile " + p.id + ": expected 1-4 gold diseases, got " +
                       std::to_string(p.gold_diseases.size()));
  }
  std::set<std::string> affirmed;
  for (const auto& item : p.hpi_affirmed) {
    if (normalize_name(item.name).empty()) {
      problems.push_back("profile " + p.id + ": affirmed item with empty name");
    }
    affirmed.insert(normalize_name(item.name));
    for (const auto& [key, _] : item.details) {
      if (!parse_detail_key(key)) {
        problems.push_back("profile " + p.id + ": unknown detail key '" + key + "' on '" +
                           item.name + "'");
      }
    }
  }
  for (const auto& name : p.hpi_denied) {
    if (affirmed.count(normalize_name(name))) {
      problems.push_back("profile " + p.id + ": '" + name + "' is both affirmed and denied");
    }
  }
  return problems;
}

PatientProfile profile_from_json(const json& doc) {
  PatientProfile p;
  p.id = doc.at("id").get<std::string>();
  p.age = doc.value("age", 0);
  p.gender = parse_enum<Gender>(kGenderNames, doc.value("gender", std::string("other")), "gender");
  p.chief_complaint = doc.value("chief_complaint", std::string());
  p.gold_diseases = string_list(doc, "gold_diseases");
  if (doc.contains("hpi_affirmed")) {
    for (const auto& item : doc.at("hpi_affirmed")) {
      AffirmedItem a;
      a.name = item.at("name").get<std::string>();
      if (item.contains("details")) {
        a.details = item.at("details").get<DetailMap>();
      }
      p.hpi_affirmed.push_back(std::move(a));
    }
  }
  p.hpi_denied = string_list(doc, "hpi_denied");
  if (doc.contains("background")) {
    const auto& bg = doc.at("background");
    p.background.past_medical = string_list(bg, "past_medical");
    p.background.family = string_list(bg, "family");
    p.background.social = string_list(bg, "social");
  }
  auto problems = validate_profile(p);
  if (!problems.empty()) throw std::invalid_argument(join(problems, "; "));
  return p;
}

json to_json(const PatientProfile& p) {
  json affirmed = json::array();
  for (const auto& item : p.hpi_affirmed) {
    affirmed.push_back({{"name", item.name}, {"details", item.details}});
  }
  return {
      {"id", p.id},
      {"age", p.age},
      {"gender", kGenderNames[static_cast<int>(p.gender)]},
      {"chief_complaint", p.chief_complaint},
      {"gold_diseases", p.gold_diseases},
      {"hpi_affirmed", affirmed},
      {"hpi_denied", p.hpi_denied},
      {"background",
       {{"past_medical", p.background.past_medical},
        {"family", p.background.family},
        {"social", p.background.social}}},
  };
}

std::vector<PatientProfile> load_profiles(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::vector<PatientProfile> out;
  auto load_doc = [&](const json& doc) {
    if (doc.is_array()) {
      for (const auto& p : doc) out.push_back(profile_from_json(p));
    } else {
      out.push_back(profile_from_json(doc));
    }
  };
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f);
      load_doc(json::parse(in));
    }
    return out;
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profiles: " + path.string());
  if (path.extension() == ".jsonl") {
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      out.push_back(profile_from_json(json::parse(line)));
    }
    return out;
  }
  load_doc(json::parse(in));
  return out;
}

json to_json(const Persona& persona) {
  return {
      {"proficiency", to_string(persona.proficiency)},
      {"personality", to_string(persona.personality)},
      {"recall", to_string(persona.recall)},
      {"confusion", to_string(persona.confusion)},
      {"specificity", to_string(persona.specificity)},
  };
}

Persona persona_from_json(const json& doc) {
  Persona p;
  if (doc.contains("proficiency")) {
    p.proficiency = parse_enum<Proficiency>(kProficiencyNames,
                                            doc.at("proficiency").get<std::string>(), "proficiency");
  }
  if (doc.contains("personality")) {
    p.personality = parse_enum<Personality>(kPersonalityNames,
                                            doc.at("personality").get<std::string>(), "personality");
  }
  if (doc.contains("recall")) {
    p.recall = parse_enum<RecallLevel>(kLevelNames, doc.at("recall").get<std::string>(), "recall");
  }
  if (doc.contains("confusion")) {
    p.confusion =
        parse_enum<ConfusionLevel>(kLevelNames, doc.at("confusion").get<std::string>(), "confusion");
  }
  if (doc.contains("specificity")) {
    p.specificity = parse_enum<Specificity>(kSpecificityNames,
                                            doc.at("specificity").get<std::string>(), "specificity");
  }
  return p;
}

Persona sample_persona(Rng& rng) {
  Persona p;
  p.proficiency = static_cast<Proficiency>(rng.below(kProficiencyNames.size()));
  p.personality = static_cast<Personality>(rng.below(kPersonalityNames.size()));
  p.recall = static_cast<RecallLevel>(rng.below(kLevelNames.size()));
  p.confusion = static_cast<ConfusionLevel>(rng.below(kLevelNames.size()));
  p.specificity = static_cast<Specificity>(rng.below(kSpecificityNames.size()));
  return p;
}

std::vector<std::pair<std::string, std::string>> persona_fields(const Persona& p) {
  return {
      {"proficiency", std::string(to_string(p.proficiency))},
      {"personality", std::string(to_string(p.personality))},
      {"recall", std::string(to_string(p.recall))},
      {"confusion", std::string(to_string(p.confusion))},
      {"specificity", std::string(to_string(p.specificity))},
  };
}

std::string render_history(const History& history) {
  std::string out;
  for (const auto& u : history) {
    if (!out.empty()) out.push_back('\n');
    out += (u.role == Role::patient ? "Patient: " : "Doctor: ");
    out += u.text;
  }
  return out;
}

json to_json(const History& history) {
  json arr = json::array();
  for (const auto& u : history) {
    arr.push_back({{"role", to_string(u.role)}, {"text", u.text}});
  }
  return arr;
}

History history_from_json(const json& doc) {
  History h;
  for (const auto& u : doc) {
    auto role = u.at("role").get<std::string>();
    if (role != "patient" && role != "system") {
      throw std::invalid_argument("unknown utterance role: " + role);
    }
    h.push_back({role == "patient" ? Role::patient : Role::system, u.at("text").get<std::string>()});
  }
  return h;
}

}  // namespace kgdx
