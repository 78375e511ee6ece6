#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace kgdx {

class Rng;

enum class Stance { affirmed, denied, unknown };

std::string_view to_string(Stance stance);
Stance parse_stance(std::string_view text);

enum class Gender { female, male, other };
std::string_view to_string(Gender gender);

/// The five symptom-description attributes.
enum class DetailKey { location, character, duration, onset, factors };

std::string_view to_string(DetailKey key);
std::optional<DetailKey> parse_detail_key(std::string_view text);

/// Detail map as it appears in documents: free string keys, validated when
/// rendered or loaded.
using DetailMap = std::map<std::string, std::string>;

struct AffirmedItem {
  std::string name;
  DetailMap details;
};

struct Background {
  std::vector<std::string> past_medical;
  std::vector<std::string> family;
  std::vector<std::string> social;

  std::vector<std::string> all() const;
};

/// Background entries are written "<item>, <detail>"; the item before the
/// first ',', '(' or ';' is what a question can mention.
std::string background_head(std::string_view entry);

struct PatientProfile {
  std::string id;
  int age = 0;
  Gender gender = Gender::other;
  std::string chief_complaint;
  std::vector<std::string> gold_diseases;
  std::vector<AffirmedItem> hpi_affirmed;
  std::vector<std::string> hpi_denied;
  Background background;
};

/// Checks 1-4 gold diseases, affirmed/denied disjointness (by normalized
/// name), known detail keys and a non-empty id. Returns every problem found.
std::vector<std::string> validate_profile(const PatientProfile& profile);

PatientProfile profile_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const PatientProfile& profile);

/// Loads a single profile document, a JSON array of profiles, a JSONL file, or
/// every *.json file in a directory (sorted by filename). Throws on the first
/// invalid profile.
std::vector<PatientProfile> load_profiles(const std::filesystem::path& path);

enum class Proficiency { low, medium, high };
enum class Personality { plain, verbose, pleasing, impatient, distrust, overanxious };
enum class RecallLevel { low, high };
enum class ConfusionLevel { low, high };
enum class Specificity { low, normal };

struct Persona {
  Proficiency proficiency = Proficiency::medium;
  Personality personality = Personality::plain;
  RecallLevel recall = RecallLevel::high;
  ConfusionLevel confusion = ConfusionLevel::low;
  Specificity specificity = Specificity::normal;

  bool operator==(const Persona&) const = default;
};

std::string_view to_string(Proficiency v);
std::string_view to_string(Personality v);
std::string_view to_string(RecallLevel v);
std::string_view to_string(ConfusionLevel v);
std::string_view to_string(Specificity v);

nlohmann::json to_json(const Persona& persona);
Persona persona_from_json(const nlohmann::json& doc);

/// Uniform over every declared enumeration value of every field.
Persona sample_persona(Rng& rng);

/// Field name -> value pairs, in declaration order, for slicing reports.
std::vector<std::pair<std::string, std::string>> persona_fields(const Persona& persona);

enum class Role { patient, system };

std::string_view to_string(Role role);

struct Utterance {
  Role role = Role::patient;
  std::string text;

  bool operator==(const Utterance&) const = default;
};

using History = std::vector<Utterance>;

/// "Patient: ..." / "Doctor: ..." lines, one per utterance.
std::string render_history(const History& history);

nlohmann::json to_json(const History& history);
History history_from_json(const nlohmann::json& doc);

}  // namespace kgdx
