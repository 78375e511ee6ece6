#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "kgdx/lexicon.hpp"
#include "kgdx/profile.hpp"

namespace kgdx {

struct PatientReply {
  std::string text;
  std::vector<std::string> disclosed;  // attribute names revealed this turn
  Stance stance = Stance::unknown;

  bool operator==(const PatientReply&) const = default;
};

/// Anything that can play the patient in a session.
class PatientBackend {
 public:
  virtual ~PatientBackend() = default;
  virtual PatientReply opening(const PatientProfile& profile, const Persona& persona,
                               std::uint64_t seed) = 0;
  virtual PatientReply reply(const PatientProfile& profile, const Persona& persona,
                             const History& history, std::string_view question,
                             std::uint64_t seed) = 0;
};

/// Deterministic rule engine. Every draw is taken from an Rng seeded by the
/// caller's seed, so identical inputs give identical replies.
class RulePatientSimulator : public PatientBackend {
 public:
  explicit RulePatientSimulator(const Lexicon& lexicon = Lexicon::builtin());

  PatientReply opening_statement(const PatientProfile& profile, const Persona& persona,
                                 std::uint64_t seed) const;

  /// Answers the first profile item the question mentions. Affirmed and denied
  /// symptoms match on their names and synonym groups; background entries
  /// match on their full text.
  PatientReply answer(const PatientProfile& profile, const Persona& persona,
                      std::string_view question, std::uint64_t seed) const;

  /// Renders a detail map. Throws std::invalid_argument for a key outside
  /// location, character, duration, onset and factors.
  std::string apply_specificity(const DetailMap& details, const Persona& persona,
                                std::uint64_t seed) const;

  /// General-region rewording of a symptom name ("right lower quadrant
  /// abdominal pain" -> "pain in my belly").
  std::string vague_mention(std::string_view name) const;

  PatientReply opening(const PatientProfile& profile, const Persona& persona,
                       std::uint64_t seed) override {
    return opening_statement(profile, persona, seed);
  }
  PatientReply reply(const PatientProfile& profile, const Persona& persona, const History&,
                     std::string_view question, std::uint64_t seed) override {
    return answer(profile, persona, question, seed);
  }

  const Lexicon& lexicon() const { return lexicon_; }

 private:
  struct Parts {
    std::string region;
    std::vector<std::string> core;
  };
  Parts analyze(std::string_view text) const;
  std::string render_details(const DetailMap& details, const Persona& persona,
                             const std::vector<DetailKey>& focus, Rng& rng) const;
  std::string decorate(std::string body, const Persona& persona, bool symptom_reply,
                       std::uint64_t seed) const;
  std::string scrub(std::string_view text) const;

  Lexicon lexicon_;
  std::map<std::string, std::string> region_of_term_;
  std::vector<std::string> laterality_;
  std::vector<std::string> banned_;
  std::map<std::string, std::vector<std::vector<std::string>>> synonyms_;  // normalized name -> token phrases
};

/// Full instruction prompt for an external patient model: base persona
/// instructions, then the low-specificity block, then the persona blocks
/// (high recall, high proficiency, verbose, in that order) when specificity is
/// low, then the dialogue so far.
std::string render_patient_prompt(const PatientProfile& profile, const Persona& persona,
                                  const History& history);

}  // namespace kgdx
