#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgdx/knowledge_graph.hpp"
#include "kgdx/patient_simulator.hpp"
#include "kgdx/profile.hpp"
#include "kgdx/transcript.hpp"

namespace kgdx {

class ChatModel;

enum class Tier { high, moderate, low };
std::string_view to_string(Tier tier);

/// high when gamma > 0.7, low when gamma <= 0.3, moderate otherwise.
/// Throws std::invalid_argument outside [0, 1].
Tier tier_for(double gamma);

/// One supervised verifier example: the prompt the verifier would see at this
/// turn and the formatted think+action it should produce.
struct SyntheticExample {
  std::string profile_id;
  int turn = 0;
  std::string instruction;             // rendered verifier prompt
  History history;                     // H_t
  std::vector<std::string> subgraph;   // linearized oracle subgraph
  std::string target;                  // format_action output
  Tier tier = Tier::moderate;

  bool operator==(const SyntheticExample&) const = default;
};

nlohmann::json to_json(const SyntheticExample& example);

struct SyntheticResult {
  bool skipped = false;
  std::string skip_reason;
  Transcript transcript;
  std::vector<SyntheticExample> examples;
};

std::string render_synthetic_prompt(const std::vector<std::string>& gold_names, double gamma,
                                    const std::vector<std::string>& statements,
                                    const History& history, int max_turn);

/// Drives a clinician model with the generation prompt against a patient
/// backend. The final example is always a diagnosis with the gold diseases
/// first; a clinician still asking at max_turn is overridden.
SyntheticResult generate_synthetic_dialogue(const PatientProfile& profile, const KnowledgeGraph& g,
                                            ChatModel& clinician, PatientBackend& patient,
                                            const Persona& persona, std::uint64_t seed,
                                            int max_turn = 50, int parse_retries = 2);

struct TruncatedVariant {
  std::string profile_id;
  int truncation_point = 0;  // k: the prefix ends with the k-th patient utterance
  History history;
  std::vector<std::string> gold;
};

/// Number of variants for a dialogue with T system turns:
/// min(max(1, floor(fraction * T)), T - 1), and 0 when T <= 1.
std::size_t variant_count(std::size_t system_turns, double fraction);

/// Prefixes of a patient-first alternating history, ending after a patient
/// utterance, at truncation points drawn uniformly without replacement from
/// {1, ..., T-1}. Variants come back in draw order.
std::vector<TruncatedVariant> truncate_variants(const Transcript& dialogue, double fraction,
                                                std::uint64_t seed);

nlohmann::json to_json(const TruncatedVariant& v);

}  // namespace kgdx
