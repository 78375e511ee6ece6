#pragma once

#include <memory>
#include <string>

#include "kgdx/lexicon.hpp"
#include "kgdx/model_client.hpp"
#include "kgdx/patient_simulator.hpp"
#include "kgdx/session.hpp"

namespace kgdx {

/// Keyword extractor for free-text replies. Each clause takes a stance from
/// its cue words (negation, uncertainty, otherwise affirmation); graph
/// attributes named in a clause take that clause's stance, and the question's
/// target takes the stance of the first clause with a cue.
class LexicalExtractor : public EvidenceExtractor {
 public:
  explicit LexicalExtractor(const Lexicon& lexicon = Lexicon::builtin());
  std::vector<EvidenceItem> extract(const KnowledgeGraph& g, std::string_view question,
                                    const std::optional<std::string>& target,
                                    std::string_view reply) override;

 private:
  std::map<std::string, std::string> synonym_head_;  // variant -> head name
};

/// Asks a chat model for {"positive": [...], "negative": [...]}.
class ModelExtractor : public EvidenceExtractor {
 public:
  explicit ModelExtractor(std::shared_ptr<ChatModel> model) : model_(std::move(model)) {}
  std::vector<EvidenceItem> extract(const KnowledgeGraph& g, std::string_view question,
                                    const std::optional<std::string>& target,
                                    std::string_view reply) override;

 private:
  std::shared_ptr<ChatModel> model_;
};

/// Patient played by a chat model prompted with render_patient_prompt.
class ModelPatient : public PatientBackend {
 public:
  explicit ModelPatient(std::shared_ptr<ChatModel> model) : model_(std::move(model)) {}
  PatientReply opening(const PatientProfile& profile, const Persona& persona,
                       std::uint64_t seed) override;
  PatientReply reply(const PatientProfile& profile, const Persona& persona, const History& history,
                     std::string_view question, std::uint64_t seed) override;

 private:
  std::shared_ptr<ChatModel> model_;
};

struct BackendChoice {
  std::string scorer = "evidence";  // evidence | retrieval | external
  std::string verifier = "rule";    // rule | external | cod
  std::string patient = "rule";     // rule | external
};

struct ModelEndpoints {
  EndpointConfig chat;    // verifier, patient and extraction calls
  EndpointConfig scorer;  // external disease scorer

  /// chat from EndpointConfig::from_env(); scorer URL from KGDX_SCORER_ENDPOINT.
  static ModelEndpoints from_env();
};

/// Builds the backends for one session. Ledger updates use simulator stances
/// unless the verifier or the patient is external, in which case a
/// ModelExtractor reads the replies. Throws std::invalid_argument for an
/// unknown backend name or a missing endpoint.
Components make_components(const BackendChoice& choice, const VerifierConfig& verifier,
                           const ModelEndpoints& endpoints);

}  // namespace kgdx
