#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kgdx/hypothesis.hpp"
#include "kgdx/knowledge_graph.hpp"
#include "kgdx/patient_simulator.hpp"
#include "kgdx/profile.hpp"
#include "kgdx/subgraph.hpp"
#include "kgdx/verifier.hpp"

namespace kgdx {

enum class SessionStatus { active, diagnosed, turn_limit_failure, error };
std::string_view to_string(SessionStatus status);
SessionStatus parse_session_status(std::string_view text);
inline bool is_terminal(SessionStatus s) { return s != SessionStatus::active; }

struct EvidenceItem {
  std::string name;
  Stance stance = Stance::unknown;
  bool operator==(const EvidenceItem&) const = default;
};

/// Turns a free-text patient reply into ledger updates.
class EvidenceExtractor {
 public:
  virtual ~EvidenceExtractor() = default;
  /// `target` is the attribute name the question asked about, when known.
  virtual std::vector<EvidenceItem> extract(const KnowledgeGraph& g, std::string_view question,
                                            const std::optional<std::string>& target,
                                            std::string_view reply) = 0;
};

struct TurnRecord {
  int turn = 0;
  std::string patient_text;  // the patient utterance this response answers
  std::vector<std::string> anchors;
  std::size_t subgraph_nodes = 0;
  VerifierAction action;
  std::optional<std::string> target_attribute;

  bool operator==(const TurnRecord&) const = default;
};

struct SessionState {
  History history;
  EvidenceLedger ledger;
  std::set<std::string> asked;  // normalized attribute names
  int turn = 0;                 // system responses so far
  int max_turns = 50;
  std::vector<std::string> last_anchors;
  Subgraph last_subgraph;
  DiseaseScores last_scores;
  SessionStatus status = SessionStatus::active;
  std::optional<VerifierAction> final_action;
  std::string error;
  std::vector<TurnRecord> records;

  bool operator==(const SessionState&) const = default;
};

nlohmann::json to_json(const TurnRecord& record);
nlohmann::json to_json(const std::vector<TurnRecord>& records);
TurnRecord turn_record_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const SessionState& state);
SessionState session_state_from_json(const nlohmann::json& doc);

/// Everything one system response changes. Computing it has no side effects,
/// so the same value can be applied live and replayed from a log.
struct SystemTurn {
  int turn = 0;
  DiseaseScores scores;
  std::vector<std::string> anchors;
  Subgraph subgraph;
  Decision decision;
  std::string utterance;
  std::optional<std::string> asked_name;  // normalized name of the targeted attribute
};

struct PatientTurn {
  std::string text;
  std::vector<EvidenceItem> evidence;
};

nlohmann::json to_json(const SystemTurn& turn);
SystemTurn system_turn_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const PatientTurn& turn);
PatientTurn patient_turn_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Subgraph& sub);
Subgraph subgraph_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const DiseaseScores& scores);
DiseaseScores scores_from_json(const nlohmann::json& doc);

/// "Based on what you've told me, the most likely diagnoses are: a, b."
std::string diagnosis_utterance(const std::vector<std::string>& names);

SessionState begin_session(int max_turns);

/// Appends a patient utterance and records its evidence. Throws
/// std::logic_error when the session is terminal or a patient turn is not due.
void apply(SessionState& state, const PatientTurn& turn);

/// Appends a system response and moves the status to diagnosed (diagnosis)
/// or turn_limit_failure (question at max_turns).
void apply(SessionState& state, const SystemTurn& turn);

/// Scores, selects anchors, expands the subgraph and asks the verifier.
SystemTurn compute_system_turn(const KnowledgeGraph& g, const SessionState& state, Scorer& scorer,
                               Verifier& verifier, const HypothesisConfig& config);

/// Evidence from a simulator reply: the question's target attribute and every
/// disclosed name take the reply stance.
PatientTurn patient_turn_from_reply(const SessionState& state, const KnowledgeGraph& g,
                                    const PatientReply& reply);

/// Evidence from free text via an extractor.
PatientTurn patient_turn_from_text(const SessionState& state, const KnowledgeGraph& g,
                                   std::string text, EvidenceExtractor& extractor);

/// Name of the attribute the latest system question targeted, if any.
std::optional<std::string> pending_target(const SessionState& state, const KnowledgeGraph& g);

struct Components {
  std::shared_ptr<Scorer> scorer;
  std::shared_ptr<Verifier> verifier;
  std::shared_ptr<PatientBackend> patient;
  std::shared_ptr<EvidenceExtractor> extractor;  // null: use simulator stances
};

struct RunConfig {
  HypothesisConfig hypothesis;
  VerifierConfig verifier;
  int max_turns = 50;
  std::uint64_t seed = 0;
};

void validate(const RunConfig& config);

}  // namespace kgdx
