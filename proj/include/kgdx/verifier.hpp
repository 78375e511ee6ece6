#pragma once

#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kgdx/hypothesis.hpp"
#include "kgdx/knowledge_graph.hpp"
#include "kgdx/profile.hpp"
#include "kgdx/subgraph.hpp"

namespace kgdx {

class ChatModel;

enum class ActionKind { question, diagnosis };
std::string_view to_string(ActionKind kind);

struct VerifierAction {
  std::string think;
  ActionKind kind = ActionKind::question;
  std::string question;                // kind == question
  std::vector<std::string> diagnoses;  // kind == diagnosis, disease names

  bool operator==(const VerifierAction&) const = default;
};

nlohmann::json to_json(const VerifierAction& action);
VerifierAction action_from_json(const nlohmann::json& doc);

/// "<think>\n...\n</think>\n<question>\n...\n</question>" or the diagnosis
/// equivalent with names joined by ", ".
std::string format_action(const VerifierAction& action);

enum class ParseErrorKind { missing_think, no_action, multiple_actions, empty_payload, unterminated };
std::string_view to_string(ParseErrorKind kind);

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, const std::string& message);
  ParseErrorKind kind() const { return kind_; }

 private:
  ParseErrorKind kind_;
};

/// Reads the first <think> block, then exactly one <question> or <diagnosis>
/// block from the rest of the text. Diagnosis payloads are split on commas,
/// trimmed and truncated to max_diagnoses.
VerifierAction parse_action(std::string_view raw, std::size_t max_diagnoses = 4);

struct Resolution {
  std::vector<std::string> resolved;    // disease ids, input order
  std::vector<std::string> unresolved;  // names verbatim
};

/// Exact lookup after normalize_name; names of non-disease nodes stay unresolved.
Resolution resolve_diagnoses(const std::vector<std::string>& names, const KnowledgeGraph& g);

std::string render_hv_prompt(const History& history, const std::vector<std::string>& statements);

struct VerifierConfig {
  double stop_confidence = 0.9;
  double cod_threshold = 0.5;
  std::size_t cod_top = 20;
  std::size_t max_diagnoses = 4;
  int parse_retries = 2;
};

void validate(const VerifierConfig& config);

/// A verifier action plus the attribute id a rule-generated question targets.
struct Decision {
  VerifierAction action;
  std::optional<std::string> target_attribute;
  std::string raw;  // model output, when a model produced the action
  int parse_failures = 0;
  bool forced = false;  // diagnosis forced after exhausting parse retries
};

/// Question text for an attribute: "Have you experienced {name}?",
/// "Do you have {name} or a history of it?", "Have you been exposed to {name}?".
std::string question_for(const Node& attribute);

/// Most discriminative attribute over the candidate diseases: unasked, without
/// a ledger stance, adjacent to some candidate, 0 < p < 1 where p is the share
/// of candidates adjacent to it; maximizes p(1-p), then graph degree, then
/// smallest id.
std::optional<std::string> select_attribute(const KnowledgeGraph& g,
                                            const std::vector<std::string>& candidates,
                                            const EvidenceLedger& ledger,
                                            const std::set<std::string>& asked);

/// Candidates ranked by score (descending, ties by id), as names, at most `k`.
std::vector<std::string> top_names(const KnowledgeGraph& g, const std::vector<std::string>& ids,
                                   const ScoreMap& scores, std::size_t k);

/// Deterministic information-gain verifier. `asked` holds normalized attribute
/// names. Throws std::invalid_argument when the subgraph has no diseases.
Decision rule_decide(const KnowledgeGraph& g, const Subgraph& sub, const DiseaseScores& scores,
                     const EvidenceLedger& ledger, const std::set<std::string>& asked,
                     const VerifierConfig& config, bool at_turn_limit = false);

struct CodOutcome {
  double confidence = 0.0;
  std::vector<std::string> candidates;  // top cod_top ids, ranked
  std::optional<VerifierAction> action;  // set when the threshold is exceeded
};

/// Confidence = top-3 share of the summed scores over the top cod_top
/// candidates (all-zero scores count as uniform). Diagnoses when the
/// confidence is strictly above cod_threshold.
CodOutcome cod_decide(const KnowledgeGraph& g, const DiseaseScores& scores,
                      const VerifierConfig& config);

/// One line per candidate: "- {disease}: {attr}, {attr}, ...".
std::string render_cod_context(const KnowledgeGraph& g, const std::vector<std::string>& candidates);
std::string render_cod_prompt(const KnowledgeGraph& g, const std::vector<std::string>& candidates,
                              const History& history);

struct VerifierInput {
  const KnowledgeGraph& graph;
  const History& history;
  const Subgraph& subgraph;
  const DiseaseScores& scores;
  const EvidenceLedger& ledger;
  const std::set<std::string>& asked;
  bool at_turn_limit = false;
};

class Verifier {
 public:
  virtual ~Verifier() = default;
  virtual Decision decide(const VerifierInput& input) = 0;
};

class RuleVerifier : public Verifier {
 public:
  explicit RuleVerifier(VerifierConfig config = {}) : config_(config) {}
  Decision decide(const VerifierInput& in) override;

 private:
  VerifierConfig config_;
};

/// Sends the rendered verifier prompt to a chat model and parses the reply,
/// re-prompting up to parse_retries times before forcing a diagnosis from the
/// current scores.
class ExternalVerifier : public Verifier {
 public:
  ExternalVerifier(std::shared_ptr<ChatModel> model, VerifierConfig config = {})
      : model_(std::move(model)), config_(config) {}
  Decision decide(const VerifierInput& in) override;

 private:
  std::shared_ptr<ChatModel> model_;
  VerifierConfig config_;
};

/// Confidence-stopping baseline. Below the threshold the next question comes
/// from the chat model when one is given, otherwise from select_attribute over
/// the retrieved candidates.
class CodVerifier : public Verifier {
 public:
  explicit CodVerifier(VerifierConfig config = {}, std::shared_ptr<ChatModel> model = nullptr)
      : model_(std::move(model)), config_(config) {}
  Decision decide(const VerifierInput& in) override;

 private:
  std::shared_ptr<ChatModel> model_;
  VerifierConfig config_;
};

}  // namespace kgdx
