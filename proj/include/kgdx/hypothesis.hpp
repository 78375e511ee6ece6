#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kgdx/knowledge_graph.hpp"
#include "kgdx/profile.hpp"
#include "kgdx/subgraph.hpp"

namespace kgdx {

class JsonEndpoint;

/// Positive, negative and unknown attribute names gathered from the dialogue.
/// Names are stored normalized; the three sets stay disjoint because each call
/// moves the name out of the other two.
class EvidenceLedger {
 public:
  void confirm(std::string_view name);
  void deny(std::string_view name);
  void mark_unknown(std::string_view name);
  void record(std::string_view name, Stance stance);

  const std::set<std::string>& confirmed() const { return confirmed_; }
  const std::set<std::string>& denied() const { return denied_; }
  const std::set<std::string>& unknown() const { return unknown_; }

  std::optional<Stance> stance_of(std::string_view name) const;
  bool contains(std::string_view name) const { return stance_of(name).has_value(); }
  bool empty() const { return confirmed_.empty() && denied_.empty() && unknown_.empty(); }

  bool operator==(const EvidenceLedger&) const = default;

 private:
  std::set<std::string> confirmed_;
  std::set<std::string> denied_;
  std::set<std::string> unknown_;
};

nlohmann::json to_json(const EvidenceLedger& ledger);
EvidenceLedger ledger_from_json(const nlohmann::json& doc);

enum class ScoreSource { evidence, retrieval, external };
std::string_view to_string(ScoreSource source);
ScoreSource parse_score_source(std::string_view text);

struct DiseaseScores {
  ScoreMap values;  // disease id -> [0, 1]
  ScoreSource source = ScoreSource::evidence;

  bool operator==(const DiseaseScores&) const = default;
};

double logistic(double x);

struct EvidenceWeights {
  double alpha = 1.0;  // per confirmed attribute
  double beta = 1.0;   // per denied attribute
  double bias = -6.0;
};

/// score(d) = logistic(alpha * confirmed(d) - beta * denied(d) + bias), where
/// confirmed(d) and denied(d) count d's attributes in each ledger set.
DiseaseScores evidence_scores(const KnowledgeGraph& g, const EvidenceLedger& ledger,
                              const EvidenceWeights& weights = {});

/// pos(d) - penalty * neg(d). Throws std::invalid_argument when the two maps
/// cover different diseases.
ScoreMap rerank_raw(const ScoreMap& pos_sim, const ScoreMap& neg_sim, double penalty = 0.3);

/// rerank_raw rescaled affinely onto [0, 1]; a constant map becomes all 0.5.
DiseaseScores rerank_scores(const ScoreMap& pos_sim, const ScoreMap& neg_sim,
                            double penalty = 0.3);

/// Term list describing a disease: its own name followed by its attribute names.
std::vector<std::string> disease_document(const KnowledgeGraph& g, std::string_view disease_id);

/// Cosine similarity of the token count vectors of two term lists.
double bag_of_words_cosine(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Similarity between a set of symptom names and a disease.
using SimilarityFn =
    std::function<double(const std::vector<std::string>& terms, std::string_view disease_id)>;

/// Bag-of-words cosine against disease_document.
SimilarityFn lexical_similarity(const KnowledgeGraph& g);

/// Retrieval scores: rerank of Sim(S_pos, d) and Sim(S_neg, d) over every disease.
DiseaseScores retrieval_scores(const KnowledgeGraph& g, const EvidenceLedger& ledger,
                               const SimilarityFn& sim, double penalty = 0.3);

/// Sends {"history": [{role, text}, ...]} and expects {"scores": {name: p}}.
/// Throws ModelError: malformed for a bad shape, coverage when a disease is
/// missing, range for a value outside [0, 1].
DiseaseScores external_scores(JsonEndpoint& endpoint, const KnowledgeGraph& g,
                              const History& history);

/// The n highest scores, descending, ties by ascending id.
std::vector<std::string> select_anchors(const ScoreMap& scores, std::size_t n);

struct HypothesisConfig {
  std::size_t n = 2;
  double tau = 0.005;
};

void validate(const HypothesisConfig& config);

struct Hypotheses {
  std::vector<std::string> anchors;
  Subgraph subgraph;
};

Hypotheses generate_hypotheses(const KnowledgeGraph& g, const DiseaseScores& scores,
                               const HypothesisConfig& config);

/// One scoring backend per session.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual DiseaseScores score(const KnowledgeGraph& g, const EvidenceLedger& ledger,
                              const History& history) = 0;
};

class EvidenceScorer : public Scorer {
 public:
  explicit EvidenceScorer(EvidenceWeights weights = {}) : weights_(weights) {}
  DiseaseScores score(const KnowledgeGraph& g, const EvidenceLedger& ledger,
                      const History&) override {
    return evidence_scores(g, ledger, weights_);
  }

 private:
  EvidenceWeights weights_;
};

class RetrievalScorer : public Scorer {
 public:
  /// An empty similarity function selects lexical_similarity.
  explicit RetrievalScorer(SimilarityFn sim = {}, double penalty = 0.3)
      : sim_(std::move(sim)), penalty_(penalty) {}
  DiseaseScores score(const KnowledgeGraph& g, const EvidenceLedger& ledger,
                      const History&) override;

 private:
  SimilarityFn sim_;
  double penalty_;
};

class ExternalScorer : public Scorer {
 public:
  explicit ExternalScorer(std::shared_ptr<JsonEndpoint> endpoint) : endpoint_(std::move(endpoint)) {}
  DiseaseScores score(const KnowledgeGraph& g, const EvidenceLedger&,
                      const History& history) override {
    return external_scores(*endpoint_, g, history);
  }

 private:
  std::shared_ptr<JsonEndpoint> endpoint_;
};

}  // namespace kgdx
