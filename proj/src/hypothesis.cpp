#include "kgdx/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "kgdx/model_client.hpp"
#include "kgdx/text.hpp"

namespace kgdx {
namespace {

using nlohmann::json;

std::vector<std::string> set_to_list(const std::set<std::string>& s) { return {s.begin(), s.end()}; }

}  // namespace

void EvidenceLedger::confirm(std::string_view name) { record(name, Stance::affirmed); }
void EvidenceLedger::deny(std::string_view name) { record(name, Stance::denied); }
void EvidenceLedger::mark_unknown(std::string_view name) { record(name, Stance::unknown); }

void EvidenceLedger::record(std::string_view name, Stance stance) {
  auto key = normalize_name(name);
  if (key.empty()) return;
  confirmed_.erase(key);
  denied_.erase(key);
  unknown_.erase(key);
  switch (stance) {
    case Stance::affirmed:
      confirmed_.insert(key);
      break;
    case Stance::denied:
      denied_.insert(key);
      break;
    case Stance::unknown:
      unknown_.insert(key);
      break;
  }
}

std::optional<Stance> EvidenceLedger::stance_of(std::string_view name) const {
  auto key = normalize_name(name);
  if (confirmed_.count(key)) return Stance::affirmed;
  if (denied_.count(key)) return Stance::denied;
  if (unknown_.count(key)) return Stance::unknown;
  return std::nullopt;
}

json to_json(const EvidenceLedger& ledger) {
  return {{"confirmed", set_to_list(ledger.confirmed())},
          {"denied", set_to_list(ledger.denied())},
          {"unknown", set_to_list(ledger.unknown())}};
}

EvidenceLedger ledger_from_json(const json& doc) {
  EvidenceLedger ledger;
  for (const auto& n : doc.value("confirmed", json::array())) ledger.confirm(n.get<std::string>());
  for (const auto& n : doc.value("denied", json::array())) ledger.deny(n.get<std::string>());
  for (const auto& n : doc.value("unknown", json::array())) ledger.mark_unknown(n.get<std::string>());
  return ledger;
}

std::string_view to_string(ScoreSource source) {
  switch (source) {
    case ScoreSource::evidence:
      return "evidence";
    case ScoreSource::retrieval:
      return "retrieval";
    case ScoreSource::external:
      return "external";
  }
  return "evidence";
}

ScoreSource parse_score_source(std::string_view text) {
  if (text == "evidence") return ScoreSource::evidence;
  if (text == "retrieval") return ScoreSource::retrieval;
  if (text == "external") return ScoreSource::external;
  throw std::invalid_argument("unknown score source '" + std::string(text) + "'");
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

DiseaseScores evidence_scores(const KnowledgeGraph& g, const EvidenceLedger& ledger,
                              const EvidenceWeights& w) {
  DiseaseScores out{{}, ScoreSource::evidence};
  for (const auto& d : g.ids_of_kind(NodeKind::disease)) {
    int confirmed = 0;
    int denied = 0;
    for (const auto& attr : g.neighbors(d)) {
      auto key = normalize_name(g.node(attr).name);
      confirmed += ledger.confirmed().count(key) ? 1 : 0;
      denied += ledger.denied().count(key) ? 1 : 0;
    }
    out.values[d] = logistic(w.alpha * confirmed - w.beta * denied + w.bias);
  }
  return out;
}

ScoreMap rerank_raw(const ScoreMap& pos_sim, const ScoreMap& neg_sim, double penalty) {
  if (pos_sim.size() != neg_sim.size()) {
    throw std::invalid_argument("rerank: positive and negative similarity cover different diseases");
  }
  ScoreMap raw;
  for (const auto& [d, pos] : pos_sim) {
    auto it = neg_sim.find(d);
    if (it == neg_sim.end()) {
      throw std::invalid_argument("rerank: disease " + d + " has no negative similarity");
    }
    raw[d] = pos - penalty * it->second;
  }
  return raw;
}

DiseaseScores rerank_scores(const ScoreMap& pos_sim, const ScoreMap& neg_sim, double penalty) {
  auto raw = rerank_raw(pos_sim, neg_sim, penalty);
  DiseaseScores out{{}, ScoreSource::retrieval};
  if (raw.empty()) return out;
  auto [lo_it, hi_it] = std::minmax_element(
      raw.begin(), raw.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  const double lo = lo_it->second;
  const double span = hi_it->second - lo;
  for (const auto& [d, v] : raw) out.values[d] = span > 0.0 ? (v - lo) / span : 0.5;
  return out;
}

std::vector<std::string> disease_document(const KnowledgeGraph& g, std::string_view disease_id) {
  std::vector<std::string> doc{g.node(disease_id).name};
  for (const auto& attr : g.neighbors(disease_id)) doc.push_back(g.node(attr).name);
  return doc;
}

double bag_of_words_cosine(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  auto counts = [](const std::vector<std::string>& terms) {
    std::map<std::string, double> c;
    for (const auto& t : terms) {
      for (const auto& tok : tokenize(t)) c[tok] += 1.0;
    }
    return c;
  };
  auto ca = counts(a);
  auto cb = counts(b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [k, v] : ca) {
    na += v * v;
    auto it = cb.find(k);
    if (it != cb.end()) dot += v * it->second;
  }
  for (const auto& [_, v] : cb) nb += v * v;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

SimilarityFn lexical_similarity(const KnowledgeGraph& g) {
  return [&g](const std::vector<std::string>& terms, std::string_view disease_id) {
    return bag_of_words_cosine(terms, disease_document(g, disease_id));
  };
}

DiseaseScores retrieval_scores(const KnowledgeGraph& g, const EvidenceLedger& ledger,
                               const SimilarityFn& sim, double penalty) {
  const auto pos_terms = set_to_list(ledger.confirmed());
  const auto neg_terms = set_to_list(ledger.denied());
  ScoreMap pos, neg;
  for (const auto& d : g.ids_of_kind(NodeKind::disease)) {
    pos[d] = sim(pos_terms, d);
    neg[d] = sim(neg_terms, d);
  }
  return rerank_scores(pos, neg, penalty);
}

DiseaseScores RetrievalScorer::score(const KnowledgeGraph& g, const EvidenceLedger& ledger,
                                     const History&) {
  return retrieval_scores(g, ledger, sim_ ? sim_ : lexical_similarity(g), penalty_);
}

DiseaseScores external_scores(JsonEndpoint& endpoint, const KnowledgeGraph& g,
                              const History& history) {
  json response = endpoint.post({{"history", to_json(history)}});
  if (!response.is_object() || !response.contains("scores") || !response.at("scores").is_object()) {
    throw ModelError(ModelError::Kind::malformed, "scorer response has no \"scores\" object");
  }
  DiseaseScores out{{}, ScoreSource::external};
  for (const auto& [name, value] : response.at("scores").items()) {
    auto id = g.id_for_name(name);
    if (!id || g.node(*id).kind != NodeKind::disease) continue;
    if (!value.is_number()) {
      throw ModelError(ModelError::Kind::malformed, "score for '" + name + "' is not a number");
    }
    const double p = value.get<double>();
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ModelError(ModelError::Kind::range,
                       "score for '" + name + "' is " + format_fixed(p, 6) + ", outside [0, 1]");
    }
    out.values[*id] = p;
  }
  std::vector<std::string> missing;
  for (const auto& d : g.ids_of_kind(NodeKind::disease)) {
    if (!out.values.count(d)) missing.push_back(g.node(d).name);
  }
  if (!missing.empty()) {
    throw ModelError(ModelError::Kind::coverage,
                     std::to_string(missing.size()) + " disease(s) missing from scorer response, first: " +
                         missing.front());
  }
  return out;
}

std::vector<std::string> select_anchors(const ScoreMap& scores, std::size_t n) {
  std::vector<std::pair<std::string, double>> ranked(scores.begin(), scores.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < n; ++i) out.push_back(ranked[i].first);
  return out;
}

void validate(const HypothesisConfig& config) {
  if (config.n < 1) throw std::invalid_argument("hypothesis config: n must be at least 1");
  if (!(config.tau >= 0.0 && config.tau <= 1.0)) {
    throw std::invalid_argument("hypothesis config: tau must lie in [0, 1]");
  }
}

Hypotheses generate_hypotheses(const KnowledgeGraph& g, const DiseaseScores& scores,
                               const HypothesisConfig& config) {
  validate(config);
  Hypotheses h;
  h.anchors = select_anchors(scores.values, config.n);
  h.subgraph = expand_subgraph(g, h.anchors, scores.values, config.tau);
  return h;
}

}  // namespace kgdx
