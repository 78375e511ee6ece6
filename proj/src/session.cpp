#include "kgdx/session.hpp"

#include <stdexcept>

#include "kgdx/text.hpp"

namespace kgdx {
namespace {

using nlohmann::json;

json optional_string(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::string> read_optional(const json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return doc.at(key).get<std::string>();
}

json to_json(const Decision& d) {
  return {{"action", to_json(d.action)},
          {"target_attribute", optional_string(d.target_attribute)},
          {"raw", d.raw},
          {"parse_failures", d.parse_failures},
          {"forced", d.forced}};
}

Decision decision_from_json(const json& doc) {
  Decision d;
  d.action = action_from_json(doc.at("action"));
  d.target_attribute = read_optional(doc, "target_attribute");
  d.raw = doc.value("raw", "");
  d.parse_failures = doc.value("parse_failures", 0);
  d.forced = doc.value("forced", false);
  return d;
}

}  // namespace

json to_json(const TurnRecord& r) {
  return {{"turn", r.turn},
          {"patient_text", r.patient_text},
          {"anchors", r.anchors},
          {"subgraph_nodes", r.subgraph_nodes},
          {"action", to_json(r.action)},
          {"target_attribute", optional_string(r.target_attribute)}};
}

TurnRecord turn_record_from_json(const json& doc) {
  TurnRecord r;
  r.turn = doc.at("turn").get<int>();
  r.patient_text = doc.at("patient_text").get<std::string>();
  r.anchors = doc.at("anchors").get<std::vector<std::string>>();
  r.subgraph_nodes = doc.at("subgraph_nodes").get<std::size_t>();
  r.action = action_from_json(doc.at("action"));
  r.target_attribute = read_optional(doc, "target_attribute");
  return r;
}

json to_json(const std::vector<TurnRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  return arr;
}

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::active:
      return "active";
    case SessionStatus::diagnosed:
      return "diagnosed";
    case SessionStatus::turn_limit_failure:
      return "turn_limit_failure";
    case SessionStatus::error:
      return "error";
  }
  return "error";
}

SessionStatus parse_session_status(std::string_view text) {
  for (auto s : {SessionStatus::active, SessionStatus::diagnosed, SessionStatus::turn_limit_failure,
                 SessionStatus::error}) {
    if (to_string(s) == text) return s;
  }
  throw std::invalid_argument("unknown session status '" + std::string(text) + "'");
}

json to_json(const Subgraph& sub) {
  json edges = json::array();
  for (const auto& e : sub.edges) {
    edges.push_back({{"source", e.source}, {"target", e.target}, {"relation", to_string(e.relation)}});
  }
  return {{"anchors", sub.anchor_ids},
          {"competing", sub.competing_ids},
          {"nodes", sub.node_ids},
          {"edges", edges},
          {"hop", sub.hop}};
}

Subgraph subgraph_from_json(const json& doc) {
  Subgraph sub;
  sub.anchor_ids = doc.at("anchors").get<std::vector<std::string>>();
  sub.competing_ids = doc.at("competing").get<std::vector<std::string>>();
  sub.node_ids = doc.at("nodes").get<std::vector<std::string>>();
  for (const auto& e : doc.at("edges")) {
    auto rel = parse_relation(e.at("relation").get<std::string>());
    if (!rel) throw std::invalid_argument("unknown relation in subgraph document");
    sub.edges.push_back({e.at("source").get<std::string>(), e.at("target").get<std::string>(), *rel});
  }
  sub.hop = doc.at("hop").get<std::map<std::string, int>>();
  return sub;
}

json to_json(const DiseaseScores& scores) {
  return {{"source", to_string(scores.source)}, {"values", scores.values}};
}

DiseaseScores scores_from_json(const json& doc) {
  return {doc.at("values").get<ScoreMap>(), parse_score_source(doc.at("source").get<std::string>())};
}

json to_json(const SessionState& s) {
  return {{"history", to_json(s.history)},
          {"ledger", to_json(s.ledger)},
          {"asked", s.asked},
          {"turn", s.turn},
          {"max_turns", s.max_turns},
          {"last_anchors", s.last_anchors},
          {"last_subgraph", to_json(s.last_subgraph)},
          {"last_scores", to_json(s.last_scores)},
          {"status", to_string(s.status)},
          {"final_action", s.final_action ? to_json(*s.final_action) : json(nullptr)},
          {"error", s.error},
          {"records", to_json(s.records)}};
}

SessionState session_state_from_json(const json& doc) {
  SessionState s;
  s.history = history_from_json(doc.at("history"));
  s.ledger = ledger_from_json(doc.at("ledger"));
  s.asked = doc.at("asked").get<std::set<std::string>>();
  s.turn = doc.at("turn").get<int>();
  s.max_turns = doc.at("max_turns").get<int>();
  s.last_anchors = doc.at("last_anchors").get<std::vector<std::string>>();
  s.last_subgraph = subgraph_from_json(doc.at("last_subgraph"));
  s.last_scores = scores_from_json(doc.at("last_scores"));
  s.status = parse_session_status(doc.at("status").get<std::string>());
  if (!doc.at("final_action").is_null()) s.final_action = action_from_json(doc.at("final_action"));
  s.error = doc.at("error").get<std::string>();
  for (const auto& r : doc.at("records")) s.records.push_back(turn_record_from_json(r));
  return s;
}

json to_json(const SystemTurn& t) {
  return {{"turn", t.turn},
          {"scores", to_json(t.scores)},
          {"anchors", t.anchors},
          {"subgraph", to_json(t.subgraph)},
          {"decision", to_json(t.decision)},
          {"utterance", t.utterance},
          {"asked_name", optional_string(t.asked_name)}};
}

SystemTurn system_turn_from_json(const json& doc) {
  SystemTurn t;
  t.turn = doc.at("turn").get<int>();
  t.scores = scores_from_json(doc.at("scores"));
  t.anchors = doc.at("anchors").get<std::vector<std::string>>();
  t.subgraph = subgraph_from_json(doc.at("subgraph"));
  t.decision = decision_from_json(doc.at("decision"));
  t.utterance = doc.at("utterance").get<std::string>();
  t.asked_name = read_optional(doc, "asked_name");
  return t;
}

json to_json(const PatientTurn& t) {
  json evidence = json::array();
  for (const auto& e : t.evidence) evidence.push_back({{"name", e.name}, {"stance", to_string(e.stance)}});
  return {{"text", t.text}, {"evidence", evidence}};
}

PatientTurn patient_turn_from_json(const json& doc) {
  PatientTurn t;
  t.text = doc.at("text").get<std::string>();
  for (const auto& e : doc.at("evidence")) {
    t.evidence.push_back({e.at("name").get<std::string>(), parse_stance(e.at("stance").get<std::string>())});
  }
  return t;
}

std::string diagnosis_utterance(const std::vector<std::string>& names) {
  return "Based on what you've told me, the most likely diagnoses are: " + join(names, ", ") + ".";
}

SessionState begin_session(int max_turns) {
  if (max_turns < 1) throw std::invalid_argument("max_turns must be at least 1");
  SessionState s;
  s.max_turns = max_turns;
  return s;
}

void apply(SessionState& state, const PatientTurn& turn) {
  if (is_terminal(state.status)) throw std::logic_error("session is already finished");
  if (!state.history.empty() && state.history.back().role == Role::patient) {
    throw std::logic_error("a patient turn is not due");
  }
  state.history.push_back({Role::patient, turn.text});
  for (const auto& e : turn.evidence) state.ledger.record(e.name, e.stance);
}

void apply(SessionState& state, const SystemTurn& turn) {
  if (is_terminal(state.status)) throw std::logic_error("session is already finished");
  if (state.history.empty() || state.history.back().role != Role::patient) {
    throw std::logic_error("a system turn is not due");
  }
  if (turn.turn != state.turn + 1) throw std::logic_error("system turn out of sequence");
  TurnRecord record;
  record.turn = turn.turn;
  record.patient_text = state.history.back().text;
  record.anchors = turn.anchors;
  record.subgraph_nodes = turn.subgraph.node_ids.size();
  record.action = turn.decision.action;
  record.target_attribute = turn.decision.target_attribute;

  state.turn = turn.turn;
  state.last_scores = turn.scores;
  state.last_anchors = turn.anchors;
  state.last_subgraph = turn.subgraph;
  state.records.push_back(std::move(record));
  state.history.push_back({Role::system, turn.utterance});
  if (turn.decision.action.kind == ActionKind::diagnosis) {
    state.status = SessionStatus::diagnosed;
    state.final_action = turn.decision.action;
  } else {
    if (turn.asked_name) state.asked.insert(*turn.asked_name);
    if (state.turn >= state.max_turns) state.status = SessionStatus::turn_limit_failure;
  }
}

SystemTurn compute_system_turn(const KnowledgeGraph& g, const SessionState& state, Scorer& scorer,
                               Verifier& verifier, const HypothesisConfig& config) {
  SystemTurn t;
  t.turn = state.turn + 1;
  t.scores = scorer.score(g, state.ledger, state.history);
  auto hyp = generate_hypotheses(g, t.scores, config);
  t.anchors = std::move(hyp.anchors);
  t.subgraph = std::move(hyp.subgraph);
  VerifierInput in{g, state.history, t.subgraph, t.scores, state.ledger, state.asked,
                   t.turn >= state.max_turns};
  t.decision = verifier.decide(in);
  if (t.decision.action.kind == ActionKind::diagnosis) {
    t.utterance = diagnosis_utterance(t.decision.action.diagnoses);
  } else {
    t.utterance = t.decision.action.question;
    if (t.decision.target_attribute) {
      t.asked_name = normalize_name(g.node(*t.decision.target_attribute).name);
    }
  }
  return t;
}

std::optional<std::string> pending_target(const SessionState& state, const KnowledgeGraph& g) {
  if (state.records.empty()) return std::nullopt;
  const auto& target = state.records.back().target_attribute;
  if (!target) return std::nullopt;
  const Node* n = g.find(*target);
  return n ? std::optional<std::string>(n->name) : std::nullopt;
}

PatientTurn patient_turn_from_reply(const SessionState& state, const KnowledgeGraph& g,
                                    const PatientReply& reply) {
  PatientTurn t;
  t.text = reply.text;
  if (auto target = pending_target(state, g)) t.evidence.push_back({*target, reply.stance});
  if (reply.stance != Stance::unknown) {
    for (const auto& name : reply.disclosed) t.evidence.push_back({name, reply.stance});
  }
  return t;
}

PatientTurn patient_turn_from_text(const SessionState& state, const KnowledgeGraph& g,
                                   std::string text, EvidenceExtractor& extractor) {
  PatientTurn t;
  std::string question;
  if (!state.history.empty() && state.history.back().role == Role::system) {
    question = state.history.back().text;
  }
  t.evidence = extractor.extract(g, question, pending_target(state, g), text);
  t.text = std::move(text);
  return t;
}

void validate(const RunConfig& config) {
  if (config.max_turns < 1) throw std::invalid_argument("max_turns must be at least 1");
  validate(config.hypothesis);
  validate(config.verifier);
}

}  // namespace kgdx
