#include "kgdx/verifier.hpp"

#include <algorithm>
#include <numeric>

#include "kgdx/assets.hpp"
#include "kgdx/model_client.hpp"
#include "kgdx/text.hpp"

namespace kgdx {
namespace {

using nlohmann::json;

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kQuestionOpen = "<question>";
constexpr std::string_view kQuestionClose = "</question>";
constexpr std::string_view kDiagnosisOpen = "<diagnosis>";
constexpr std::string_view kDiagnosisClose = "</diagnosis>";

std::size_t count_of(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::vector<std::string> ranked_ids(const std::vector<std::string>& ids, const ScoreMap& scores) {
  std::vector<std::string> out = ids;
  auto score = [&](const std::string& id) {
    auto it = scores.find(id);
    return it == scores.end() ? 0.0 : it->second;
  };
  std::sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
    const double sa = score(a), sb = score(b);
    return sa != sb ? sa > sb : a < b;
  });
  return out;
}

std::vector<std::string> all_ids(const ScoreMap& scores) {
  std::vector<std::string> out;
  for (const auto& [id, _] : scores) out.push_back(id);
  return out;
}

VerifierAction diagnosis_of(std::vector<std::string> names, std::string think) {
  VerifierAction a;
  a.kind = ActionKind::diagnosis;
  a.think = std::move(think);
  a.diagnoses = std::move(names);
  return a;
}

Decision forced_diagnosis(const VerifierInput& in, const VerifierConfig& config, int failures,
                          std::string raw) {
  auto ids = in.subgraph.empty() ? all_ids(in.scores.values) : in.subgraph.disease_ids();
  Decision d;
  d.action = diagnosis_of(top_names(in.graph, ids, in.scores.values, config.max_diagnoses),
                          "Falling back to the highest-scoring candidates.");
  d.raw = std::move(raw);
  d.parse_failures = failures;
  d.forced = true;
  return d;
}

// Calls the model until a reply parses, up to 1 + parse_retries attempts.
Decision ask_model(ChatModel& model, const std::string& prompt, const VerifierInput& in,
                   const VerifierConfig& config) {
  int failures = 0;
  std::string raw;
  for (int attempt = 0; attempt <= config.parse_retries; ++attempt) {
    raw = model.complete(prompt);
    try {
      Decision d;
      d.action = parse_action(raw, config.max_diagnoses);
      d.raw = raw;
      d.parse_failures = failures;
      return d;
    } catch (const ParseError&) {
      ++failures;
    }
  }
  return forced_diagnosis(in, config, failures, raw);
}

}  // namespace

std::string_view to_string(ActionKind kind) {
  return kind == ActionKind::question ? "question" : "diagnosis";
}

json to_json(const VerifierAction& a) {
  json doc = {{"think", a.think}, {"kind", to_string(a.kind)}};
  if (a.kind == ActionKind::question) {
    doc["question"] = a.question;
  } else {
    doc["diagnoses"] = a.diagnoses;
  }
  return doc;
}

VerifierAction action_from_json(const json& doc) {
  VerifierAction a;
  a.think = doc.value("think", "");
  auto kind = doc.at("kind").get<std::string>();
  if (kind == "question") {
    a.kind = ActionKind::question;
    a.question = doc.at("question").get<std::string>();
  } else if (kind == "diagnosis") {
    a.kind = ActionKind::diagnosis;
    a.diagnoses = doc.at("diagnoses").get<std::vector<std::string>>();
  } else {
    throw std::invalid_argument("unknown action kind '" + kind + "'");
  }
  return a;
}

std::string format_action(const VerifierAction& a) {
  std::string out = std::string(kThinkOpen) + "\n" + a.think + "\n" + std::string(kThinkClose) + "\n";
  if (a.kind == ActionKind::question) {
    out += std::string(kQuestionOpen) + "\n" + a.question + "\n" + std::string(kQuestionClose);
  } else {
    out += std::string(kDiagnosisOpen) + "\n" + join(a.diagnoses, ", ") + "\n" +
           std::string(kDiagnosisClose);
  }
  return out;
}

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::missing_think:
      return "missing think";
    case ParseErrorKind::no_action:
      return "no action";
    case ParseErrorKind::multiple_actions:
      return "multiple actions";
    case ParseErrorKind::empty_payload:
      return "empty payload";
    case ParseErrorKind::unterminated:
      return "unterminated block";
  }
  return "parse error";
}

ParseError::ParseError(ParseErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

VerifierAction parse_action(std::string_view raw, std::size_t max_diagnoses) {
  auto think_open = raw.find(kThinkOpen);
  if (think_open == std::string_view::npos) {
    throw ParseError(ParseErrorKind::missing_think, "no <think> block");
  }
  auto think_body = think_open + kThinkOpen.size();
  auto think_close = raw.find(kThinkClose, think_body);
  if (think_close == std::string_view::npos) {
    throw ParseError(ParseErrorKind::unterminated, "<think> is never closed");
  }
  VerifierAction action;
  action.think = trim(raw.substr(think_body, think_close - think_body));

  std::string rest(raw.substr(0, think_open));
  rest += raw.substr(think_close + kThinkClose.size());
  const auto questions = count_of(rest, kQuestionOpen);
  const auto diagnoses = count_of(rest, kDiagnosisOpen);
  if (questions + diagnoses == 0) {
    throw ParseError(ParseErrorKind::no_action, "expected <question> or <diagnosis>");
  }
  if (questions + diagnoses > 1) {
    throw ParseError(ParseErrorKind::multiple_actions,
                     std::to_string(questions + diagnoses) + " action blocks found");
  }
  const bool is_question = questions == 1;
  const auto open_tag = is_question ? kQuestionOpen : kDiagnosisOpen;
  const auto close_tag = is_question ? kQuestionClose : kDiagnosisClose;
  auto body = rest.find(open_tag) + open_tag.size();
  auto close = rest.find(close_tag, body);
  if (close == std::string::npos) {
    throw ParseError(ParseErrorKind::unterminated, std::string(open_tag) + " is never closed");
  }
  auto payload = trim(std::string_view(rest).substr(body, close - body));
  if (is_question) {
    if (payload.empty()) throw ParseError(ParseErrorKind::empty_payload, "empty question");
    action.kind = ActionKind::question;
    action.question = payload;
    return action;
  }
  action.kind = ActionKind::diagnosis;
  for (const auto& part : split(payload, ',')) {
    auto name = trim(part);
    if (name.empty()) continue;
    if (action.diagnoses.size() < max_diagnoses) action.diagnoses.push_back(name);
  }
  if (action.diagnoses.empty()) throw ParseError(ParseErrorKind::empty_payload, "empty diagnosis");
  return action;
}

Resolution resolve_diagnoses(const std::vector<std::string>& names, const KnowledgeGraph& g) {
  Resolution r;
  for (const auto& name : names) {
    auto id = g.id_for_name(name);
    if (id && g.node(*id).kind == NodeKind::disease) {
      r.resolved.push_back(*id);
    } else {
      r.unresolved.push_back(name);
    }
  }
  return r;
}

std::string render_hv_prompt(const History& history, const std::vector<std::string>& statements) {
  std::string graph = statements.empty() ? "" : "\n" + join(statements, "\n");
  std::string dialogue = history.empty() ? "" : "\n" + render_history(history);
  return render_template(asset("prompts/hv_prompt.txt"),
                         {{"subgraph", graph}, {"dialogue", dialogue}});
}

void validate(const VerifierConfig& c) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(c.stop_confidence) || !unit(c.cod_threshold)) {
    throw std::invalid_argument("verifier thresholds must lie in [0, 1]");
  }
  if (c.max_diagnoses < 1 || c.max_diagnoses > 4) {
    throw std::invalid_argument("max_diagnoses must lie in [1, 4]");
  }
  if (c.cod_top < 1) throw std::invalid_argument("cod_top must be at least 1");
  if (c.parse_retries < 0) throw std::invalid_argument("parse_retries must be non-negative");
}

std::string question_for(const Node& attribute) {
  switch (attribute.kind) {
    case NodeKind::symptom:
      return "Have you experienced " + attribute.name + "?";
    case NodeKind::risk_factor:
      return "Do you have " + attribute.name + " or a history of it?";
    case NodeKind::cause:
      return "Have you been exposed to " + attribute.name + "?";
    case NodeKind::disease:
      break;
  }
  throw std::invalid_argument("cannot ask about disease node " + attribute.id);
}

std::optional<std::string> select_attribute(const KnowledgeGraph& g,
                                            const std::vector<std::string>& candidates,
                                            const EvidenceLedger& ledger,
                                            const std::set<std::string>& asked) {
  std::map<std::string, std::size_t> adjacent;
  for (const auto& d : candidates) {
    for (const auto& attr : g.neighbors(d)) ++adjacent[attr];
  }
  const double total = static_cast<double>(candidates.size());
  std::optional<std::string> best;
  double best_gain = -1.0;
  std::size_t best_degree = 0;
  for (const auto& [attr, count] : adjacent) {
    if (count == 0 || count == candidates.size()) continue;
    const auto key = normalize_name(g.node(attr).name);
    if (asked.count(key) || ledger.contains(key)) continue;
    const double p = static_cast<double>(count) / total;
    const double gain = p * (1.0 - p);
    const std::size_t degree = g.neighbors(attr).size();
    // Ascending id iteration keeps the smallest id on a full tie.
    if (gain > best_gain || (gain == best_gain && degree > best_degree)) {
      best = attr;
      best_gain = gain;
      best_degree = degree;
    }
  }
  return best;
}

std::vector<std::string> top_names(const KnowledgeGraph& g, const std::vector<std::string>& ids,
                                   const ScoreMap& scores, std::size_t k) {
  std::vector<std::string> out;
  for (const auto& id : ranked_ids(ids, scores)) {
    if (out.size() == k) break;
    out.push_back(g.node(id).name);
  }
  return out;
}

Decision rule_decide(const KnowledgeGraph& g, const Subgraph& sub, const DiseaseScores& scores,
                     const EvidenceLedger& ledger, const std::set<std::string>& asked,
                     const VerifierConfig& config, bool at_turn_limit) {
  const auto candidates = sub.disease_ids();
  if (candidates.empty()) throw std::invalid_argument("rule verifier: no candidate diseases");
  const auto ranked = ranked_ids(candidates, scores.values);
  auto top_score = [&] {
    auto it = scores.values.find(ranked.front());
    return it == scores.values.end() ? 0.0 : it->second;
  }();

  Decision d;
  auto diagnose = [&](std::string why) {
    d.action = diagnosis_of(top_names(g, candidates, scores.values, config.max_diagnoses),
                            std::move(why));
    return d;
  };
  if (at_turn_limit) return diagnose("Turn limit reached; committing to the leading candidates.");
  if (top_score >= config.stop_confidence) {
    return diagnose("Leading candidate " + g.node(ranked.front()).name + " scores " +
                    format_fixed(top_score, 4) + ".");
  }
  auto attr = select_attribute(g, candidates, ledger, asked);
  if (!attr) return diagnose("No unasked attribute separates the candidates.");

  const Node& node = g.node(*attr);
  std::size_t adjacent = 0;
  for (const auto& c : candidates) adjacent += g.relation_between(*attr, c) ? 1 : 0;
  d.action.kind = ActionKind::question;
  d.action.think = "Candidates: " + join(top_names(g, candidates, scores.values, 4), ", ") + ". " +
                   node.name + " is linked to " + std::to_string(adjacent) + " of " +
                   std::to_string(candidates.size()) + " candidates.";
  d.action.question = question_for(node);
  d.target_attribute = *attr;
  return d;
}

CodOutcome cod_decide(const KnowledgeGraph& g, const DiseaseScores& scores,
                      const VerifierConfig& config) {
  CodOutcome out;
  auto ranked = ranked_ids(all_ids(scores.values), scores.values);
  if (ranked.size() > config.cod_top) ranked.resize(config.cod_top);
  out.candidates = ranked;
  if (ranked.empty()) return out;

  std::vector<double> mass;
  for (const auto& id : ranked) mass.push_back(std::max(0.0, scores.values.at(id)));
  double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (total <= 0.0) {
    std::fill(mass.begin(), mass.end(), 1.0);
    total = static_cast<double>(mass.size());
  }
  const std::size_t k = std::min<std::size_t>(3, mass.size());
  out.confidence = std::accumulate(mass.begin(), mass.begin() + static_cast<long>(k), 0.0) / total;
  if (out.confidence > config.cod_threshold) {
    out.action = diagnosis_of(top_names(g, ranked, scores.values, config.max_diagnoses),
                              "Top-3 confidence " + format_fixed(out.confidence, 4) + " exceeds " +
                                  format_fixed(config.cod_threshold, 2) + ".");
  }
  return out;
}

std::string render_cod_context(const KnowledgeGraph& g, const std::vector<std::string>& candidates) {
  std::vector<std::string> lines;
  for (const auto& d : candidates) {
    std::vector<std::string> attrs;
    for (const auto& a : g.neighbors(d)) attrs.push_back(g.node(a).name);
    lines.push_back("- " + g.node(d).name + ": " + (attrs.empty() ? "(none)" : join(attrs, ", ")));
  }
  return join(lines, "\n");
}

std::string render_cod_prompt(const KnowledgeGraph& g, const std::vector<std::string>& candidates,
                              const History& history) {
  std::string dialogue = history.empty() ? "" : "\n" + render_history(history);
  return render_template(asset("prompts/cod_question_prompt.txt"),
                         {{"candidates", render_cod_context(g, candidates)}, {"dialogue", dialogue}});
}

Decision RuleVerifier::decide(const VerifierInput& in) {
  return rule_decide(in.graph, in.subgraph, in.scores, in.ledger, in.asked, config_,
                     in.at_turn_limit);
}

Decision ExternalVerifier::decide(const VerifierInput& in) {
  return ask_model(*model_, render_hv_prompt(in.history, linearize(in.subgraph, in.graph)), in,
                   config_);
}

Decision CodVerifier::decide(const VerifierInput& in) {
  auto outcome = cod_decide(in.graph, in.scores, config_);
  if (outcome.action) {
    Decision d;
    d.action = *outcome.action;
    return d;
  }
  if (in.at_turn_limit) {
    Decision d;
    d.action = diagnosis_of(top_names(in.graph, outcome.candidates, in.scores.values,
                                      config_.max_diagnoses),
                            "Turn limit reached; committing to the leading candidates.");
    return d;
  }
  if (model_) {
    return ask_model(*model_, render_cod_prompt(in.graph, outcome.candidates, in.history), in,
                     config_);
  }
  Decision d;
  auto attr = select_attribute(in.graph, outcome.candidates, in.ledger, in.asked);
  if (!attr) {
    d.action = diagnosis_of(top_names(in.graph, outcome.candidates, in.scores.values,
                                      config_.max_diagnoses),
                            "No unasked attribute separates the candidates.");
    return d;
  }
  d.action.kind = ActionKind::question;
  d.action.think = "Top-3 confidence " + format_fixed(outcome.confidence, 4) + " is below " +
                   format_fixed(config_.cod_threshold, 2) + ".";
  d.action.question = question_for(in.graph.node(*attr));
  d.target_attribute = *attr;
  return d;
}

}  // namespace kgdx
