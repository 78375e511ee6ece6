#include "kgdx/backends.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

#include "kgdx/assets.hpp"
#include "kgdx/text.hpp"

namespace kgdx {
namespace {

using nlohmann::json;

const std::vector<std::vector<std::string>> kUncertain = {
    {"not", "sure"}, {"don't", "know"}, {"do", "not", "know"}, {"unsure"},       {"maybe"},
    {"no", "idea"},  {"can't", "remember"}, {"don't", "remember"}, {"not", "certain"}, {"dont", "know"}};
const std::vector<std::string> kNegations = {"no",     "not",   "never",   "haven't", "havent",
                                             "hasn't", "don't", "dont",    "didn't",  "didnt",
                                             "doesn't", "nope", "none",    "without", "neither",
                                             "nor",    "isn't", "aren't",  "wasn't",  "denies"};
const std::vector<std::vector<std::string>> kAffirmations = {
    {"yes"},  {"yeah"}, {"yep"},      {"yup"},         {"sure"},     {"definitely"},
    {"i", "have"}, {"i've"}, {"i", "do"}, {"i", "did"}, {"think", "so"}, {"correct"}, {"sometimes"}};

std::optional<Stance> clause_cue(const std::vector<std::string>& tokens) {
  for (const auto& phrase : kUncertain) {
    if (find_phrase(tokens, phrase) != std::string::npos) return Stance::unknown;
  }
  for (const auto& t : tokens) {
    if (std::find(kNegations.begin(), kNegations.end(), t) != kNegations.end()) return Stance::denied;
  }
  for (const auto& phrase : kAffirmations) {
    if (find_phrase(tokens, phrase) != std::string::npos) return Stance::affirmed;
  }
  return std::nullopt;
}

std::vector<std::string> split_clauses(std::string_view text) {
  std::vector<std::string> clauses;
  std::string current;
  auto flush = [&] {
    auto t = trim(current);
    if (!t.empty()) clauses.push_back(t);
    current.clear();
  };
  for (char c : text) {
    if (c == '.' || c == ';' || c == '!' || c == '?' || c == ',') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  std::vector<std::string> out;
  for (const auto& clause : clauses) {
    std::string rest = clause;
    for (auto pos = to_lower(rest).find(" but "); pos != std::string::npos;
         pos = to_lower(rest).find(" but ")) {
      out.push_back(trim(rest.substr(0, pos)));
      rest = rest.substr(pos + 5);
    }
    out.push_back(trim(rest));
  }
  out.erase(std::remove(out.begin(), out.end(), std::string()), out.end());
  return out;
}

std::string extract_json_object(const std::string& text) {
  auto open = text.find('{');
  auto close = text.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw ModelError(ModelError::Kind::malformed, "extraction reply contains no JSON object");
  }
  return text.substr(open, close - open + 1);
}

}  // namespace

LexicalExtractor::LexicalExtractor(const Lexicon& lexicon) {
  for (const auto& [head, variants] : lexicon.family("synonym")) {
    for (const auto& v : variants) synonym_head_[join(tokenize(v), " ")] = head;
  }
}

std::vector<EvidenceItem> LexicalExtractor::extract(const KnowledgeGraph& g, std::string_view,
                                                    const std::optional<std::string>& target,
                                                    std::string_view reply) {
  struct Phrase {
    std::vector<std::string> tokens;
    std::string name;
  };
  std::vector<Phrase> phrases;
  for (const auto& n : g.nodes()) {
    if (n.kind != NodeKind::disease) phrases.push_back({tokenize(n.name), n.name});
  }
  for (const auto& [variant, head] : synonym_head_) {
    auto id = g.id_for_name(head);
    if (id && g.node(*id).kind != NodeKind::disease) phrases.push_back({split(variant, ' '), g.node(*id).name});
  }

  std::vector<EvidenceItem> mentions;
  std::optional<Stance> target_stance;
  std::optional<Stance> target_mentioned;
  const auto target_key = target ? normalize_name(*target) : std::string();
  for (const auto& clause : split_clauses(reply)) {
    const auto tokens = tokenize(clause);
    const auto cue = clause_cue(tokens);
    if (!target_stance && cue) target_stance = cue;

    struct Span {
      std::size_t pos, len;
      std::string name;
    };
    std::vector<Span> found;
    for (const auto& p : phrases) {
      if (p.tokens.empty()) continue;
      auto pos = find_phrase(tokens, p.tokens);
      if (pos != std::string::npos) found.push_back({pos, p.tokens.size(), p.name});
    }
    std::stable_sort(found.begin(), found.end(), [](const Span& a, const Span& b) {
      return a.len != b.len ? a.len > b.len : a.pos < b.pos;
    });
    std::vector<Span> kept;
    for (const auto& s : found) {
      bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const Span& k) {
        return s.pos < k.pos + k.len && k.pos < s.pos + s.len;
      });
      if (!overlaps) kept.push_back(s);
    }
    const Stance stance = cue.value_or(Stance::affirmed);
    for (const auto& s : kept) {
      mentions.push_back({s.name, stance});
      if (!target_mentioned && normalize_name(s.name) == target_key) target_mentioned = stance;
    }
  }
  std::vector<EvidenceItem> out;
  if (target) {
    if (auto s = target_stance ? target_stance : target_mentioned) out.push_back({*target, *s});
  }
  out.insert(out.end(), mentions.begin(), mentions.end());
  return out;
}

std::vector<EvidenceItem> ModelExtractor::extract(const KnowledgeGraph&, std::string_view question,
                                                  const std::optional<std::string>&,
                                                  std::string_view reply) {
  auto prompt = render_template(asset("prompts/evidence_extraction_prompt.txt"),
                                {{"question", std::string(question)}, {"reply", std::string(reply)}});
  json doc;
  try {
    doc = json::parse(extract_json_object(model_->complete(prompt)));
  } catch (const json::parse_error& e) {
    throw ModelError(ModelError::Kind::malformed, std::string("extraction reply: ") + e.what());
  }
  std::vector<EvidenceItem> out;
  auto read = [&](const char* key, Stance stance) {
    if (!doc.contains(key)) return;
    if (!doc.at(key).is_array()) {
      throw ModelError(ModelError::Kind::malformed, std::string("\"") + key + "\" must be a list");
    }
    for (const auto& v : doc.at(key)) {
      if (v.is_string() && !trim(v.get<std::string>()).empty()) out.push_back({v.get<std::string>(), stance});
    }
  };
  read("positive", Stance::affirmed);
  read("negative", Stance::denied);
  return out;
}

PatientReply ModelPatient::opening(const PatientProfile& profile, const Persona& persona,
                                   std::uint64_t) {
  History greeting = {{Role::system, std::string(Lexicon::builtin().values("greeting").front())}};
  return {trim(model_->complete(render_patient_prompt(profile, persona, greeting))), {},
          Stance::unknown};
}

PatientReply ModelPatient::reply(const PatientProfile& profile, const Persona& persona,
                                 const History& history, std::string_view question, std::uint64_t) {
  History h = history;
  if (h.empty() || h.back().role != Role::system) h.push_back({Role::system, std::string(question)});
  return {trim(model_->complete(render_patient_prompt(profile, persona, h))), {}, Stance::unknown};
}

ModelEndpoints ModelEndpoints::from_env() {
  ModelEndpoints e;
  e.chat = EndpointConfig::from_env();
  e.scorer = e.chat;
  const char* url = std::getenv("KGDX_SCORER_ENDPOINT");
  e.scorer.url = url ? url : "";
  return e;
}

Components make_components(const BackendChoice& choice, const VerifierConfig& verifier,
                           const ModelEndpoints& endpoints) {
  std::shared_ptr<ChatModel> chat;
  auto need_chat = [&](const std::string& what) {
    if (!endpoints.chat.configured()) {
      throw std::invalid_argument(what + " needs a model endpoint (set KGDX_MODEL_ENDPOINT)");
    }
    if (!chat) chat = std::make_shared<HttpChatModel>(endpoints.chat);
    return chat;
  };
  Components c;
  if (choice.scorer == "evidence") {
    c.scorer = std::make_shared<EvidenceScorer>();
  } else if (choice.scorer == "retrieval") {
    c.scorer = std::make_shared<RetrievalScorer>();
  } else if (choice.scorer == "external") {
    if (!endpoints.scorer.configured()) {
      throw std::invalid_argument("external scorer needs KGDX_SCORER_ENDPOINT");
    }
    c.scorer = std::make_shared<ExternalScorer>(std::make_shared<HttpJsonEndpoint>(endpoints.scorer));
  } else {
    throw std::invalid_argument("unknown scorer '" + choice.scorer + "'");
  }

  if (choice.verifier == "rule") {
    c.verifier = std::make_shared<RuleVerifier>(verifier);
  } else if (choice.verifier == "external") {
    c.verifier = std::make_shared<ExternalVerifier>(need_chat("external verifier"), verifier);
  } else if (choice.verifier == "cod") {
    c.verifier = std::make_shared<CodVerifier>(
        verifier, endpoints.chat.configured() ? need_chat("cod verifier") : nullptr);
  } else {
    throw std::invalid_argument("unknown verifier '" + choice.verifier + "'");
  }

  if (choice.patient == "rule") {
    c.patient = std::make_shared<RulePatientSimulator>();
  } else if (choice.patient == "external") {
    c.patient = std::make_shared<ModelPatient>(need_chat("external patient"));
  } else {
    throw std::invalid_argument("unknown patient backend '" + choice.patient + "'");
  }

  if (choice.verifier == "external" || choice.patient == "external") {
    c.extractor = std::make_shared<ModelExtractor>(need_chat("evidence extraction"));
  }
  return c;
}

}  // namespace kgdx
