#include "kgdx/session_service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <random>
#include <regex>

#include "kgdx/rng.hpp"
#include "kgdx/text.hpp"

namespace kgdx {
namespace {

using nlohmann::json;

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string random_id() {
  std::random_device rd;
  std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  char buf[24];
  std::snprintf(buf, sizeof buf, "s-%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const std::regex kIdPattern("[A-Za-z0-9_-]{1,64}");

ServiceError bad_request(const std::string& message) {
  return ServiceError(400, "invalid_request", message);
}

template <typename T>
T field(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw bad_request(std::string("field '") + key + "' has the wrong type");
  }
}

json action_payload(const VerifierAction& a) {
  if (a.kind == ActionKind::question) return {{"kind", "question"}, {"question", a.question}};
  return {{"kind", "diagnosis"}, {"diagnoses", a.diagnoses}};
}

}  // namespace

json ServiceError::to_json() const {
  json doc = {{"error", {{"code", code_}, {"message", what()}}}};
  if (retry_) doc["error"]["retry"] = true;
  return doc;
}

struct SessionManager::Live {
  std::string id;
  json request;  // normalized create request
  std::optional<PatientProfile> profile;
  Persona persona;
  std::uint64_t seed = 0;
  RunConfig run;
  BackendChoice backends;
  bool show_hypotheses = false;
  SessionState state;
  std::optional<RatingSet> ratings;
  std::string created_at;
  std::string updated_at;
  Components components;
  LexicalExtractor lexical;
  std::mutex mu;
};

SessionManager::SessionManager(ServiceConfig config)
    : config_(std::move(config)), log_(config_.data_dir) {
  if (!config_.graph) throw std::invalid_argument("session service needs a knowledge graph");
  if (!config_.clock) config_.clock = utc_now;
  for (const auto& id : log_.session_ids()) load(id);
}

SessionManager::~SessionManager() = default;

Components SessionManager::components_for(const Live& live) const {
  if (config_.component_factory) return config_.component_factory(live.backends, live.run.verifier);
  return make_components(live.backends, live.run.verifier, config_.endpoints);
}

std::shared_ptr<SessionManager::Live> SessionManager::find(const std::string& id) const {
  std::lock_guard<std::mutex> lock(registry_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "not_found", "no session '" + id + "'");
  return it->second;
}

std::vector<std::string> SessionManager::ids() const {
  std::lock_guard<std::mutex> lock(registry_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

SessionState SessionManager::state(const std::string& id) const {
  auto live = find(id);
  std::lock_guard<std::mutex> lock(live->mu);
  return live->state;
}

namespace {

// Parses and normalizes a create request into `live` (everything except id,
// state and timestamps).
json normalize_request(const json& req, const std::vector<PatientProfile>& profiles,
                       std::optional<PatientProfile>& profile, Persona& persona, std::uint64_t& seed,
                       RunConfig& run, BackendChoice& backends, bool& show) {
  if (!req.is_object()) throw bad_request("request body must be a JSON object");
  run.hypothesis.n = field<std::size_t>(req, "n", 2);
  run.hypothesis.tau = field<double>(req, "tau", 0.005);
  run.max_turns = field<int>(req, "max_turns", 50);
  run.verifier.stop_confidence = field<double>(req, "stop_confidence", run.verifier.stop_confidence);
  run.verifier.cod_threshold = field<double>(req, "cod_threshold", run.verifier.cod_threshold);
  seed = field<std::uint64_t>(req, "seed", 0);
  run.seed = seed;
  backends.scorer = field<std::string>(req, "scorer", "evidence");
  backends.verifier = field<std::string>(req, "verifier", "rule");
  backends.patient = field<std::string>(req, "patient", "rule");
  show = field<bool>(req, "show_hypotheses", false);
  try {
    validate(run);
  } catch (const std::invalid_argument& e) {
    throw bad_request(e.what());
  }
  auto profile_id = field<std::string>(req, "profile_id", "");
  if (!profile_id.empty()) {
    auto it = std::find_if(profiles.begin(), profiles.end(),
                           [&](const PatientProfile& p) { return p.id == profile_id; });
    if (it == profiles.end()) throw ServiceError(404, "unknown_profile", "no profile '" + profile_id + "'");
    profile = *it;
  }
  if (req.contains("persona") && !req.at("persona").is_null()) {
    try {
      persona = persona_from_json(req.at("persona"));
    } catch (const std::exception& e) {
      throw bad_request(std::string("invalid persona: ") + e.what());
    }
  }
  return {{"profile_id", profile_id.empty() ? json(nullptr) : json(profile_id)},
          {"n", run.hypothesis.n},
          {"tau", run.hypothesis.tau},
          {"max_turns", run.max_turns},
          {"stop_confidence", run.verifier.stop_confidence},
          {"cod_threshold", run.verifier.cod_threshold},
          {"seed", seed},
          {"scorer", backends.scorer},
          {"verifier", backends.verifier},
          {"patient", backends.patient},
          {"show_hypotheses", show},
          {"persona", to_json(persona)}};
}

}  // namespace

json SessionManager::create(const json& request) {
  auto live = std::make_shared<Live>();
  live->request = normalize_request(request, config_.profiles, live->profile, live->persona,
                                    live->seed, live->run, live->backends, live->show_hypotheses);
  try {
    live->components = components_for(*live);
  } catch (const std::invalid_argument& e) {
    throw bad_request(e.what());
  }
  live->id = field<std::string>(request, "session_id", "");
  if (!live->id.empty() && !std::regex_match(live->id, kIdPattern)) {
    throw bad_request("session_id must match [A-Za-z0-9_-]{1,64}");
  }
  live->state = begin_session(live->run.max_turns);
  live->created_at = live->updated_at = config_.clock();

  std::lock_guard<std::mutex> registry(registry_mutex_);
  if (live->id.empty()) {
    do {
      live->id = random_id();
    } while (sessions_.count(live->id));
  } else if (sessions_.count(live->id)) {
    throw ServiceError(409, "exists", "session '" + live->id + "' already exists");
  }
  if (config_.max_active_sessions > 0) {
    std::size_t active = 0;
    for (const auto& [_, s] : sessions_) {
      std::lock_guard<std::mutex> lock(s->mu);
      active += is_terminal(s->state.status) ? 0 : 1;
    }
    if (active >= config_.max_active_sessions) {
      throw ServiceError(503, "capacity", "too many active sessions", true);
    }
  }

  std::vector<json> events = {
      {{"type", "created"}, {"id", live->id}, {"request", live->request}, {"at", live->created_at}}};
  json messages = json::array();
  if (live->profile) {
    const auto& g = *config_.graph;
    SessionState next = live->state;
    try {
      auto& c = live->components;
      auto opening = c.patient->opening(*live->profile, live->persona, derive_seed(live->seed, "opening"));
      auto pt = c.extractor ? patient_turn_from_text(next, g, opening.text, *c.extractor)
                            : patient_turn_from_reply(next, g, opening);
      apply(next, pt);
      auto st = compute_system_turn(g, next, *c.scorer, *c.verifier, live->run.hypothesis);
      apply(next, st);
      events.push_back({{"type", "patient_message"}, {"turn", to_json(pt)}, {"at", live->created_at}});
      events.push_back({{"type", "system_turn"}, {"turn", to_json(st)}, {"at", live->created_at}});
    } catch (const ServiceError&) {
      throw;
    } catch (const std::exception& e) {
      throw ServiceError(502, "backend_error", e.what(), true);
    }
    live->state = std::move(next);
  } else {
    messages.push_back({{"role", "system"}, {"text", Lexicon::builtin().values("greeting").front()}});
  }
  log_.append(live->id, events);
  sessions_[live->id] = live;

  std::lock_guard<std::mutex> lock(live->mu);
  json out = step_payload(*live);
  for (const auto& u : live->state.history) {
    messages.push_back({{"role", to_string(u.role)}, {"text", u.text}});
  }
  out["messages"] = messages;
  return out;
}

json SessionManager::step_payload(const Live& live) const {
  const auto& s = live.state;
  json out = {{"session_id", live.id},
              {"status", to_string(s.status)},
              {"turn", s.turn},
              {"max_turns", s.max_turns}};
  out["action"] = s.records.empty() ? json(nullptr) : action_payload(s.records.back().action);
  if (live.show_hypotheses && !s.records.empty()) {
    const auto& g = *config_.graph;
    json anchors = json::array();
    for (const auto& id : s.last_anchors) {
      anchors.push_back({{"id", id}, {"name", g.node(id).name}, {"score", s.last_scores.values.at(id)}});
    }
    auto ids = s.last_subgraph.disease_ids();
    std::stable_sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
      return s.last_scores.values.at(a) > s.last_scores.values.at(b);
    });
    json candidates = json::array();
    for (std::size_t i = 0; i < ids.size() && i < 5; ++i) {
      json shared = json::array();
      for (const auto& attr : g.neighbors(ids[i])) {
        if (s.ledger.confirmed().count(normalize_name(g.node(attr).name))) shared.push_back(g.node(attr).name);
      }
      candidates.push_back({{"id", ids[i]},
                            {"name", g.node(ids[i]).name},
                            {"score", s.last_scores.values.at(ids[i])},
                            {"shared_attributes", shared}});
    }
    out["hypotheses"] = {{"anchors", anchors}, {"candidates", candidates}};
  }
  if (is_terminal(s.status) && live.profile) out["gold"] = live.profile->gold_diseases;
  return out;
}

json SessionManager::post_message(const std::string& id, const json& body) {
  auto live = find(id);
  std::unique_lock<std::mutex> lock(live->mu, std::try_to_lock);
  if (!lock.owns_lock()) {
    throw ServiceError(409, "busy", "session '" + id + "' is processing another message");
  }
  if (!body.is_object()) throw bad_request("request body must be a JSON object");
  const auto text = trim(field<std::string>(body, "text", ""));
  if (text.empty()) throw bad_request("field 'text' must be a non-empty string");
  if (is_terminal(live->state.status)) {
    throw ServiceError(409, "finished", "session '" + id + "' has ended with status " +
                                            std::string(to_string(live->state.status)));
  }
  if (body.contains("expected_turn") && !body.at("expected_turn").is_null()) {
    const int expected = field<int>(body, "expected_turn", -1);
    if (expected != live->state.turn) {
      throw ServiceError(409, "turn_mismatch", "expected turn " + std::to_string(expected) +
                                                   " but the session is at turn " +
                                                   std::to_string(live->state.turn));
    }
  }
  const auto& g = *config_.graph;
  auto& c = live->components;
  SessionState next = live->state;
  PatientTurn pt;
  SystemTurn st;
  try {
    EvidenceExtractor& extractor = c.extractor ? *c.extractor : live->lexical;
    pt = patient_turn_from_text(next, g, text, extractor);
    apply(next, pt);
    st = compute_system_turn(g, next, *c.scorer, *c.verifier, live->run.hypothesis);
    apply(next, st);
  } catch (const std::logic_error& e) {
    throw ServiceError(409, "out_of_turn", e.what());
  } catch (const std::exception& e) {
    throw ServiceError(502, "backend_error", e.what(), true);
  }
  const auto at = config_.clock();
  log_.append(id, {{{"type", "patient_message"}, {"turn", to_json(pt)}, {"at", at}},
                   {{"type", "system_turn"}, {"turn", to_json(st)}, {"at", at}}});
  live->state = std::move(next);
  live->updated_at = at;
  return step_payload(*live);
}

json SessionManager::get(const std::string& id) const {
  auto live = find(id);
  std::lock_guard<std::mutex> lock(live->mu);
  json out = step_payload(*live);
  out["profile_id"] = live->profile ? json(live->profile->id) : json(nullptr);
  out["show_hypotheses"] = live->show_hypotheses;
  out["history"] = to_json(live->state.history);
  out["ratings"] = live->ratings ? to_json(*live->ratings) : json(nullptr);
  out["created_at"] = live->created_at;
  out["updated_at"] = live->updated_at;
  out["error"] = live->state.error;
  return out;
}

json SessionManager::rate(const std::string& id, const json& body) {
  auto live = find(id);
  std::lock_guard<std::mutex> lock(live->mu);
  if (!is_terminal(live->state.status)) {
    throw ServiceError(409, "active", "ratings are accepted only after the session ends");
  }
  RatingSet ratings;
  try {
    ratings = rating_from_json(body);
  } catch (const std::invalid_argument& e) {
    throw bad_request(e.what());
  }
  const auto at = config_.clock();
  log_.append(id, {{{"type", "rating"}, {"ratings", to_json(ratings)}, {"at", at}}});
  live->ratings = ratings;
  live->updated_at = at;
  return {{"session_id", id}, {"ratings", to_json(ratings)}, {"stored", true}};
}

std::string SessionManager::transcript(const std::string& id) const {
  auto live = find(id);
  std::lock_guard<std::mutex> lock(live->mu);
  if (!is_terminal(live->state.status)) {
    throw ServiceError(409, "active", "the transcript is available once the session ends");
  }
  auto t = make_transcript(*config_.graph, live->profile ? &*live->profile : nullptr, live->persona,
                           live->seed, live->state);
  t.ratings = live->ratings;
  return transcript_line(t);
}

void SessionManager::load(const std::string& id) {
  std::vector<json> events;
  try {
    events = log_.read(id);
  } catch (const std::exception& e) {
    recovery_notes_.push_back(id + ": unreadable log skipped (" + e.what() + ")");
    return;
  }
  if (events.empty() || events.front().value("type", "") != "created") {
    recovery_notes_.push_back(id + ": log without a creation event skipped");
    return;
  }
  auto live = std::make_shared<Live>();
  live->id = id;
  const auto& created = events.front();
  try {
    live->request = normalize_request(created.at("request"), config_.profiles, live->profile,
                                      live->persona, live->seed, live->run, live->backends,
                                      live->show_hypotheses);
    live->components = components_for(*live);
  } catch (const std::exception& e) {
    recovery_notes_.push_back(id + ": cannot restore configuration (" + e.what() + ")");
    return;
  }
  live->state = begin_session(live->run.max_turns);
  live->created_at = live->updated_at = created.value("at", "");

  // A patient message is only durable together with the system turn that
  // answers it; an unpaired one is the tail of an interrupted write.
  std::size_t applied = 1;
  for (std::size_t i = 1; i < events.size(); ++i) {
    const auto type = events[i].value("type", "");
    if (type == "patient_message") {
      if (i + 1 >= events.size() || events[i + 1].value("type", "") != "system_turn") break;
      apply(live->state, patient_turn_from_json(events[i].at("turn")));
      apply(live->state, system_turn_from_json(events[i + 1].at("turn")));
      live->updated_at = events[i + 1].value("at", live->updated_at);
      applied = i + 2;
      ++i;
    } else if (type == "rating") {
      live->ratings = rating_from_json(events[i].at("ratings"));
      live->updated_at = events[i].value("at", live->updated_at);
      applied = i + 1;
    } else {
      break;
    }
  }
  if (live->profile && live->state.history.empty()) {
    log_.remove(id);
    recovery_notes_.push_back(id + ": creation was interrupted; log removed");
    return;
  }
  if (applied < events.size()) {
    log_.truncate(id, applied);
    recovery_notes_.push_back(id + ": dropped " + std::to_string(events.size() - applied) +
                              " incomplete trailing event(s)");
  }
  sessions_[id] = live;
}

}  // namespace kgdx
