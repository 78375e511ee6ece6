#include "kgdx/transcript.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "kgdx/subgraph.hpp"
#include "kgdx/text.hpp"

namespace kgdx {
namespace {

using nlohmann::json;

}  // namespace

void validate(const RatingSet& r) {
  for (auto [name, v] : {std::pair<const char*, int>{"essentiality", r.essentiality},
                         {"flow", r.flow},
                         {"authenticity", r.authenticity}}) {
    if (v < 1 || v > 5) {
      throw std::invalid_argument(std::string(name) + " must be an integer from 1 to 5, got " +
                                  std::to_string(v));
    }
  }
}

json to_json(const RatingSet& r) {
  return {{"essentiality", r.essentiality},
          {"flow", r.flow},
          {"authenticity", r.authenticity},
          {"comments", r.comments}};
}

RatingSet rating_from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("ratings must be a JSON object");
  RatingSet r;
  auto score = [&](const char* key) {
    if (!doc.contains(key) || !doc.at(key).is_number_integer()) {
      throw std::invalid_argument(std::string(key) + " must be an integer from 1 to 5");
    }
    return doc.at(key).get<int>();
  };
  r.essentiality = score("essentiality");
  r.flow = score("flow");
  r.authenticity = score("authenticity");
  if (doc.contains("comments")) {
    if (!doc.at("comments").is_string()) throw std::invalid_argument("comments must be a string");
    r.comments = doc.at("comments").get<std::string>();
  }
  validate(r);
  return r;
}

Transcript make_transcript(const KnowledgeGraph& g, const PatientProfile* profile,
                           const Persona& persona, std::uint64_t seed, const SessionState& state) {
  Transcript t;
  t.persona = persona;
  t.seed = seed;
  if (profile) {
    t.profile_id = profile->id;
    t.gold = profile->gold_diseases;
    t.gold_ids = resolve_diagnoses(profile->gold_diseases, g).resolved;
    t.grounding = grounding_ratio(g, *profile);
  }
  t.records = state.records;
  t.status = state.status;
  if (state.status == SessionStatus::diagnosed && state.final_action) {
    t.diagnoses = state.final_action->diagnoses;
    auto res = resolve_diagnoses(t.diagnoses, g);
    t.diagnosis_ids = res.resolved;
    t.unresolved = res.unresolved;
  }
  t.turns_used = state.turn;
  t.max_turns = state.max_turns;
  t.final_anchors = state.last_anchors;
  t.final_subgraph_diseases = state.last_subgraph.disease_ids();
  std::sort(t.final_subgraph_diseases.begin(), t.final_subgraph_diseases.end());
  t.history = state.history;
  t.error = state.error;
  return t;
}

json to_json(const Transcript& t) {
  return {{"schema", kTranscriptSchema},
          {"profile_id", t.profile_id},
          {"persona", to_json(t.persona)},
          {"seed", t.seed},
          {"gold", t.gold},
          {"gold_ids", t.gold_ids},
          {"records", to_json(t.records)},
          {"status", to_string(t.status)},
          {"diagnoses", t.diagnoses},
          {"diagnosis_ids", t.diagnosis_ids},
          {"unresolved", t.unresolved},
          {"turns_used", t.turns_used},
          {"max_turns", t.max_turns},
          {"grounding", t.grounding},
          {"final_anchors", t.final_anchors},
          {"final_subgraph_diseases", t.final_subgraph_diseases},
          {"history", to_json(t.history)},
          {"error", t.error},
          {"ratings", t.ratings ? to_json(*t.ratings) : json(nullptr)}};
}

Transcript transcript_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("schema")) throw SchemaError("transcript has no schema field");
  auto schema = doc.at("schema").get<std::string>();
  if (schema != kTranscriptSchema) {
    throw SchemaError("unsupported transcript schema '" + schema + "', expected '" +
                      std::string(kTranscriptSchema) + "'");
  }
  try {
    Transcript t;
    t.profile_id = doc.at("profile_id").get<std::string>();
    t.persona = persona_from_json(doc.at("persona"));
    t.seed = doc.at("seed").get<std::uint64_t>();
    t.gold = doc.at("gold").get<std::vector<std::string>>();
    t.gold_ids = doc.at("gold_ids").get<std::vector<std::string>>();
    for (const auto& r : doc.at("records")) t.records.push_back(turn_record_from_json(r));
    t.status = parse_session_status(doc.at("status").get<std::string>());
    t.diagnoses = doc.at("diagnoses").get<std::vector<std::string>>();
    t.diagnosis_ids = doc.at("diagnosis_ids").get<std::vector<std::string>>();
    t.unresolved = doc.at("unresolved").get<std::vector<std::string>>();
    t.turns_used = doc.at("turns_used").get<int>();
    t.max_turns = doc.at("max_turns").get<int>();
    t.grounding = doc.at("grounding").get<double>();
    t.final_anchors = doc.at("final_anchors").get<std::vector<std::string>>();
    t.final_subgraph_diseases = doc.at("final_subgraph_diseases").get<std::vector<std::string>>();
    t.history = history_from_json(doc.at("history"));
    t.error = doc.at("error").get<std::string>();
    if (!doc.at("ratings").is_null()) t.ratings = rating_from_json(doc.at("ratings"));
    return t;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed transcript: ") + e.what());
  }
}

std::string transcript_line(const Transcript& t) { return to_json(t).dump() + "\n"; }

void write_transcripts(const std::filesystem::path& path, const std::vector<Transcript>& ts) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& t : ts) out << transcript_line(t);
}

std::vector<Transcript> read_transcripts(const std::filesystem::path& path) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<Transcript> out;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      try {
        out.push_back(transcript_from_json(json::parse(line)));
      } catch (const json::parse_error& e) {
        throw SchemaError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
      } catch (const SchemaError& e) {
        throw SchemaError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  return out;
}

}  // namespace kgdx
