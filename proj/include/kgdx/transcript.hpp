#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgdx/session.hpp"

namespace kgdx {

inline constexpr std::string_view kTranscriptSchema = "kgdx.transcript/1";

struct RatingSet {
  int essentiality = 0;
  int flow = 0;
  int authenticity = 0;
  std::string comments;

  bool operator==(const RatingSet&) const = default;
};

/// Throws std::invalid_argument unless every score is an integer in [1, 5].
void validate(const RatingSet& ratings);
nlohmann::json to_json(const RatingSet& ratings);
RatingSet rating_from_json(const nlohmann::json& doc);

struct Transcript {
  std::string profile_id;
  Persona persona;
  std::uint64_t seed = 0;
  std::vector<std::string> gold;      // names as given by the profile
  std::vector<std::string> gold_ids;  // resolved against the graph
  std::vector<TurnRecord> records;
  SessionStatus status = SessionStatus::active;
  std::vector<std::string> diagnoses;     // names, verifier order
  std::vector<std::string> diagnosis_ids;  // resolved subset, same order
  std::vector<std::string> unresolved;
  int turns_used = 0;
  int max_turns = 50;
  double grounding = 0.0;
  std::vector<std::string> final_anchors;
  std::vector<std::string> final_subgraph_diseases;
  History history;
  std::string error;
  std::optional<RatingSet> ratings;

  bool operator==(const Transcript&) const = default;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds the transcript of a finished (or interrupted) session. `profile` may
/// be null for sessions without a scripted patient.
Transcript make_transcript(const KnowledgeGraph& g, const PatientProfile* profile,
                           const Persona& persona, std::uint64_t seed, const SessionState& state);

nlohmann::json to_json(const Transcript& t);
/// Throws SchemaError when the schema field is missing or different.
Transcript transcript_from_json(const nlohmann::json& doc);

/// One JSON document plus a newline; keys sorted, so output is byte-stable.
std::string transcript_line(const Transcript& t);

void write_transcripts(const std::filesystem::path& path, const std::vector<Transcript>& ts);

/// Reads a .jsonl file, or every *.jsonl file in a directory in filename order.
std::vector<Transcript> read_transcripts(const std::filesystem::path& path);

}  // namespace kgdx
