#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "kgdx/knowledge_graph.hpp"
#include "kgdx/profile.hpp"
#include "kgdx/session.hpp"
#include "kgdx/transcript.hpp"

namespace kgdx {

/// Runs one scripted session to completion: opening statement, then score,
/// hypothesize, decide and answer until a diagnosis or the turn limit.
/// Backend exceptions end the session with status error.
Transcript run_session(const KnowledgeGraph& g, const PatientProfile& profile,
                       const Persona& persona, Components& components, const RunConfig& config,
                       std::uint64_t session_seed);

struct BatchOptions {
  unsigned parallelism = 1;
  std::optional<Persona> persona;  // unset: sample one per profile
};

using ComponentFactory = std::function<Components()>;

/// Per-session seed = derive_seed(config.seed, profile id). Results keep the
/// order of `profiles` whatever the parallelism.
std::vector<Transcript> run_batch(const KnowledgeGraph& g, const std::vector<PatientProfile>& profiles,
                                  const ComponentFactory& factory, const RunConfig& config,
                                  const BatchOptions& options = {});

/// Persona drawn for a profile in a batch run.
Persona batch_persona(std::uint64_t run_seed, const std::string& profile_id);

}  // namespace kgdx
