#include "kgdx/runner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "kgdx/rng.hpp"

namespace kgdx {

Transcript run_session(const KnowledgeGraph& g, const PatientProfile& profile,
                       const Persona& persona, Components& c, const RunConfig& config,
                       std::uint64_t session_seed) {
  validate(config);
  SessionState state = begin_session(config.max_turns);
  auto fail = [&](const std::exception& e) {
    state.status = SessionStatus::error;
    state.error = e.what();
  };
  try {
    auto opening = c.patient->opening(profile, persona, derive_seed(session_seed, "opening"));
    apply(state, c.extractor ? patient_turn_from_text(state, g, opening.text, *c.extractor)
                             : patient_turn_from_reply(state, g, opening));
  } catch (const std::exception& e) {
    fail(e);
  }
  while (state.status == SessionStatus::active) {
    try {
      apply(state, compute_system_turn(g, state, *c.scorer, *c.verifier, config.hypothesis));
      if (state.status != SessionStatus::active) break;
      const auto& question = state.history.back().text;
      auto reply = c.patient->reply(profile, persona, state.history, question,
                                    derive_seed(session_seed, "turn-" + std::to_string(state.turn)));
      apply(state, c.extractor ? patient_turn_from_text(state, g, reply.text, *c.extractor)
                               : patient_turn_from_reply(state, g, reply));
    } catch (const std::exception& e) {
      fail(e);
    }
  }
  return make_transcript(g, &profile, persona, session_seed, state);
}

Persona batch_persona(std::uint64_t run_seed, const std::string& profile_id) {
  Rng rng(derive_seed(run_seed, "persona:" + profile_id));
  return sample_persona(rng);
}

std::vector<Transcript> run_batch(const KnowledgeGraph& g, const std::vector<PatientProfile>& profiles,
                                  const ComponentFactory& factory, const RunConfig& config,
                                  const BatchOptions& options) {
  validate(config);
  std::vector<Transcript> out(profiles.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      Components c = factory();
      for (std::size_t i = next++; i < profiles.size(); i = next++) {
        const auto& p = profiles[i];
        Persona persona = options.persona ? *options.persona : batch_persona(config.seed, p.id);
        out[i] = run_session(g, p, persona, c, config, derive_seed(config.seed, p.id));
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(options.parallelism,
                                                            static_cast<unsigned>(profiles.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (unsigned i = 0; i < workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace kgdx
