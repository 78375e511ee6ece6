#include "kgdx/synthetic.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "kgdx/assets.hpp"
#include "kgdx/model_client.hpp"
#include "kgdx/rng.hpp"
#include "kgdx/subgraph.hpp"
#include "kgdx/text.hpp"
#include "kgdx/verifier.hpp"

namespace kgdx {
namespace {

using nlohmann::json;

// Gold names first, then the clinician's other picks, at most four.
std::vector<std::string> gold_first(const std::vector<std::string>& gold,
                                    const std::vector<std::string>& picked) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& list : {gold, picked}) {
    for (const auto& name : list) {
      if (out.size() == 4) return out;
      if (seen.insert(normalize_name(name)).second) out.push_back(name);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Tier tier) {
  switch (tier) {
    case Tier::high:
      return "high";
    case Tier::moderate:
      return "moderate";
    case Tier::low:
      return "low";
  }
  return "moderate";
}

Tier tier_for(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("grounding ratio must lie in [0, 1]");
  if (gamma > 0.7) return Tier::high;
  if (gamma > 0.3) return Tier::moderate;
  return Tier::low;
}

json to_json(const SyntheticExample& e) {
  return {{"profile_id", e.profile_id}, {"turn", e.turn},       {"instruction", e.instruction},
          {"history", to_json(e.history)}, {"subgraph", e.subgraph}, {"target", e.target},
          {"tier", to_string(e.tier)}};
}

std::string render_synthetic_prompt(const std::vector<std::string>& gold_names, double gamma,
                                    const std::vector<std::string>& statements,
                                    const History& history, int max_turn) {
  std::size_t system_turns = 0;
  for (const auto& u : history) system_turns += u.role == Role::system ? 1 : 0;
  return render_template(
      asset("prompts/synthetic_dialogue_prompt.txt"),
      {{"max_turn", std::to_string(max_turn)},
       {"gold_disease", join(gold_names, ", ")},
       {"relevance_score", format_fixed(gamma, 2)},
       {"subgraph", statements.empty() ? "" : "\n" + join(statements, "\n")},
       {"dialogue", history.empty() ? "" : "\n" + render_history(history)},
       {"dialogue_length", std::to_string(system_turns)}});
}

SyntheticResult generate_synthetic_dialogue(const PatientProfile& profile, const KnowledgeGraph& g,
                                            ChatModel& clinician, PatientBackend& patient,
                                            const Persona& persona, std::uint64_t seed,
                                            int max_turn, int parse_retries) {
  SyntheticResult result;
  auto gold = resolve_diagnoses(profile.gold_diseases, g);
  if (!gold.unresolved.empty()) {
    result.skipped = true;
    result.skip_reason = "profile " + profile.id + ": gold disease not in graph: " +
                         join(gold.unresolved, ", ");
    return result;
  }
  if (max_turn < 1) throw std::invalid_argument("max_turn must be at least 1");
  std::vector<std::string> gold_names;
  for (const auto& id : gold.resolved) gold_names.push_back(g.node(id).name);
  const double gamma = grounding_ratio(g, profile);
  const Tier tier = tier_for(gamma);
  const Subgraph oracle = expand_oracle_subgraph(g, gold.resolved);
  const auto statements = linearize(oracle, g);

  SessionState state = begin_session(max_turn);
  auto opening = patient.opening(profile, persona, derive_seed(seed, "opening"));
  apply(state, patient_turn_from_reply(state, g, opening));

  while (state.status == SessionStatus::active) {
    const int turn = state.turn + 1;
    std::string prompt = render_synthetic_prompt(gold_names, gamma, statements, state.history, max_turn);
    std::optional<VerifierAction> action;
    for (int attempt = 0; attempt <= parse_retries && !action; ++attempt) {
      try {
        action = parse_action(clinician.complete(prompt));
      } catch (const ParseError&) {
      }
    }
    if (!action) {
      action = VerifierAction{"The clinician output could not be parsed; closing with a diagnosis.",
                              ActionKind::diagnosis, "", {}};
    }
    if (turn >= max_turn && action->kind == ActionKind::question) {
      action->kind = ActionKind::diagnosis;
      action->question.clear();
      action->think += action->think.empty() ? "" : " ";
      action->think += "Committing to a final diagnosis.";
    }
    if (action->kind == ActionKind::diagnosis) {
      action->diagnoses = gold_first(gold_names, action->diagnoses);
    }

    SyntheticExample example;
    example.profile_id = profile.id;
    example.turn = turn;
    example.instruction = render_hv_prompt(state.history, statements);
    example.history = state.history;
    example.subgraph = statements;
    example.target = format_action(*action);
    example.tier = tier;
    result.examples.push_back(std::move(example));

    SystemTurn st;
    st.turn = turn;
    st.anchors = gold.resolved;
    st.subgraph = oracle;
    st.decision.action = *action;
    st.utterance = action->kind == ActionKind::diagnosis ? diagnosis_utterance(action->diagnoses)
                                                         : action->question;
    apply(state, st);
    if (state.status != SessionStatus::active) break;
    auto reply = patient.reply(profile, persona, state.history, st.utterance,
                               derive_seed(seed, "turn-" + std::to_string(turn)));
    apply(state, patient_turn_from_reply(state, g, reply));
  }
  result.transcript = make_transcript(g, &profile, persona, seed, state);
  return result;
}

std::size_t variant_count(std::size_t system_turns, double fraction) {
  if (system_turns <= 1) return 0;
  // The epsilon keeps products such as 0.2 * 35 from flooring one short.
  auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(system_turns) + 1e-9));
  count = std::max<std::size_t>(1, count);
  return std::min(count, system_turns - 1);
}

std::vector<TruncatedVariant> truncate_variants(const Transcript& dialogue, double fraction,
                                                std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must lie in [0, 1]");
  const auto& h = dialogue.history;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i].role != (i % 2 == 0 ? Role::patient : Role::system)) {
      throw std::invalid_argument("history must alternate patient and system turns, patient first");
    }
  }
  const std::size_t system_turns = h.size() / 2;
  const std::size_t count = variant_count(system_turns, fraction);
  std::vector<TruncatedVariant> out;
  if (count == 0) return out;
  Rng rng(seed);
  for (auto index : rng.sample_without_replacement(system_turns - 1, count)) {
    const std::size_t k = index + 1;
    TruncatedVariant v;
    v.profile_id = dialogue.profile_id;
    v.truncation_point = static_cast<int>(k);
    v.history.assign(h.begin(), h.begin() + static_cast<long>(2 * k - 1));
    v.gold = dialogue.gold;
    out.push_back(std::move(v));
  }
  return out;
}

json to_json(const TruncatedVariant& v) {
  return {{"profile_id", v.profile_id},
          {"truncation_point", v.truncation_point},
          {"history", to_json(v.history)},
          {"gold", v.gold}};
}

}  // namespace kgdx
