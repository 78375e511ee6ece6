#include "kgdx/patient_simulator.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <tuple>

#include "kgdx/assets.hpp"
#include "kgdx/rng.hpp"
#include "kgdx/text.hpp"

namespace kgdx {
namespace {

const std::set<std::string> kConnectives = {"in",  "the",  "of",   "on",   "at",   "my",
                                            "a",   "an",   "to",   "and",  "with", "around",
                                            "near", "from", "into", "over", "for",  "or"};

std::vector<std::string> strip_connectives(std::vector<std::string> words) {
  while (!words.empty() && kConnectives.count(words.back())) words.pop_back();
  auto first = std::find_if(words.begin(), words.end(),
                            [](const std::string& w) { return !kConnectives.count(w); });
  words.erase(words.begin(), first);
  return words;
}

std::string sentence(std::string text) {
  text = capitalize_first(trim(text));
  if (!text.empty() && text.back() != '.' && text.back() != '?' && text.back() != '!') {
    text.push_back('.');
  }
  return text;
}

void append(std::string& out, std::string_view more) {
  if (more.empty()) return;
  if (!out.empty()) out.push_back(' ');
  out += more;
}

std::vector<DetailKey> question_focus(const std::vector<std::string>& tokens) {
  std::set<DetailKey> keys;
  auto has = [&](std::initializer_list<std::string_view> words) {
    for (auto w : words) {
      if (std::find(tokens.begin(), tokens.end(), w) != tokens.end()) return true;
    }
    return false;
  };
  if (has({"long", "when", "start", "started", "begin", "began", "since"})) {
    keys.insert(DetailKey::duration);
    keys.insert(DetailKey::onset);
  }
  if (has({"where", "location", "spread"})) keys.insert(DetailKey::location);
  if (has({"feel", "feels", "describe", "like", "kind"})) keys.insert(DetailKey::character);
  if (has({"better", "worse", "trigger", "triggers", "relieve", "relieves", "helps"})) {
    keys.insert(DetailKey::factors);
  }
  return {keys.begin(), keys.end()};
}

const std::vector<DetailKey> kAllDetails = {DetailKey::location, DetailKey::character,
                                            DetailKey::onset, DetailKey::duration,
                                            DetailKey::factors};

std::string_view proficiency_guidance(Proficiency p) {
  switch (p) {
    case Proficiency::low:
      return "Use short, simple, sometimes fragmented sentences.";
    case Proficiency::medium:
      return "Use everyday language.";
    case Proficiency::high:
      return "Speak fluently and articulately.";
  }
  return "";
}

std::string_view personality_guidance(Personality p) {
  switch (p) {
    case Personality::plain:
      return "Be cooperative and straightforward.";
    case Personality::verbose:
      return "Talk a lot and drift into side stories.";
    case Personality::pleasing:
      return "Be eager to please and agree with the doctor.";
    case Personality::impatient:
      return "Be in a hurry and a little irritable.";
    case Personality::distrust:
      return "Be hesitant and question why information is needed.";
    case Personality::overanxious:
      return "Be worried and ask whether things are serious.";
  }
  return "";
}

std::string list_or_none(const std::vector<std::string>& items) {
  return items.empty() ? "none recorded" : join(items, "; ");
}

}  // namespace

RulePatientSimulator::RulePatientSimulator(const Lexicon& lexicon) : lexicon_(lexicon) {
  for (const auto& [region, terms] : lexicon_.family("location")) {
    if (region == "fallback") continue;
    for (const auto& t : terms) region_of_term_.emplace(to_lower(t), region);
  }
  for (const auto& w : lexicon_.values("laterality")) laterality_.push_back(to_lower(w));
  for (const auto& w : lexicon_.values("banned_character")) banned_.push_back(to_lower(w));
  for (const auto& [head, variants] : lexicon_.family("synonym")) {
    std::vector<std::vector<std::string>> group;
    group.push_back(tokenize(head));
    for (const auto& v : variants) group.push_back(tokenize(v));
    for (const auto& member : group) synonyms_[join(member, " ")] = group;
  }
}

RulePatientSimulator::Parts RulePatientSimulator::analyze(std::string_view text) const {
  Parts parts;
  std::vector<std::string> core;
  for (const auto& tok : tokenize(text)) {
    if (contains_digit(tok)) continue;
    if (std::find(banned_.begin(), banned_.end(), tok) != banned_.end()) continue;
    if (std::find(laterality_.begin(), laterality_.end(), tok) != laterality_.end()) continue;
    auto it = region_of_term_.find(tok);
    if (it != region_of_term_.end()) {
      if (parts.region.empty()) parts.region = it->second;
      continue;
    }
    core.push_back(tok);
  }
  parts.core = strip_connectives(std::move(core));
  return parts;
}

std::string RulePatientSimulator::vague_mention(std::string_view name) const {
  auto parts = analyze(name);
  std::string core = join(parts.core, " ");
  if (!parts.region.empty() && !core.empty()) return core + " in " + parts.region;
  if (!parts.region.empty()) return "something with " + parts.region;
  if (!core.empty()) return core;
  return "that";
}

std::string RulePatientSimulator::scrub(std::string_view text) const {
  std::vector<std::string> kept;
  for (const auto& word : split(text, ' ')) {
    if (word.empty()) continue;
    auto begin = word.find_first_not_of(",.;:!?\"'()");
    auto end = word.find_last_not_of(",.;:!?\"'()");
    std::string core = begin == std::string::npos ? "" : to_lower(word.substr(begin, end - begin + 1));
    if (std::find(banned_.begin(), banned_.end(), core) == banned_.end()) {
      kept.push_back(word);
      continue;
    }
    std::string tail = end == std::string::npos ? "" : word.substr(end + 1);
    if (!tail.empty() && !kept.empty()) kept.back() += tail;
  }
  return join(kept, " ");
}

std::string RulePatientSimulator::render_details(const DetailMap& details, const Persona& persona,
                                                 const std::vector<DetailKey>& focus,
                                                 Rng& rng) const {
  std::map<DetailKey, std::string> typed;
  for (const auto& [key, value] : details) {
    auto k = parse_detail_key(key);
    if (!k) throw std::invalid_argument("unknown symptom detail key '" + key + "'");
    typed.emplace(*k, value);
  }
  const bool low = persona.specificity == Specificity::low;
  std::string out;
  for (DetailKey key : kAllDetails) {
    auto it = typed.find(key);
    if (it == typed.end()) continue;
    if (std::find(focus.begin(), focus.end(), key) == focus.end()) continue;
    const std::string& value = it->second;
    std::string s;
    switch (key) {
      case DetailKey::location:
        if (low) {
          auto region = analyze(value).region;
          s = region.empty() ? "It's kind of " + rng.pick(lexicon_.values("location.fallback")) + "."
                             : "It's in " + region + ", I think.";
        } else {
          s = "It's in the " + value + ".";
        }
        break;
      case DetailKey::character:
        s = "It feels " + (low ? rng.pick(lexicon_.values("character")) : value) + ".";
        break;
      case DetailKey::onset:
        s = "It started " + (low ? rng.pick(lexicon_.values("onset")) : value) + ".";
        break;
      case DetailKey::duration:
        s = low ? "It's been going on " + rng.pick(lexicon_.values("duration")) + "."
                : "It has lasted " + value + ".";
        break;
      case DetailKey::factors:
        s = low ? rng.pick(lexicon_.values("factors")) : sentence(value);
        break;
    }
    append(out, s);
  }
  return out;
}

std::string RulePatientSimulator::decorate(std::string body, const Persona& persona,
                                           bool symptom_reply, std::uint64_t seed) const {
  Rng rng(derive_seed(seed, "persona"));
  std::string out;
  if (persona.confusion == ConfusionLevel::high) append(out, rng.pick(lexicon_.values("confusion.high")));
  if (persona.personality == Personality::distrust) {
    append(out, rng.pick(lexicon_.values("personality.distrust")));
  }
  append(out, body);
  if (symptom_reply && persona.proficiency == Proficiency::high &&
      persona.specificity == Specificity::low) {
    append(out, rng.pick(lexicon_.values("self_diagnosis")));
  }
  switch (persona.personality) {
    case Personality::overanxious:
      append(out, rng.pick(lexicon_.values("personality.overanxious")));
      break;
    case Personality::impatient:
      append(out, rng.pick(lexicon_.values("personality.impatient")));
      break;
    case Personality::pleasing:
      append(out, rng.pick(lexicon_.values("personality.pleasing")));
      break;
    default:
      break;
  }
  if (persona.personality == Personality::verbose) {
    Rng filler(derive_seed(seed, "filler"));
    append(out, filler.pick(lexicon_.values("filler")));
  }
  return persona.specificity == Specificity::low ? scrub(out) : out;
}

PatientReply RulePatientSimulator::opening_statement(const PatientProfile& profile,
                                                     const Persona& persona,
                                                     std::uint64_t seed) const {
  Rng rng(seed);
  PatientReply reply;
  auto cc_tokens = tokenize(profile.chief_complaint);
  for (const auto& item : profile.hpi_affirmed) {
    auto key = join(tokenize(item.name), " ");
    auto group = synonyms_.find(key);
    std::vector<std::vector<std::string>> phrases =
        group != synonyms_.end() ? group->second
                                 : std::vector<std::vector<std::string>>{tokenize(item.name)};
    for (const auto& ph : phrases) {
      if (!ph.empty() && find_phrase(cc_tokens, ph) != std::string::npos) {
        reply.disclosed.push_back(item.name);
        break;
      }
    }
  }
  reply.stance = reply.disclosed.empty() ? Stance::unknown : Stance::affirmed;
  if (reply.stance == Stance::unknown) reply.disclosed.clear();

  std::string body;
  if (persona.specificity == Specificity::normal) {
    std::string cc = trim(profile.chief_complaint);
    if (cc.empty()) {
      body = "I haven't been feeling well.";
    } else if (persona.proficiency == Proficiency::low) {
      body = sentence(cc);
    } else {
      body = "I'm here because of " + cc + ".";
    }
  } else {
    auto parts = analyze(profile.chief_complaint);
    std::string region = capitalize_first(parts.region);
    std::string core = join(parts.core, " ");
    const std::string& adj = rng.pick(lexicon_.values("character"));
    if (persona.proficiency == Proficiency::low) {
      body = region.empty() ? "Feel " + adj + "." : region + ". Feels " + adj + ".";
    } else if (!region.empty() && !core.empty()) {
      body = region + " has been bothering me. There's some " + core + " there and it feels " +
             adj + ".";
    } else if (!region.empty()) {
      body = region + " has been bothering me. It feels " + adj + ".";
    } else if (!core.empty()) {
      body = "I've been having some " + core + ". It feels " + adj + ".";
    } else {
      body = "I just don't feel right. Something feels " + adj + ".";
    }
  }
  reply.text = decorate(body, persona, true, seed);
  return reply;
}

PatientReply RulePatientSimulator::answer(const PatientProfile& profile, const Persona& persona,
                                          std::string_view question, std::uint64_t seed) const {
  const auto q = tokenize(question);
  enum class Category { affirmed = 0, denied = 1, background = 2 };
  struct Match {
    std::size_t position;
    std::size_t length;
    Category category;
    std::size_t index;
  };
  std::optional<Match> best;
  auto consider = [&](const std::vector<std::vector<std::string>>& phrases, Category cat,
                      std::size_t index) {
    for (const auto& ph : phrases) {
      if (ph.empty()) continue;
      auto pos = find_phrase(q, ph);
      if (pos == std::string::npos) continue;
      Match m{pos, ph.size(), cat, index};
      auto rank = [](const Match& x) {
        return std::make_tuple(x.position, ~x.length, static_cast<int>(x.category), x.index);
      };
      if (!best || rank(m) < rank(*best)) best = m;
    }
  };
  auto phrases_for = [&](std::string_view name) {
    auto key = join(tokenize(name), " ");
    auto group = synonyms_.find(key);
    if (group != synonyms_.end()) return group->second;
    return std::vector<std::vector<std::string>>{tokenize(name)};
  };
  for (std::size_t i = 0; i < profile.hpi_affirmed.size(); ++i) {
    consider(phrases_for(profile.hpi_affirmed[i].name), Category::affirmed, i);
  }
  for (std::size_t i = 0; i < profile.hpi_denied.size(); ++i) {
    consider(phrases_for(profile.hpi_denied[i]), Category::denied, i);
  }
  const auto background = profile.background.all();
  for (std::size_t i = 0; i < background.size(); ++i) {
    consider({tokenize(background_head(background[i])), tokenize(background[i])},
             Category::background, i);
  }

  Rng rng(seed);
  const bool low = persona.specificity == Specificity::low;
  PatientReply reply;
  std::string body;
  bool symptom_reply = false;
  if (!best) {
    reply.stance = Stance::unknown;
    body = rng.pick(lexicon_.values("unknown"));
  } else if (best->category == Category::affirmed) {
    const auto& item = profile.hpi_affirmed[best->index];
    reply.stance = Stance::affirmed;
    reply.disclosed.push_back(item.name);
    symptom_reply = true;
    body = "Yes, I've had " + (low ? vague_mention(item.name) : item.name) + ".";
    auto focus = question_focus(q);
    if (focus.empty()) focus = kAllDetails;
    append(body, render_details(item.details, persona, focus, rng));
  } else if (best->category == Category::denied) {
    const auto& name = profile.hpi_denied[best->index];
    reply.stance = Stance::denied;
    reply.disclosed.push_back(name);
    body = "No, I haven't had " + (low ? vague_mention(name) : name) + ".";
  } else {
    const auto& entry = background[best->index];
    reply.stance = Stance::affirmed;
    reply.disclosed.push_back(background_head(entry));
    if (persona.recall == RecallLevel::high) {
      body = "Yes. " + sentence(entry);
    } else {
      body = "I think I had " + background_head(entry) + " at some point. " +
             rng.pick(lexicon_.values("recall.low"));
    }
  }
  reply.text = decorate(body, persona, symptom_reply, seed);
  return reply;
}

std::string RulePatientSimulator::apply_specificity(const DetailMap& details,
                                                    const Persona& persona,
                                                    std::uint64_t seed) const {
  Rng rng(seed);
  std::string body = render_details(details, persona, kAllDetails, rng);
  if (body.empty()) return body;
  Rng extra(derive_seed(seed, "persona"));
  if (persona.proficiency == Proficiency::high && persona.specificity == Specificity::low) {
    append(body, extra.pick(lexicon_.values("self_diagnosis")));
  }
  if (persona.personality == Personality::verbose) {
    Rng filler(derive_seed(seed, "filler"));
    append(body, filler.pick(lexicon_.values("filler")));
  }
  return persona.specificity == Specificity::low ? scrub(body) : body;
}

std::string render_patient_prompt(const PatientProfile& profile, const Persona& persona,
                                  const History& history) {
  std::vector<std::string> affirmed;
  for (const auto& item : profile.hpi_affirmed) {
    std::vector<std::string> details;
    for (const auto& [k, v] : item.details) details.push_back(k + ": " + v);
    affirmed.push_back(details.empty() ? item.name
                                       : item.name + " (" + join(details, ", ") + ")");
  }
  std::map<std::string, std::string> values = {
      {"age", std::to_string(profile.age)},
      {"gender", std::string(to_string(profile.gender))},
      {"chief_complaint", profile.chief_complaint},
      {"affirmed", list_or_none(affirmed)},
      {"denied", list_or_none(profile.hpi_denied)},
      {"past_medical", list_or_none(profile.background.past_medical)},
      {"family", list_or_none(profile.background.family)},
      {"social", list_or_none(profile.background.social)},
      {"proficiency", std::string(to_string(persona.proficiency))},
      {"proficiency_guidance", std::string(proficiency_guidance(persona.proficiency))},
      {"personality", std::string(to_string(persona.personality))},
      {"personality_guidance", std::string(personality_guidance(persona.personality))},
      {"recall", std::string(to_string(persona.recall))},
      {"recall_guidance", persona.recall == RecallLevel::high
                              ? "You remember your medical history well."
                              : "You often cannot remember details of your medical history."},
      {"confusion", std::string(to_string(persona.confusion))},
      {"confusion_guidance", persona.confusion == ConfusionLevel::high
                                 ? "You are sometimes confused and drift off topic."
                                 : "Stay on topic."},
  };
  std::string prompt = render_template(asset("prompts/patient_base.txt"), values);

  if (persona.specificity == Specificity::low) {
    prompt += "\n" + std::string(asset("prompts/patient_low_specificity.txt"));
    if (persona.recall == RecallLevel::high) {
      prompt += "\n" + std::string(asset("prompts/patient_high_recall.txt"));
    }
    if (persona.proficiency == Proficiency::high) {
      prompt += "\n" + std::string(asset("prompts/patient_high_proficiency.txt"));
    }
    if (persona.personality == Personality::verbose) {
      prompt += "\n" + std::string(asset("prompts/patient_verbose.txt"));
    }
  }
  std::string rendered = history.empty() ? "\n(no conversation yet)" : "\n" + render_history(history);
  prompt += "\n" + render_template(asset("prompts/patient_dialogue.txt"), {{"history", rendered}});
  return prompt;
}

}  // namespace kgdx
