#include <random>

#include "doctest.h"
#include "kgdx/text.hpp"
#include "kgdx/verifier.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

using namespace kgdx;

namespace {

// D1 and D2 both cause y; only D1 causes x.
KnowledgeGraph pair_graph() {
  return KnowledgeGraph::build(
      {{"D1", "disease one", NodeKind::disease},
       {"D2", "disease two", NodeKind::disease},
       {"x", "symptom x", NodeKind::symptom},
       {"y", "symptom y", NodeKind::symptom}},
      {{"x", "D1", Relation::caused_by}, {"y", "D1", Relation::caused_by},
       {"y", "D2", Relation::caused_by}});
}

DiseaseScores flat(const KnowledgeGraph& g, double value) {
  DiseaseScores s;
  for (const auto& d : g.ids_of_kind(NodeKind::disease)) s.values[d] = value;
  return s;
}

std::string random_words(std::mt19937_64& rng, int min_words, int max_words) {
  static const std::vector<std::string> words = {
      "pain",  "chest",  "the",   "patient", "reports", "fever",  "(COPD)", "since",
      "two",   "weeks",  "no",    "nausea",  "is",      "likely", "and",    "risk",
      "cough", "maybe?", "heart", "failure", "it's",    "d3",     "x-ray",  "worse"};
  const int count = min_words + static_cast<int>(rng() % (max_words - min_words + 1));
  std::string out;
  for (int i = 0; i < count; ++i) {
    if (i) out += (rng() % 7 == 0) ? "\n" : " ";
    out += words[rng() % words.size()];
  }
  return out;
}

VerifierAction random_action(std::mt19937_64& rng) {
  VerifierAction a;
  a.think = random_words(rng, 1, 40);
  if (rng() % 2) {
    a.kind = ActionKind::question;
    a.question = random_words(rng, 1, 15);
  } else {
    a.kind = ActionKind::diagnosis;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) a.diagnoses.push_back(random_words(rng, 1, 4));
  }
  return a;
}

ParseErrorKind parse_error_kind(std::string_view raw) {
  try {
    parse_action(raw);
  } catch (const ParseError& e) {
    return e.kind();
  }
  FAIL("no ParseError thrown for: " << raw);
  return ParseErrorKind::no_action;
}

}  // namespace

TEST_SUITE("hypothesis_verification") {
  TEST_CASE("verifier prompt carries the decision rules and inputs") {
    History h = {{Role::patient, "I have a headache."}, {Role::system, "Have you experienced nausea?"}};
    auto prompt = render_hv_prompt(h, {"Migraine causes headache", "Migraine causes nausea"});
    CHECK(prompt.find("Return exactly one action") != std::string::npos);
    CHECK(prompt.find("Migraine causes nausea") != std::string::npos);
    CHECK(prompt.find("I have a headache.") != std::string::npos);
    CHECK(prompt.find("{subgraph}") == std::string::npos);
    CHECK(prompt.find("{dialogue}") == std::string::npos);

    auto empty = render_hv_prompt(h, {});
    CHECK(empty.find("- Knowledge Graph: \n") != std::string::npos);
    CHECK(empty.find("I have a headache.") != std::string::npos);
  }

  TEST_CASE("verifier prompt golden on the toy fixture") {
    const auto& g = test::toy_graph();
    auto sub = expand_oracle_subgraph(g, {"d10"});
    History h = {{Role::patient, "I'm here because of headache."},
                 {Role::system, "Have you experienced light sensitivity?"},
                 {Role::patient, "Yes, I've had light sensitivity."}};
    CHECK(test::matches_golden("hv_prompt_migraine.txt", render_hv_prompt(h, linearize(sub, g))));
  }

  TEST_CASE("first stored example parses to a diagnosis") {
    auto action = parse_action(test::read_file(test::test_data("verifier_output_diagnosis.txt")));
    CHECK(action.kind == ActionKind::diagnosis);
    CHECK(action.diagnoses ==
          std::vector<std::string>{"congestive heart failure", "atrial fibrillation",
                                   "chronic obstructive pulmonary disease (COPD)", "pericarditis"});
    CHECK(action.think.rfind("Based on the patient's symptoms of chest tightness", 0) == 0);
  }

  TEST_CASE("second stored example parses to a question") {
    auto action = parse_action(test::read_file(test::test_data("verifier_output_question.txt")));
    CHECK(action.kind == ActionKind::question);
    CHECK(action.question ==
          "Have you noticed any changes in your bowel movements, like diarrhea or constipation?");
  }

  TEST_CASE("parse errors are typed") {
    CHECK(parse_error_kind("<question>Fever?</question>") == ParseErrorKind::missing_think);
    CHECK(parse_error_kind("<think>hmm</think>") == ParseErrorKind::no_action);
    CHECK(parse_error_kind("<think>hmm</think><question>Fever?</question><diagnosis>flu</diagnosis>") ==
          ParseErrorKind::multiple_actions);
    CHECK(parse_error_kind("<think>hmm</think><question>A?</question><question>B?</question>") ==
          ParseErrorKind::multiple_actions);
    CHECK(parse_error_kind("<think>hmm</think><question>  </question>") == ParseErrorKind::empty_payload);
    CHECK(parse_error_kind("<think>hmm</think><diagnosis> , ,</diagnosis>") ==
          ParseErrorKind::empty_payload);
    CHECK(parse_error_kind("<think>hmm</think><question>Fever?") == ParseErrorKind::unterminated);
  }

  TEST_CASE("diagnosis lists are trimmed and capped") {
    auto a = parse_action("<think>x</think>\n<diagnosis> a , b,c, d, e </diagnosis>");
    CHECK(a.diagnoses == std::vector<std::string>{"a", "b", "c", "d"});
    auto b = parse_action("<think>x</think><diagnosis>a, b, c</diagnosis>", 2);
    CHECK(b.diagnoses.size() == 2);
  }

  TEST_CASE("format then parse is the identity") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 1000; ++i) {
      auto action = random_action(rng);
      CHECK(parse_action(format_action(action)) == action);
      CHECK(action_from_json(to_json(action)) == action);
    }
  }

  TEST_CASE("diagnosis names resolve against the toy graph") {
    auto action = parse_action(test::read_file(test::test_data("verifier_output_diagnosis.txt")));
    auto r = resolve_diagnoses(action.diagnoses, test::toy_graph());
    CHECK(r.resolved == std::vector<std::string>{"d01", "d02"});
    CHECK(r.unresolved ==
          std::vector<std::string>{"chronic obstructive pulmonary disease (COPD)", "pericarditis"});
    auto cased = resolve_diagnoses({"  Atrial   FIBRILLATION ", "fever", "asthma"}, test::toy_graph());
    CHECK(cased.resolved == std::vector<std::string>{"d02", "d05"});
    CHECK(cased.unresolved == std::vector<std::string>{"fever"});
  }

  TEST_CASE("question templates per attribute kind") {
    CHECK(question_for({"s", "fever", NodeKind::symptom}) == "Have you experienced fever?");
    CHECK(question_for({"r", "smoking", NodeKind::risk_factor}) ==
          "Do you have smoking or a history of it?");
    CHECK(question_for({"c", "mold", NodeKind::cause}) == "Have you been exposed to mold?");
    CHECK_THROWS_AS(question_for({"d", "flu", NodeKind::disease}), std::invalid_argument);
  }

  TEST_CASE("single candidate is diagnosed immediately") {
    auto g = pair_graph();
    auto scores = flat(g, 0.1);
    auto sub = expand_subgraph(g, {"D1"}, {{"D1", 0.1}, {"D2", 0.0}}, 0.05);
    REQUIRE(sub.disease_ids() == std::vector<std::string>{"D1"});
    auto d = rule_decide(g, sub, scores, {}, {}, VerifierConfig{});
    CHECK(d.action.kind == ActionKind::diagnosis);
    CHECK(d.action.diagnoses == std::vector<std::string>{"disease one"});
  }

  TEST_CASE("the splitting attribute beats the shared one") {
    auto g = pair_graph();
    auto scores = flat(g, 0.1);
    auto sub = expand_subgraph(g, {"D1", "D2"}, scores.values, 0.0);
    auto d = rule_decide(g, sub, scores, {}, {}, VerifierConfig{});
    CHECK(d.action.kind == ActionKind::question);
    CHECK(d.target_attribute == "x");
    CHECK(d.action.question == "Have you experienced symptom x?");
    auto after = rule_decide(g, sub, scores, {}, {"symptom x"}, VerifierConfig{});
    CHECK(after.action.kind == ActionKind::diagnosis);
  }

  TEST_CASE("stopping rules") {
    auto g = pair_graph();
    auto sub = expand_subgraph(g, {"D1", "D2"}, flat(g, 0.1).values, 0.0);
    DiseaseScores strong{{{"D1", 0.2}, {"D2", 0.95}}, ScoreSource::evidence};
    auto d = rule_decide(g, sub, strong, {}, {}, VerifierConfig{});
    CHECK(d.action.diagnoses == std::vector<std::string>{"disease two", "disease one"});
    auto limit = rule_decide(g, sub, flat(g, 0.1), {}, {}, VerifierConfig{}, true);
    CHECK(limit.action.kind == ActionKind::diagnosis);
    EvidenceLedger ledger;
    ledger.deny("Symptom X");
    CHECK(rule_decide(g, sub, flat(g, 0.1), ledger, {}, VerifierConfig{}).action.kind ==
          ActionKind::diagnosis);
    CHECK_THROWS_AS(rule_decide(g, Subgraph{}, flat(g, 0.1), {}, {}, VerifierConfig{}),
                    std::invalid_argument);
  }

  TEST_CASE("degree breaks gain ties") {
    // a and b each split {D1, D2}; b is also linked to D3 outside the candidates.
    auto g = KnowledgeGraph::build({{"D1", "one", NodeKind::disease},
                                    {"D2", "two", NodeKind::disease},
                                    {"D3", "three", NodeKind::disease},
                                    {"a", "alpha", NodeKind::symptom},
                                    {"b", "beta", NodeKind::symptom}},
                                   {{"a", "D1", Relation::caused_by},
                                    {"b", "D2", Relation::caused_by},
                                    {"b", "D3", Relation::caused_by}});
    CHECK(select_attribute(g, {"D1", "D2"}, {}, {}) == "b");
    CHECK(select_attribute(g, {"D1", "D2"}, {}, {"beta"}) == "a");
    CHECK(select_attribute(g, {"D1"}, {}, {}) == std::nullopt);
  }

  TEST_CASE("rule sessions never repeat and always end") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
      auto raw = test::random_graph(rng, 40);
      auto g = KnowledgeGraph::build(raw.nodes, raw.edges);
      auto diseases = g.ids_of_kind(NodeKind::disease);
      if (diseases.empty()) continue;
      auto scores = flat(g, 0.1);
      auto sub = expand_subgraph(g, {diseases.front()}, scores.values, 0.0);
      EvidenceLedger ledger;
      std::set<std::string> asked;
      std::size_t questions = 0;
      const std::size_t attributes = g.nodes().size() - diseases.size();
      while (true) {
        auto d = rule_decide(g, sub, scores, ledger, asked, VerifierConfig{});
        if (d.action.kind == ActionKind::diagnosis) {
          CHECK(d.action.diagnoses.size() <= 4);
          CHECK(!d.action.diagnoses.empty());
          break;
        }
        REQUIRE(d.target_attribute);
        auto key = normalize_name(g.node(*d.target_attribute).name);
        CHECK(!asked.count(key));
        CHECK(!ledger.contains(key));
        asked.insert(key);
        if (rng() % 2) ledger.confirm(key);
        REQUIRE(++questions <= attributes);
      }
    }
  }

  TEST_CASE("uniform twenty candidates keep asking") {
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    for (int i = 0; i < 20; ++i) {
      auto id = "d" + std::to_string(100 + i);
      nodes.push_back({id, "disease " + id, NodeKind::disease});
      nodes.push_back({"s" + std::to_string(100 + i), "symptom " + id, NodeKind::symptom});
      edges.push_back({"s" + std::to_string(100 + i), id, Relation::caused_by});
    }
    auto g = KnowledgeGraph::build(nodes, edges);
    auto outcome = cod_decide(g, flat(g, 0.3), VerifierConfig{});
    CHECK(outcome.confidence == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(!outcome.action);
    CHECK(outcome.candidates.size() == 20);
    auto zero = cod_decide(g, flat(g, 0.0), VerifierConfig{});
    CHECK(zero.confidence == doctest::Approx(0.15).epsilon(1e-12));
  }

  TEST_CASE("a 0.6 top-3 share stops only below the threshold") {
    const auto& g = test::toy_graph();
    // 3 x 0.5 against a total of 2.5
    DiseaseScores s{{}, ScoreSource::retrieval};
    int i = 0;
    for (const auto& d : g.ids_of_kind(NodeKind::disease)) {
      s.values[d] = i < 3 ? 0.5 : (i < 7 ? 0.25 : 0.0);
      ++i;
    }
    for (double threshold : {0.5, 0.55, 0.6}) {
      VerifierConfig cfg;
      cfg.cod_threshold = threshold;
      auto outcome = cod_decide(g, s, cfg);
      CHECK(outcome.confidence == 0.6);
      CHECK(outcome.action.has_value() == (threshold < 0.6));
      if (outcome.action) {
        CHECK(outcome.action->diagnoses ==
              std::vector<std::string>{"congestive heart failure", "atrial fibrillation", "angina",
                                       "pneumonia"});
      }
    }
  }

  TEST_CASE("cod single candidate and scale invariance") {
    auto g = pair_graph();
    DiseaseScores one{{{"D1", 1.0}, {"D2", 0.0}}, ScoreSource::retrieval};
    VerifierConfig cfg;
    cfg.cod_threshold = 0.99;
    CHECK(cod_decide(g, one, cfg).confidence == 1.0);
    CHECK(cod_decide(g, one, cfg).action);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& toy = test::toy_graph();
    for (int trial = 0; trial < 100; ++trial) {
      DiseaseScores s;
      for (const auto& d : toy.ids_of_kind(NodeKind::disease)) s.values[d] = unit(rng);
      DiseaseScores scaled = s;
      const double factor = 0.01 + unit(rng) * 100.0;
      for (auto& [d, v] : scaled.values) v *= factor;
      VerifierConfig small;
      small.cod_top = 1 + rng() % 12;
      CHECK(cod_decide(toy, scaled, small).confidence ==
            doctest::Approx(cod_decide(toy, s, small).confidence).epsilon(1e-12));
    }
  }

  TEST_CASE("cod context lists one-hop attributes") {
    const auto& g = test::toy_graph();
    auto text = render_cod_context(g, {"d03"});
    CHECK(text == "- angina: smoking, shortness of breath, chest pain");
    auto prompt = render_cod_prompt(g, {"d03"}, {{Role::patient, "My chest hurts."}});
    CHECK(prompt.find("- angina: smoking") != std::string::npos);
    CHECK(prompt.find("My chest hurts.") != std::string::npos);
  }

  TEST_CASE("cod verifier without a model asks a splitting question") {
    const auto& g = test::toy_graph();
    History h;
    auto scores = flat(g, 0.3);
    Subgraph sub;
    EvidenceLedger ledger;
    std::set<std::string> asked;
    CodVerifier verifier;
    auto d = verifier.decide({g, h, sub, scores, ledger, asked, false});
    CHECK(d.action.kind == ActionKind::question);
    CHECK(d.target_attribute.has_value());
    auto limit = verifier.decide({g, h, sub, scores, ledger, asked, true});
    CHECK(limit.action.kind == ActionKind::diagnosis);
    CHECK(limit.action.diagnoses.size() == 4);
  }

  TEST_CASE("external verifier retries then forces a diagnosis") {
    const auto& g = test::toy_graph();
    History h = {{Role::patient, "I'm here because of headache."}};
    EvidenceLedger ledger;
    ledger.confirm("headache");
    auto scores = evidence_scores(g, ledger);
    auto sub = expand_subgraph(g, {"d10", "d11"}, scores.values, 0.005);
    std::set<std::string> asked;
    VerifierInput in{g, h, sub, scores, ledger, asked, false};

    auto recovering = std::make_shared<test::ScriptedChat>(std::vector<std::string>{
        "no tags here", "<think>ok</think><question>Any nausea?</question>"});
    auto d = ExternalVerifier(recovering).decide(in);
    CHECK(d.action.question == "Any nausea?");
    CHECK(d.parse_failures == 1);
    CHECK(!d.forced);
    CHECK(recovering->prompts.size() == 2);
    CHECK(recovering->prompts[0].find("migraine causes headache") != std::string::npos);

    auto broken = std::make_shared<test::ScriptedChat>(std::vector<std::string>{"garbage"});
    auto forced = ExternalVerifier(broken).decide(in);
    CHECK(forced.forced);
    CHECK(forced.parse_failures == 3);
    CHECK(broken->prompts.size() == 3);
    CHECK(forced.action.kind == ActionKind::diagnosis);
    CHECK(forced.action.diagnoses.size() <= 4);
    CHECK(forced.action.diagnoses.front() == "migraine");
  }

  TEST_CASE("config validation") {
    VerifierConfig c;
    CHECK_NOTHROW(validate(c));
    c.max_diagnoses = 5;
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
    c = {};
    c.cod_threshold = 1.2;
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
    c = {};
    c.parse_retries = -1;
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
  }
}
