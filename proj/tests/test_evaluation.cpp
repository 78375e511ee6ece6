#include <algorithm>
#include <random>

#include "doctest.h"
#include "kgdx/evaluation.hpp"
#include "kgdx/rng.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"

using namespace kgdx;

namespace {

Transcript session(std::string id, SessionStatus status, std::vector<std::string> gold,
                   std::vector<std::string> diagnoses, std::vector<std::string> anchors,
                   std::vector<std::string> subgraph, int turns) {
  Transcript t;
  t.profile_id = std::move(id);
  t.status = status;
  t.gold_ids = std::move(gold);
  t.diagnosis_ids = std::move(diagnoses);
  t.final_anchors = std::move(anchors);
  t.final_subgraph_diseases = std::move(subgraph);
  t.turns_used = turns;
  t.max_turns = 50;
  return t;
}

// Hand-computed table:
//        R@1  R@2  R@3  R@4  HG   SG   turns
//   a    1    1    1    1    1    1    5
//   b    0    .5   1    1    .5   .5   7
//   c    0    0    0    0    1    1    50 (failure)
//   d    0    0    0    0    0    0    3
std::vector<Transcript> mixed_batch() {
  auto a = session("a", SessionStatus::diagnosed, {"d1"}, {"d1", "d2"}, {"d1", "d2"}, {"d1", "d2", "d3"}, 5);
  auto b = session("b", SessionStatus::diagnosed, {"d1", "d2"}, {"d3", "d2", "d1"}, {"d2", "d3"},
                   {"d2", "d3"}, 7);
  auto c = session("c", SessionStatus::turn_limit_failure, {"d4"}, {}, {"d4", "d1"}, {"d4", "d1"}, 50);
  auto d = session("d", SessionStatus::diagnosed, {"d5"}, {"d6"}, {"d6", "d7"}, {"d6", "d7"}, 3);
  d.persona.personality = Personality::verbose;
  return {a, b, c, d};
}

PatientProfile profile_with(std::string id, std::vector<std::string> gold) {
  PatientProfile p;
  p.id = std::move(id);
  p.gold_diseases = std::move(gold);
  return p;
}

std::vector<std::string> ids_of(const std::vector<PatientProfile>& ps) {
  std::vector<std::string> out;
  for (const auto& p : ps) out.push_back(p.id);
  return out;
}

}  // namespace

TEST_SUITE("evaluation_harness") {
  TEST_CASE("recall at k examples") {
    CHECK(recall_at_k({"A", "B"}, {"A"}, 1) == 1.0);
    CHECK(recall_at_k({"A", "C"}, {"A", "B"}, 2) == 0.5);
    CHECK(recall_at_k({"A", "B"}, {"A", "B"}, 1) == 0.5);
    CHECK(recall_at_k({}, {"A"}, 4) == 0.0);
    CHECK(recall_at_k({"A"}, {}, 4) == 0.0);
    CHECK(recall_at_k({"C", "A"}, {"A"}, 4) == 1.0);
  }

  TEST_CASE("recall bound arithmetic") {
    std::vector<std::size_t> sizes(252, 1);
    sizes.insert(sizes.end(), 23, 2);
    auto bound = max_recall1_bound(sizes);
    CHECK(bound.value == doctest::Approx(263.5 / 275.0).epsilon(1e-15));
    CHECK(std::abs(bound.value - 0.958) < 0.001);
    CHECK(bound.warnings.empty());
    CHECK(max_recall1_bound(std::vector<std::size_t>(10, 1)).value == 1.0);
    CHECK(max_recall1_bound(std::vector<std::size_t>{1, 2}).value == 0.75);
    auto odd = max_recall1_bound(std::vector<std::size_t>{1, 3});
    CHECK(odd.value == doctest::Approx((1.0 + 1.0 / 3.0) / 2.0));
    CHECK(odd.warnings.size() == 1);
    auto from_profiles = max_recall1_bound(test::toy_profiles());
    CHECK(from_profiles.value == doctest::Approx((24.0 + 3.0) / 30.0));
  }

  TEST_CASE("recall at 1 never exceeds the bound") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::size_t> sizes;
      double total = 0.0;
      const int n = 1 + static_cast<int>(rng() % 20);
      for (int i = 0; i < n; ++i) {
        const std::size_t size = 1 + rng() % 2;
        sizes.push_back(size);
        std::set<std::string> gold;
        for (std::size_t g = 0; g < size; ++g) gold.insert("g" + std::to_string(g));
        std::vector<std::string> predicted;
        for (int p = 0; p < 4; ++p) predicted.push_back("g" + std::to_string(rng() % 4));
        double previous = 0.0;
        for (std::size_t k = 1; k <= 4; ++k) {
          const double r = recall_at_k(predicted, gold, k);
          CHECK(r >= previous);
          previous = r;
        }
        total += recall_at_k(predicted, gold, 1);
      }
      CHECK(total / n <= max_recall1_bound(sizes).value + 1e-12);
    }
  }

  TEST_CASE("anchor recall") {
    CHECK(hg_recall_at_k({{"A", "B"}, {"C"}}, {{"A"}, {"A", "B"}}, 2) == 0.5);
    CHECK(hg_recall_at_k({{"A"}}, {{"A", "B"}}, 4) == 0.5);
    CHECK(hg_recall_at_k({{"B", "A"}}, {{"A"}}, 2) == 1.0);
    CHECK_THROWS_AS(hg_recall_at_k({{"A"}}, {}, 1), std::invalid_argument);
  }

  TEST_CASE("subgraph recall on the toy graph") {
    const auto& g = test::toy_graph();
    auto sub = expand_subgraph(g, {"d01"}, evidence_scores(g, {}).values, 0.0);
    CHECK(subgraph_recall(sub, {"d01"}) == 1.0);
    CHECK(subgraph_recall(sub, {"d10"}) == 0.0);
    // atrial fibrillation shares shortness of breath with the anchor
    auto oracle = test::oracle_expand(test::raw_of(g), {"d01"}, [](const std::string&) { return true; });
    REQUIRE(oracle.hop.at("d02") == 2);
    CHECK(subgraph_recall(sub, {"d02"}) == 1.0);
    CHECK(subgraph_recall(sub, {"d02", "d10"}) == 0.5);
  }

  TEST_CASE("anchor recall never exceeds subgraph recall") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
      auto raw = test::random_graph(rng, 30);
      auto g = KnowledgeGraph::build(raw.nodes, raw.edges);
      auto diseases = g.ids_of_kind(NodeKind::disease);
      if (diseases.size() < 2) continue;
      std::vector<std::string> anchors = {diseases[rng() % diseases.size()]};
      std::set<std::string> gold = {diseases[rng() % diseases.size()], diseases[rng() % diseases.size()]};
      ScoreMap zero;
      for (const auto& d : diseases) zero[d] = 0.0;
      auto sub = expand_subgraph(g, anchors, zero, 0.0);
      for (std::size_t k = 1; k <= 4; ++k) {
        CHECK(hg_recall_at_k({anchors}, {gold}, k) <= subgraph_recall(sub, gold));
      }
    }
  }

  TEST_CASE("split of one disease") {
    std::vector<PatientProfile> ps;
    for (int i = 0; i < 10; ++i) ps.push_back(profile_with("p" + std::to_string(i), {"flu"}));
    auto split = stratified_split(ps, {}, std::numeric_limits<std::size_t>::max(), 1);
    CHECK(split.train.size() == 8);
    CHECK(split.valid.size() == 1);
    CHECK(split.test.size() == 1);
    std::vector<std::string> all = ids_of(split.train);
    for (const auto& id : ids_of(split.valid)) all.push_back(id);
    for (const auto& id : ids_of(split.test)) all.push_back(id);
    std::sort(all.begin(), all.end());
    CHECK(all == ids_of(ps));
    auto again = stratified_split(ps, {}, std::numeric_limits<std::size_t>::max(), 1);
    CHECK(ids_of(again.train) == ids_of(split.train));
    CHECK(ids_of(again.test) == ids_of(split.test));
  }

  TEST_CASE("split cap") {
    std::vector<PatientProfile> ps;
    for (int i = 0; i < 100; ++i) ps.push_back(profile_with("p" + std::to_string(100 + i), {"flu"}));
    auto split = stratified_split(ps, {}, 60, 3);
    CHECK(split.train.size() == 60);
    CHECK(split.dropped.size() == 20);
    CHECK(split.valid.size() == 10);
    CHECK(split.test.size() == 10);
  }

  TEST_CASE("split stratifies co-occurrence and warns on singletons") {
    std::vector<PatientProfile> ps;
    for (int i = 0; i < 20; ++i) ps.push_back(profile_with("a" + std::to_string(10 + i), {"flu"}));
    for (int i = 0; i < 10; ++i) {
      ps.push_back(profile_with("b" + std::to_string(10 + i), {"flu", "asthma"}));
    }
    ps.push_back(profile_with("c", {"gout"}));
    auto split = stratified_split(ps, {}, 60, 9);
    CHECK(split.train.size() == 16 + 8 + 1);
    CHECK(split.valid.size() == 2 + 1);
    CHECK(split.test.size() == 2 + 1);
    CHECK(split.warnings.size() == 1);
    auto train_ids = ids_of(split.train);
    CHECK(std::find(train_ids.begin(), train_ids.end(), "c") != train_ids.end());
    auto other = stratified_split(ps, {}, 60, 10);
    CHECK(ids_of(other.train) != train_ids);
  }

  TEST_CASE("split rejects bad ratios") {
    CHECK_THROWS_AS(stratified_split({}, {0.5, 0.1, 0.1}, 60, 1), std::invalid_argument);
  }

  TEST_CASE("mixed batch matches the hand table") {
    auto report = evaluate_run(mixed_batch());
    const auto& m = report.overall;
    CHECK(m.sessions == 4);
    CHECK(m.recall_at_k[0] == doctest::Approx(0.25));
    CHECK(m.recall_at_k[1] == doctest::Approx(0.375));
    CHECK(m.recall_at_k[2] == doctest::Approx(0.5));
    CHECK(m.recall_at_k[3] == doctest::Approx(0.5));
    for (double hg : m.hg_recall_at_k) CHECK(hg == doctest::Approx(0.625));
    CHECK(m.subgraph_recall == doctest::Approx(0.625));
    CHECK(m.avg_turns == doctest::Approx(16.25));
    CHECK(m.failure_rate == doctest::Approx(0.25));

    const auto& plain = report.slices.at("personality").at("plain");
    CHECK(plain.sessions == 3);
    CHECK(plain.recall_at_k[0] == doctest::Approx(1.0 / 3.0));
    CHECK(report.slices.at("personality").at("verbose").avg_turns == doctest::Approx(3.0));

    auto excluded = evaluate_run(mixed_batch(), EvalOptions{true});
    CHECK(excluded.overall.avg_turns == doctest::Approx(5.0));
  }

  TEST_CASE("all failures and single hits") {
    auto fail = session("f", SessionStatus::turn_limit_failure, {"d1"}, {}, {}, {}, 50);
    auto err = session("e", SessionStatus::error, {"d1"}, {"d1"}, {}, {}, 2);
    auto report = evaluate_run({fail, err});
    CHECK(report.overall.recall_at_k[0] == 0.0);
    CHECK(report.overall.recall_at_k[3] == 0.0);
    CHECK(report.overall.avg_turns == 50.0);
    CHECK(report.overall.failure_rate == 1.0);

    auto hit = session("h", SessionStatus::diagnosed, {"d1"}, {"d1"}, {"d1"}, {"d1"}, 4);
    CHECK(evaluate_run({hit}).overall.recall_at_k[0] == 1.0);
    CHECK_THROWS_AS(evaluate_run({}), std::invalid_argument);
  }

  TEST_CASE("evaluation ignores transcript order") {
    auto batch = mixed_batch();
    const auto reference = to_json(evaluate_run(batch)).dump();
    std::mt19937_64 rng(12);
    for (int i = 0; i < 20; ++i) {
      std::shuffle(batch.begin(), batch.end(), rng);
      CHECK(to_json(evaluate_run(batch)).dump() == reference);
    }
  }

  TEST_CASE("report table") {
    auto table = render_table(evaluate_run(mixed_batch()));
    CHECK(table.find("overall") != std::string::npos);
    CHECK(table.find("personality=verbose") != std::string::npos);
    auto bare = render_table(evaluate_run(mixed_batch()), false);
    CHECK(bare.find("personality=") == std::string::npos);
    CHECK(test::matches_golden("report_mixed.txt", table));
  }
}
