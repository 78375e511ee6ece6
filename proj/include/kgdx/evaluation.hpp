#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgdx/profile.hpp"
#include "kgdx/subgraph.hpp"
#include "kgdx/transcript.hpp"

namespace kgdx {

/// |gold ∩ first k of predicted| / |gold|; 0 for empty predictions or gold.
double recall_at_k(const std::vector<std::string>& predicted, const std::set<std::string>& gold,
                   std::size_t k);

struct RecallBound {
  double value = 0.0;
  std::vector<std::string> warnings;
};

/// Mean of 1/|gold| over the profiles (the best Recall@1 any single top
/// prediction can reach). Gold sets outside {1, 2} are still counted, with a
/// warning.
RecallBound max_recall1_bound(const std::vector<std::size_t>& gold_sizes);
RecallBound max_recall1_bound(const std::vector<PatientProfile>& profiles);

/// Mean over sessions of recall_at_k applied to each session's anchors.
double hg_recall_at_k(const std::vector<std::vector<std::string>>& anchors,
                      const std::vector<std::set<std::string>>& gold, std::size_t k);

/// |gold ∩ disease nodes of the subgraph| / |gold|.
double subgraph_recall(const Subgraph& sub, const std::set<std::string>& gold);
double subgraph_recall(const std::vector<std::string>& disease_ids, const std::set<std::string>& gold);

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct Split {
  std::vector<PatientProfile> train;
  std::vector<PatientProfile> valid;
  std::vector<PatientProfile> test;
  std::vector<std::string> dropped;  // profile ids removed by the per-disease cap
  std::vector<std::string> warnings;
};

/// Stratifies on the sorted gold-disease multiset. Each stratum is shuffled
/// with a seed derived from its key and cut by largest-remainder rounding of
/// the ratios; strata of one profile go to train. Training profiles that
/// would push any of their diseases past `cap` are dropped.
Split stratified_split(const std::vector<PatientProfile>& profiles, const SplitRatios& ratios,
                       std::size_t cap, std::uint64_t seed);

struct MetricBlock {
  std::size_t sessions = 0;
  std::array<double, 4> recall_at_k{};     // k = 1..4
  std::array<double, 4> hg_recall_at_k{};  // k = 1..4
  double subgraph_recall = 0.0;
  double avg_turns = 0.0;
  double failure_rate = 0.0;
};

struct EvalOptions {
  bool exclude_failures_from_turns = false;
};

struct EvalReport {
  MetricBlock overall;
  /// persona field -> value -> metrics
  std::map<std::string, std::map<std::string, MetricBlock>> slices;
  EvalOptions options;
};

/// Aggregates transcripts. Sessions that did not end in a diagnosis score 0 on
/// diagnosis recall and count max_turns toward the average unless
/// exclude_failures_from_turns is set. Throws std::invalid_argument for an
/// empty set.
EvalReport evaluate_run(std::vector<Transcript> transcripts, const EvalOptions& options = {});

nlohmann::json to_json(const MetricBlock& m);
nlohmann::json to_json(const EvalReport& report);

/// Aligned plain-text table: overall row, then one row per persona slice.
std::string render_table(const EvalReport& report, bool include_slices = true);

}  // namespace kgdx
