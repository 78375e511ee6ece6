#include "kgdx/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "kgdx/rng.hpp"
#include "kgdx/text.hpp"

namespace kgdx {
namespace {

using nlohmann::json;

std::string strata_key(const PatientProfile& p) {
  std::vector<std::string> gold;
  for (const auto& g : p.gold_diseases) gold.push_back(normalize_name(g));
  std::sort(gold.begin(), gold.end());
  return join(gold, "|");
}

// Largest-remainder apportionment of n items over the given shares.
std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& shares) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = shares[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b] + 1e-12; });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % 3, ++assigned) ++counts[order[i]];
  return counts;
}

struct SessionMetrics {
  std::array<double, 4> recall{};
  std::array<double, 4> hg{};
  double subgraph = 0.0;
  double turns = 0.0;
  bool failed = false;
};

SessionMetrics session_metrics(const Transcript& t) {
  SessionMetrics m;
  const std::set<std::string> gold(t.gold_ids.begin(), t.gold_ids.end());
  m.failed = t.status != SessionStatus::diagnosed;
  for (std::size_t k = 1; k <= 4; ++k) {
    m.recall[k - 1] = m.failed ? 0.0 : recall_at_k(t.diagnosis_ids, gold, k);
    m.hg[k - 1] = recall_at_k(t.final_anchors, gold, k);
  }
  m.subgraph = subgraph_recall(t.final_subgraph_diseases, gold);
  m.turns = m.failed ? static_cast<double>(t.max_turns) : static_cast<double>(t.turns_used);
  return m;
}

MetricBlock aggregate(const std::vector<SessionMetrics>& ms, const EvalOptions& options) {
  MetricBlock b;
  b.sessions = ms.size();
  if (ms.empty()) return b;
  std::size_t failures = 0;
  std::size_t turn_sessions = 0;
  double turns = 0.0;
  for (const auto& m : ms) {
    for (std::size_t k = 0; k < 4; ++k) {
      b.recall_at_k[k] += m.recall[k];
      b.hg_recall_at_k[k] += m.hg[k];
    }
    b.subgraph_recall += m.subgraph;
    failures += m.failed ? 1 : 0;
    if (!(m.failed && options.exclude_failures_from_turns)) {
      turns += m.turns;
      ++turn_sessions;
    }
  }
  const double n = static_cast<double>(ms.size());
  for (std::size_t k = 0; k < 4; ++k) {
    b.recall_at_k[k] /= n;
    b.hg_recall_at_k[k] /= n;
  }
  b.subgraph_recall /= n;
  b.avg_turns = turn_sessions ? turns / static_cast<double>(turn_sessions) : 0.0;
  b.failure_rate = static_cast<double>(failures) / n;
  return b;
}

RecallBound bound_with_labels(const std::vector<std::size_t>& sizes,
                              const std::vector<std::string>& labels) {
  RecallBound b;
  if (sizes.empty()) return b;
  double sum = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] != 1 && sizes[i] != 2) {
      b.warnings.push_back("profile " + labels[i] + " has " + std::to_string(sizes[i]) +
                           " gold diseases");
    }
    if (sizes[i] > 0) sum += 1.0 / static_cast<double>(sizes[i]);
  }
  b.value = sum / static_cast<double>(sizes.size());
  return b;
}

}  // namespace

double recall_at_k(const std::vector<std::string>& predicted, const std::set<std::string>& gold,
                   std::size_t k) {
  if (gold.empty() || predicted.empty()) return 0.0;
  std::set<std::string> top;
  for (std::size_t i = 0; i < predicted.size() && i < k; ++i) top.insert(predicted[i]);
  std::size_t hits = 0;
  for (const auto& g : gold) hits += top.count(g);
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

RecallBound max_recall1_bound(const std::vector<std::size_t>& gold_sizes) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < gold_sizes.size(); ++i) labels.push_back("#" + std::to_string(i));
  return bound_with_labels(gold_sizes, labels);
}

RecallBound max_recall1_bound(const std::vector<PatientProfile>& profiles) {
  std::vector<std::size_t> sizes;
  std::vector<std::string> labels;
  for (const auto& p : profiles) {
    sizes.push_back(p.gold_diseases.size());
    labels.push_back(p.id);
  }
  return bound_with_labels(sizes, labels);
}

double hg_recall_at_k(const std::vector<std::vector<std::string>>& anchors,
                      const std::vector<std::set<std::string>>& gold, std::size_t k) {
  if (anchors.size() != gold.size()) throw std::invalid_argument("anchor and gold lists differ in length");
  if (anchors.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < anchors.size(); ++i) sum += recall_at_k(anchors[i], gold[i], k);
  return sum / static_cast<double>(anchors.size());
}

double subgraph_recall(const std::vector<std::string>& disease_ids, const std::set<std::string>& gold) {
  if (gold.empty()) return 0.0;
  std::set<std::string> present(disease_ids.begin(), disease_ids.end());
  std::size_t hits = 0;
  for (const auto& g : gold) hits += present.count(g);
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

double subgraph_recall(const Subgraph& sub, const std::set<std::string>& gold) {
  return subgraph_recall(sub.disease_ids(), gold);
}

Split stratified_split(const std::vector<PatientProfile>& profiles, const SplitRatios& ratios,
                       std::size_t cap, std::uint64_t seed) {
  const std::array<double, 3> shares = {ratios.train, ratios.valid, ratios.test};
  for (double s : shares) {
    if (s < 0.0) throw std::invalid_argument("split ratios must be non-negative");
  }
  if (std::abs(shares[0] + shares[1] + shares[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < profiles.size(); ++i) strata[strata_key(profiles[i])].push_back(i);

  Split split;
  std::vector<std::size_t> train;
  for (auto& [key, members] : strata) {
    Rng rng(derive_seed(seed, key));
    rng.shuffle(members);
    if (members.size() == 1) {
      split.warnings.push_back("stratum '" + key + "' has a single profile (" +
                               profiles[members[0]].id + "); assigned to train");
      train.push_back(members[0]);
      continue;
    }
    auto counts = apportion(members.size(), shares);
    std::size_t i = 0;
    for (; i < counts[0]; ++i) train.push_back(members[i]);
    for (std::size_t j = 0; j < counts[1]; ++j, ++i) split.valid.push_back(profiles[members[i]]);
    for (std::size_t j = 0; j < counts[2]; ++j, ++i) split.test.push_back(profiles[members[i]]);
  }
  std::map<std::string, std::size_t> per_disease;
  for (auto idx : train) {
    const auto& p = profiles[idx];
    bool over = false;
    for (const auto& g : p.gold_diseases) over = over || per_disease[normalize_name(g)] >= cap;
    if (over) {
      split.dropped.push_back(p.id);
      continue;
    }
    for (const auto& g : p.gold_diseases) ++per_disease[normalize_name(g)];
    split.train.push_back(p);
  }
  return split;
}

EvalReport evaluate_run(std::vector<Transcript> transcripts, const EvalOptions& options) {
  if (transcripts.empty()) throw std::invalid_argument("evaluate_run needs at least one transcript");
  std::sort(transcripts.begin(), transcripts.end(), [](const Transcript& a, const Transcript& b) {
    return std::tie(a.profile_id, a.seed) < std::tie(b.profile_id, b.seed);
  });
  EvalReport report;
  report.options = options;
  std::vector<SessionMetrics> all;
  std::map<std::string, std::map<std::string, std::vector<SessionMetrics>>> grouped;
  for (const auto& t : transcripts) {
    auto m = session_metrics(t);
    all.push_back(m);
    for (const auto& [field, value] : persona_fields(t.persona)) grouped[field][value].push_back(m);
  }
  report.overall = aggregate(all, options);
  for (const auto& [field, values] : grouped) {
    for (const auto& [value, ms] : values) report.slices[field][value] = aggregate(ms, options);
  }
  return report;
}

json to_json(const MetricBlock& m) {
  json recall = json::object();
  json hg = json::object();
  for (std::size_t k = 0; k < 4; ++k) {
    recall[std::to_string(k + 1)] = m.recall_at_k[k];
    hg[std::to_string(k + 1)] = m.hg_recall_at_k[k];
  }
  return {{"sessions", m.sessions},         {"recall_at_k", recall},
          {"hg_recall_at_k", hg},           {"subgraph_recall", m.subgraph_recall},
          {"avg_turns", m.avg_turns},       {"failure_rate", m.failure_rate}};
}

json to_json(const EvalReport& r) {
  json slices = json::object();
  for (const auto& [field, values] : r.slices) {
    for (const auto& [value, block] : values) slices[field][value] = to_json(block);
  }
  return {{"overall", to_json(r.overall)},
          {"slices", slices},
          {"turn_unit", "system responses, final diagnosis included"},
          {"failures_in_avg_turns", !r.options.exclude_failures_from_turns}};
}

std::string render_table(const EvalReport& r, bool include_slices) {
  std::ostringstream out;
  auto row = [&](const std::string& label, const MetricBlock& m) {
    out << std::left << std::setw(24) << label << std::right << std::setw(6) << m.sessions;
    for (double v : m.recall_at_k) out << std::setw(8) << format_fixed(v, 3);
    for (double v : m.hg_recall_at_k) out << std::setw(8) << format_fixed(v, 3);
    out << std::setw(8) << format_fixed(m.subgraph_recall, 3) << std::setw(8)
        << format_fixed(m.avg_turns, 1) << std::setw(8) << format_fixed(m.failure_rate, 3) << "\n";
  };
  out << std::left << std::setw(24) << "slice" << std::right << std::setw(6) << "n";
  for (int k = 1; k <= 4; ++k) out << std::setw(8) << ("R@" + std::to_string(k));
  for (int k = 1; k <= 4; ++k) out << std::setw(8) << ("HG@" + std::to_string(k));
  out << std::setw(8) << "Sub" << std::setw(8) << "Turns" << std::setw(8) << "Fail" << "\n";
  row("overall", r.overall);
  if (include_slices) {
    for (const auto& [field, values] : r.slices) {
      for (const auto& [value, block] : values) row(field + "=" + value, block);
    }
  }
  return out.str();
}

}  // namespace kgdx
