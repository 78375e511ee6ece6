#include "oracle.hpp"

namespace kgdx::test {
namespace {

bool is_disease(const RawGraph& raw, const std::string& id) {
  for (const auto& n : raw.nodes) {
    if (n.id == id) return n.kind == NodeKind::disease;
  }
  return false;
}

std::set<std::string> touching(const RawGraph& raw, const std::string& id) {
  std::set<std::string> out;
  for (const auto& e : raw.edges) {
    if (e.source == id) out.insert(e.target);
    if (e.target == id) out.insert(e.source);
  }
  return out;
}

}  // namespace

OracleResult oracle_expand(const RawGraph& raw, const std::vector<std::string>& anchors,
                           const std::function<bool(const std::string&)>& admit) {
  OracleResult r;
  std::set<std::string> level0(anchors.begin(), anchors.end());
  for (const auto& a : level0) r.hop[a] = 0;

  std::set<std::string> level1;
  for (const auto& a : level0) {
    for (const auto& x : touching(raw, a)) {
      if (!r.hop.count(x)) level1.insert(x);
    }
  }
  for (const auto& x : level1) r.hop[x] = 1;

  std::set<std::string> level2;
  for (const auto& x : level1) {
    for (const auto& d : touching(raw, x)) {
      if (r.hop.count(d) || !is_disease(raw, d)) continue;
      if (admit(d)) level2.insert(d);
    }
  }
  for (const auto& d : level2) r.hop[d] = 2;

  for (const auto& d : level2) {
    for (const auto& x : touching(raw, d)) {
      if (!r.hop.count(x)) r.hop[x] = 3;
    }
  }

  for (const auto& e : raw.edges) {
    if (r.hop.count(e.source) && r.hop.count(e.target)) {
      r.edges.insert({e.source, e.target, std::string(to_string(e.relation))});
    }
  }
  return r;
}

RawGraph raw_of(const KnowledgeGraph& g) { return {g.nodes(), g.edges()}; }

}  // namespace kgdx::test
