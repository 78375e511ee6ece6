#include "generators.hpp"

#include <set>

namespace kgdx::test {
namespace {

std::size_t below(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

Relation relation_from(NodeKind kind) {
  switch (kind) {
    case NodeKind::symptom:
      return Relation::caused_by;
    case NodeKind::cause:
      return Relation::can_cause;
    default:
      return Relation::is_a_risk_factor_of;
  }
}

std::string prefix_of(NodeKind kind) {
  switch (kind) {
    case NodeKind::disease:
      return "d";
    case NodeKind::symptom:
      return "s";
    case NodeKind::cause:
      return "c";
    case NodeKind::risk_factor:
      return "r";
  }
  return "x";
}

}  // namespace

RawGraph random_graph(std::mt19937_64& rng, std::size_t max_nodes) {
  RawGraph raw;
  const std::size_t total = 2 + below(rng, max_nodes - 1);
  const std::size_t diseases = 1 + below(rng, total - 1);
  std::vector<std::string> disease_ids, attribute_ids;
  std::map<std::string, NodeKind> kinds;
  for (std::size_t i = 0; i < total; ++i) {
    NodeKind kind = i < diseases ? NodeKind::disease
                                 : std::array{NodeKind::symptom, NodeKind::cause,
                                              NodeKind::risk_factor}[below(rng, 3)];
    std::string id = prefix_of(kind) + std::to_string(i);
    raw.nodes.push_back({id, "node " + id, kind});
    kinds[id] = kind;
    (kind == NodeKind::disease ? disease_ids : attribute_ids).push_back(id);
  }
  if (attribute_ids.empty()) return raw;
  const double density = std::uniform_real_distribution<double>(0.02, 0.4)(rng);
  std::bernoulli_distribution take(density);
  for (const auto& a : attribute_ids) {
    for (const auto& d : disease_ids) {
      if (take(rng)) raw.edges.push_back({a, d, relation_from(kinds[a])});
    }
  }
  return raw;
}

RawGraph full_scale_graph(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RawGraph raw;
  auto add_nodes = [&](NodeKind kind, std::size_t count) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < count; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%s%04zu", prefix_of(kind).c_str(), i);
      raw.nodes.push_back({buf, std::string(to_string(kind)) + " " + std::to_string(i), kind});
      ids.push_back(buf);
    }
    return ids;
  };
  auto diseases = add_nodes(NodeKind::disease, 338);
  auto add_edges = [&](NodeKind kind, std::size_t count, std::size_t edges) {
    auto attrs = add_nodes(kind, count);
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& a : attrs) seen.insert({a, diseases[below(rng, diseases.size())]});
    while (seen.size() < edges) seen.insert({attrs[below(rng, attrs.size())], diseases[below(rng, diseases.size())]});
    for (const auto& [a, d] : seen) raw.edges.push_back({a, d, relation_from(kind)});
  };
  add_edges(NodeKind::symptom, 847, 2630);
  add_edges(NodeKind::cause, 266, 805);
  add_edges(NodeKind::risk_factor, 282, 500);
  return raw;
}

nlohmann::json to_document(const RawGraph& raw) {
  nlohmann::json nodes = nlohmann::json::array(), edges = nlohmann::json::array();
  for (const auto& n : raw.nodes) {
    nodes.push_back({{"id", n.id}, {"name", n.name}, {"kind", std::string(to_string(n.kind))}});
  }
  for (const auto& e : raw.edges) {
    edges.push_back({{"source", e.source},
                     {"target", e.target},
                     {"relation", std::string(to_string(e.relation))}});
  }
  return {{"nodes", nodes}, {"edges", edges}};
}

}  // namespace kgdx::test
