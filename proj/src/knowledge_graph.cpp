#include "kgdx/knowledge_graph.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <tuple>

#include "kgdx/text.hpp"

namespace kgdx {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 4> kKindNames = {"disease", "symptom", "cause",
                                                        "risk_factor"};
constexpr std::array<std::string_view, 3> kRelationNames = {"caused_by", "can_cause",
                                                            "is_a_risk_factor_of"};

std::string describe_edge(std::size_t i, const std::string& source, const std::string& relation,
                          const std::string& target) {
  return "edges[" + std::to_string(i) + "] (" + source + " -" + relation + "-> " + target + ")";
}

struct Parsed {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<Violation> violations;
};

// Parses a graph document, collecting structural problems instead of throwing.
// Semantic checks (signatures, duplicates) happen in check_invariants.
Parsed parse_document(const json& doc) {
  Parsed out;
  if (!doc.is_object()) {
    out.violations.push_back({"document", "graph document must be a JSON object"});
    return out;
  }
  auto field = [](const json& obj, const char* key) -> std::optional<std::string> {
    if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_string()) return std::nullopt;
    return obj.at(key).get<std::string>();
  };
  if (doc.contains("nodes") && !doc.at("nodes").is_array()) {
    out.violations.push_back({"nodes", "must be an array"});
  } else if (doc.contains("nodes")) {
    const auto& nodes = doc.at("nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      std::string element = "nodes[" + std::to_string(i) + "]";
      auto id = field(nodes[i], "id");
      auto name = field(nodes[i], "name");
      auto kind = field(nodes[i], "kind");
      if (!id || !name || !kind) {
        out.violations.push_back({element, "node needs string fields id, name, kind"});
        continue;
      }
      element += " (id=" + *id + ")";
      auto parsed_kind = parse_node_kind(*kind);
      if (!parsed_kind) {
        out.violations.push_back({element, "unknown node kind '" + *kind + "'"});
        continue;
      }
      out.nodes.push_back({*id, *name, *parsed_kind});
    }
  }
  if (doc.contains("edges") && !doc.at("edges").is_array()) {
    out.violations.push_back({"edges", "must be an array"});
  } else if (doc.contains("edges")) {
    const auto& edges = doc.at("edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      auto source = field(edges[i], "source");
      auto target = field(edges[i], "target");
      auto relation = field(edges[i], "relation");
      if (!source || !target || !relation) {
        out.violations.push_back(
            {"edges[" + std::to_string(i) + "]", "edge needs string fields source, target, relation"});
        continue;
      }
      auto parsed = parse_relation(*relation);
      if (!parsed) {
        out.violations.push_back({describe_edge(i, *source, *relation, *target),
                                  "unknown relation '" + *relation + "'"});
        continue;
      }
      out.edges.push_back({*source, *target, *parsed});
    }
  }
  return out;
}

std::vector<Violation> check_invariants(const std::vector<Node>& nodes,
                                        const std::vector<Edge>& edges) {
  std::vector<Violation> violations;
  std::map<std::string, NodeKind> kinds;
  std::map<std::string, std::string> names;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    std::string element = "nodes[" + std::to_string(i) + "] (id=" + n.id + ")";
    if (n.id.empty()) violations.push_back({element, "empty id"});
    if (normalize_name(n.name).empty()) violations.push_back({element, "empty name"});
    if (!kinds.emplace(n.id, n.kind).second) {
      violations.push_back({element, "duplicate id"});
      continue;
    }
    auto key = normalize_name(n.name);
    if (key.empty()) continue;
    auto [it, inserted] = names.emplace(key, n.id);
    if (!inserted) {
      violations.push_back({element, "duplicate name '" + key + "' (also used by " + it->second + ")"});
    }
  }
  std::set<Edge> seen;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    std::string element =
        describe_edge(i, e.source, std::string(to_string(e.relation)), e.target);
    auto src = kinds.find(e.source);
    auto dst = kinds.find(e.target);
    bool dangling = false;
    if (src == kinds.end()) {
      violations.push_back({element, "unknown source node '" + e.source + "'"});
      dangling = true;
    }
    if (dst == kinds.end()) {
      violations.push_back({element, "unknown target node '" + e.target + "'"});
      dangling = true;
    }
    if (e.source == e.target) violations.push_back({element, "self-loop"});
    if (!seen.insert(e).second) violations.push_back({element, "duplicate edge"});
    if (dangling) continue;
    const NodeKind want_source = source_kind(e.relation);
    if (src->second != want_source || dst->second != NodeKind::disease) {
      violations.push_back(
          {element, "relation " + std::string(to_string(e.relation)) + " requires " +
                        std::string(to_string(want_source)) + " -> disease, got " +
                        std::string(to_string(src->second)) + " -> " +
                        std::string(to_string(dst->second))});
    }
  }
  return violations;
}

std::string format_violations(const std::vector<Violation>& violations) {
  std::string msg = "invalid knowledge graph (" + std::to_string(violations.size()) + " violation" +
                    (violations.size() == 1 ? "" : "s") + ")";
  for (const auto& v : violations) msg += "\n  " + v.element + ": " + v.message;
  return msg;
}

}  // namespace

std::string_view to_string(NodeKind kind) { return kKindNames[static_cast<int>(kind)]; }
std::string_view to_string(Relation relation) {
  return kRelationNames[static_cast<int>(relation)];
}

std::optional<NodeKind> parse_node_kind(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<NodeKind>(i);
  }
  return std::nullopt;
}

std::optional<Relation> parse_relation(std::string_view text) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i) {
    if (kRelationNames[i] == text) return static_cast<Relation>(i);
  }
  return std::nullopt;
}

NodeKind source_kind(Relation relation) {
  switch (relation) {
    case Relation::caused_by:
      return NodeKind::symptom;
    case Relation::can_cause:
      return NodeKind::cause;
    case Relation::is_a_risk_factor_of:
      return NodeKind::risk_factor;
  }
  return NodeKind::symptom;
}

GraphValidationError::GraphValidationError(std::vector<Violation> violations)
    : std::runtime_error(format_violations(violations)), violations_(std::move(violations)) {}

KnowledgeGraph KnowledgeGraph::build(std::vector<Node> nodes, std::vector<Edge> edges) {
  auto violations = check_invariants(nodes, edges);
  if (!violations.empty()) throw GraphValidationError(std::move(violations));

  KnowledgeGraph g;
  std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.id < b.id; });
  std::sort(edges.begin(), edges.end());
  g.nodes_ = std::move(nodes);
  g.edges_ = std::move(edges);
  g.neighbors_.resize(g.nodes_.size());
  for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
    g.index_.emplace(g.nodes_[i].id, i);
    g.name_index_.emplace(normalize_name(g.nodes_[i].name), g.nodes_[i].id);
  }
  for (const auto& e : g.edges_) {
    g.neighbors_[g.index_.at(e.source)].push_back(e.target);
    g.neighbors_[g.index_.at(e.target)].push_back(e.source);
  }
  for (auto& list : g.neighbors_) std::sort(list.begin(), list.end());
  return g;
}

std::size_t KnowledgeGraph::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw std::out_of_range("unknown node id: " + std::string(id));
  return it->second;
}

bool KnowledgeGraph::contains(std::string_view id) const {
  return index_.count(std::string(id)) > 0;
}

const Node* KnowledgeGraph::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

const Node& KnowledgeGraph::node(std::string_view id) const { return nodes_[index_of(id)]; }

std::optional<std::string> KnowledgeGraph::id_for_name(std::string_view name) const {
  auto it = name_index_.find(normalize_name(name));
  if (it == name_index_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::string>& KnowledgeGraph::neighbors(std::string_view id) const {
  return neighbors_[index_of(id)];
}

std::vector<std::string> KnowledgeGraph::ids_of_kind(NodeKind kind) const {
  std::vector<std::string> out;
  for (const auto& n : nodes_) {
    if (n.kind == kind) out.push_back(n.id);
  }
  return out;
}

std::size_t KnowledgeGraph::count(NodeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [&](const Node& n) { return n.kind == kind; }));
}

std::size_t KnowledgeGraph::count(Relation relation) const {
  return static_cast<std::size_t>(std::count_if(
      edges_.begin(), edges_.end(), [&](const Edge& e) { return e.relation == relation; }));
}

std::optional<Relation> KnowledgeGraph::relation_between(std::string_view attribute,
                                                         std::string_view disease) const {
  for (Relation r : {Relation::caused_by, Relation::can_cause, Relation::is_a_risk_factor_of}) {
    Edge probe{std::string(attribute), std::string(disease), r};
    if (std::binary_search(edges_.begin(), edges_.end(), probe)) return r;
  }
  return std::nullopt;
}

KnowledgeGraph load_graph(const json& doc) {
  auto parsed = parse_document(doc);
  auto semantic = check_invariants(parsed.nodes, parsed.edges);
  parsed.violations.insert(parsed.violations.end(), semantic.begin(), semantic.end());
  if (!parsed.violations.empty()) throw GraphValidationError(std::move(parsed.violations));
  return KnowledgeGraph::build(std::move(parsed.nodes), std::move(parsed.edges));
}

KnowledgeGraph load_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph document: " + path.string());
  return load_graph(json::parse(in));
}

json graph_to_json(const KnowledgeGraph& graph) {
  json nodes = json::array();
  for (const auto& n : graph.nodes()) {
    nodes.push_back({{"id", n.id}, {"name", n.name}, {"kind", to_string(n.kind)}});
  }
  json edges = json::array();
  for (const auto& e : graph.edges()) {
    edges.push_back({{"source", e.source}, {"target", e.target}, {"relation", to_string(e.relation)}});
  }
  return {{"nodes", nodes}, {"edges", edges}};
}

std::string save_graph(const KnowledgeGraph& graph) { return graph_to_json(graph).dump(2) + "\n"; }

GraphReport inspect_graph(const json& doc) {
  GraphReport report;
  auto parsed = parse_document(doc);
  auto semantic = check_invariants(parsed.nodes, parsed.edges);
  report.violations = std::move(parsed.violations);
  report.violations.insert(report.violations.end(), semantic.begin(), semantic.end());
  for (auto name : kKindNames) report.node_counts[std::string(name)] = 0;
  for (auto name : kRelationNames) report.edge_counts[std::string(name)] = 0;
  for (const auto& n : parsed.nodes) ++report.node_counts[std::string(to_string(n.kind))];
  for (const auto& e : parsed.edges) ++report.edge_counts[std::string(to_string(e.relation))];
  report.total_nodes = parsed.nodes.size();
  report.total_edges = parsed.edges.size();
  return report;
}

}  // namespace kgdx
