#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace kgdx {

enum class NodeKind { disease, symptom, cause, risk_factor };

/// Every relation points from an attribute node to a disease node.
enum class Relation { caused_by, can_cause, is_a_risk_factor_of };

std::string_view to_string(NodeKind kind);
std::string_view to_string(Relation relation);
std::optional<NodeKind> parse_node_kind(std::string_view text);
std::optional<Relation> parse_relation(std::string_view text);

/// The attribute kind a relation must start from.
NodeKind source_kind(Relation relation);

struct Node {
  std::string id;
  std::string name;
  NodeKind kind = NodeKind::disease;

  bool operator==(const Node&) const = default;
};

struct Edge {
  std::string source;
  std::string target;
  Relation relation = Relation::caused_by;

  auto operator<=>(const Edge&) const = default;
};

struct Violation {
  std::string element;  // e.g. "edges[4] (d1 -caused_by-> s2)"
  std::string message;
};

class GraphValidationError : public std::runtime_error {
 public:
  explicit GraphValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Typed disease/attribute store. Immutable after build(); the graph is
/// strictly bipartite between diseases and attributes.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  /// Validates every invariant and throws GraphValidationError listing all
  /// offending elements.
  static KnowledgeGraph build(std::vector<Node> nodes, std::vector<Edge> edges);

  const std::vector<Node>& nodes() const { return nodes_; }  // sorted by id
  const std::vector<Edge>& edges() const { return edges_; }  // sorted

  bool contains(std::string_view id) const;
  const Node* find(std::string_view id) const;
  const Node& node(std::string_view id) const;  // throws std::out_of_range

  /// Node id for a display name, compared after normalize_name.
  std::optional<std::string> id_for_name(std::string_view name) const;

  /// Neighbouring node ids, sorted. For a disease these are its attributes;
  /// for an attribute, the diseases it points to.
  const std::vector<std::string>& neighbors(std::string_view id) const;

  std::vector<std::string> ids_of_kind(NodeKind kind) const;
  std::size_t count(NodeKind kind) const;
  std::size_t count(Relation relation) const;

  /// Relation of the edge between an attribute and a disease, if any.
  std::optional<Relation> relation_between(std::string_view attribute,
                                           std::string_view disease) const;

 private:
  std::size_t index_of(std::string_view id) const;

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, std::string, std::less<>> name_index_;
  std::vector<std::vector<std::string>> neighbors_;
};

KnowledgeGraph load_graph(const nlohmann::json& doc);
KnowledgeGraph load_graph_file(const std::filesystem::path& path);

/// Byte-stable document: sorted keys, nodes by id, edges by (source, target,
/// relation), two-space indentation, trailing newline.
std::string save_graph(const KnowledgeGraph& graph);
nlohmann::json graph_to_json(const KnowledgeGraph& graph);

struct GraphReport {
  std::map<std::string, std::size_t> node_counts;
  std::map<std::string, std::size_t> edge_counts;
  std::size_t total_nodes = 0;
  std::size_t total_edges = 0;
  std::vector<Violation> violations;

  bool valid() const { return violations.empty(); }
};

/// Validation without throwing: counts whatever parsed, plus every violation.
GraphReport inspect_graph(const nlohmann::json& doc);

}  // namespace kgdx
