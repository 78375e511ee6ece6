#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgdx/knowledge_graph.hpp"
#include "kgdx/profile.hpp"

namespace kgdx {

using ScoreMap = std::map<std::string, double>;

/// Neighbourhood extracted around anchor diseases.
///
/// Hop 0 holds the anchors, hop 1 their attributes, hop 2 the competing
/// diseases that share a hop-1 attribute and survived the admission filter,
/// hop 3 the remaining attributes of those competitors. Edges are every graph
/// edge whose endpoints are both included.
struct Subgraph {
  std::vector<std::string> anchor_ids;     // caller order, deduplicated
  std::vector<std::string> competing_ids;  // sorted
  std::vector<std::string> node_ids;       // sorted
  std::vector<Edge> edges;                 // sorted
  std::map<std::string, int> hop;          // node id -> hop depth

  bool contains(std::string_view id) const { return hop.count(std::string(id)) > 0; }

  /// Anchors followed by competitors.
  std::vector<std::string> disease_ids() const;

  bool empty() const { return node_ids.empty(); }
  bool operator==(const Subgraph&) const = default;
};

/// Score-filtered expansion. A competitor is admitted when its score exceeds
/// tau; tau == 0 admits every competitor regardless of score. Anchors are never
/// filtered. Throws std::invalid_argument for an empty anchor list, an unknown
/// or non-disease anchor, tau outside [0, 1], or a competitor without a score.
Subgraph expand_subgraph(const KnowledgeGraph& g, const std::vector<std::string>& anchors,
                         const ScoreMap& scores, double tau);

/// Unfiltered expansion from the gold diseases.
Subgraph expand_oracle_subgraph(const KnowledgeGraph& g, const std::vector<std::string>& gold);

/// Admits a competitor d when, for some anchor a,
/// |attrs(d) ∩ attrs(a)| >= ratio * |attrs(a)|. Anchors without attributes
/// admit nothing.
Subgraph overlap_filter(const KnowledgeGraph& g, const std::vector<std::string>& anchors,
                        double ratio = 0.3);

/// Lower-level entry point shared by the three expansions above.
using CompetitorFilter = std::function<bool(const std::string& disease_id)>;
Subgraph expand_with_filter(const KnowledgeGraph& g, const std::vector<std::string>& anchors,
                            const CompetitorFilter& admit);

struct Statement {
  std::string source_name;  // attribute for can_cause / is_a_risk_factor_of, disease for caused_by
  Relation relation = Relation::caused_by;
  std::string target_name;

  bool operator==(const Statement&) const = default;
};

/// "{disease} causes {symptom}", "{cause} can cause {disease}",
/// "{risk_factor} is a risk factor of {disease}".
std::string render_statement(const Node& attribute, const Node& disease, Relation relation);
std::optional<Statement> parse_statement(std::string_view text);

/// One statement per subgraph edge, deduplicated and sorted by
/// (disease name, relation, attribute name).
std::vector<std::string> linearize(const Subgraph& sub, const KnowledgeGraph& g);

/// Optional fuzzy matcher consulted when exact normalized lookup fails; returns
/// a graph node id or nullopt.
using NameMatcher = std::function<std::optional<std::string>(std::string_view name)>;

/// Share of a profile's symptom-related items (affirmed, denied, and background
/// entries, deduplicated by normalized name) that map to a symptom, cause or
/// risk-factor node. 0 when the profile has no items.
double grounding_ratio(const KnowledgeGraph& g, const PatientProfile& profile,
                       const NameMatcher& matcher = {});

}  // namespace kgdx
