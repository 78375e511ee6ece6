#include "kgdx/subgraph.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <tuple>

#include "kgdx/text.hpp"

namespace kgdx {
namespace {

std::vector<std::string> checked_anchors(const KnowledgeGraph& g,
                                         const std::vector<std::string>& anchors) {
  if (anchors.empty()) throw std::invalid_argument("subgraph expansion needs at least one anchor");
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& id : anchors) {
    const Node* n = g.find(id);
    if (!n) throw std::invalid_argument("unknown anchor id: " + id);
    if (n->kind != NodeKind::disease) {
      throw std::invalid_argument("anchor " + id + " is a " + std::string(to_string(n->kind)) +
                                  ", not a disease");
    }
    if (seen.insert(id).second) out.push_back(id);
  }
  return out;
}

std::size_t shared_count(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t shared = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++shared;
      ++i;
      ++j;
    }
  }
  return shared;
}

constexpr std::string_view kCauses = " causes ";
constexpr std::string_view kCanCause = " can cause ";
constexpr std::string_view kRiskFactorOf = " is a risk factor of ";

}  // namespace

std::vector<std::string> Subgraph::disease_ids() const {
  std::vector<std::string> out = anchor_ids;
  out.insert(out.end(), competing_ids.begin(), competing_ids.end());
  return out;
}

Subgraph expand_with_filter(const KnowledgeGraph& g, const std::vector<std::string>& anchors,
                            const CompetitorFilter& admit) {
  Subgraph sub;
  sub.anchor_ids = checked_anchors(g, anchors);
  for (const auto& a : sub.anchor_ids) sub.hop[a] = 0;

  std::vector<std::string> frontier;
  for (const auto& a : sub.anchor_ids) {
    for (const auto& attr : g.neighbors(a)) {
      if (sub.hop.emplace(attr, 1).second) frontier.push_back(attr);
    }
  }

  std::set<std::string> rejected;
  std::vector<std::string> competitors;
  for (const auto& attr : frontier) {
    for (const auto& d : g.neighbors(attr)) {
      if (sub.hop.count(d) || rejected.count(d)) continue;
      if (admit(d)) {
        sub.hop.emplace(d, 2);
        competitors.push_back(d);
      } else {
        rejected.insert(d);
      }
    }
  }
  std::sort(competitors.begin(), competitors.end());
  sub.competing_ids = competitors;

  for (const auto& d : competitors) {
    for (const auto& attr : g.neighbors(d)) sub.hop.emplace(attr, 3);
  }

  for (const auto& [id, _] : sub.hop) sub.node_ids.push_back(id);
  for (const auto& e : g.edges()) {
    if (sub.hop.count(e.source) && sub.hop.count(e.target)) sub.edges.push_back(e);
  }
  return sub;
}

Subgraph expand_subgraph(const KnowledgeGraph& g, const std::vector<std::string>& anchors,
                         const ScoreMap& scores, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
  return expand_with_filter(g, anchors, [&](const std::string& d) {
    if (tau == 0.0) return true;
    auto it = scores.find(d);
    if (it == scores.end()) throw std::invalid_argument("no score for disease " + d);
    return it->second > tau;
  });
}

Subgraph expand_oracle_subgraph(const KnowledgeGraph& g, const std::vector<std::string>& gold) {
  return expand_with_filter(g, gold, [](const std::string&) { return true; });
}

Subgraph overlap_filter(const KnowledgeGraph& g, const std::vector<std::string>& anchors,
                        double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("overlap ratio must lie in (0, 1]");
  auto checked = checked_anchors(g, anchors);
  return expand_with_filter(g, checked, [&](const std::string& d) {
    const auto& attrs = g.neighbors(d);
    for (const auto& a : checked) {
      const auto& anchor_attrs = g.neighbors(a);
      if (anchor_attrs.empty()) continue;
      const double needed = ratio * static_cast<double>(anchor_attrs.size());
      // 1e-9 absorbs representation error in products like 0.3 * 10.
      if (static_cast<double>(shared_count(attrs, anchor_attrs)) + 1e-9 >= needed) return true;
    }
    return false;
  });
}

std::string render_statement(const Node& attribute, const Node& disease, Relation relation) {
  switch (relation) {
    case Relation::caused_by:
      return disease.name + std::string(kCauses) + attribute.name;
    case Relation::can_cause:
      return attribute.name + std::string(kCanCause) + disease.name;
    case Relation::is_a_risk_factor_of:
      return attribute.name + std::string(kRiskFactorOf) + disease.name;
  }
  return {};
}

std::optional<Statement> parse_statement(std::string_view text) {
  auto split_on = [&](std::string_view sep, Relation r) -> std::optional<Statement> {
    auto pos = text.find(sep);
    if (pos == std::string_view::npos || pos == 0 || pos + sep.size() >= text.size()) {
      return std::nullopt;
    }
    return Statement{std::string(text.substr(0, pos)), r,
                     std::string(text.substr(pos + sep.size()))};
  };
  if (auto s = split_on(kRiskFactorOf, Relation::is_a_risk_factor_of)) return s;
  if (auto s = split_on(kCanCause, Relation::can_cause)) return s;
  return split_on(kCauses, Relation::caused_by);
}

std::vector<std::string> linearize(const Subgraph& sub, const KnowledgeGraph& g) {
  using Key = std::tuple<std::string, Relation, std::string>;
  std::map<Key, std::string> ordered;
  for (const auto& e : sub.edges) {
    const Node& attribute = g.node(e.source);
    const Node& disease = g.node(e.target);
    ordered.emplace(Key{disease.name, e.relation, attribute.name},
                    render_statement(attribute, disease, e.relation));
  }
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto& [_, text] : ordered) {
    if (seen.insert(text).second) out.push_back(std::move(text));
  }
  return out;
}

double grounding_ratio(const KnowledgeGraph& g, const PatientProfile& profile,
                       const NameMatcher& matcher) {
  std::set<std::string> items;
  for (const auto& a : profile.hpi_affirmed) items.insert(normalize_name(a.name));
  for (const auto& d : profile.hpi_denied) items.insert(normalize_name(d));
  for (const auto& b : profile.background.all()) items.insert(normalize_name(background_head(b)));
  items.erase("");
  if (items.empty()) return 0.0;

  auto is_attribute = [&](const std::optional<std::string>& id) {
    if (!id) return false;
    const Node* n = g.find(*id);
    return n && n->kind != NodeKind::disease;
  };
  std::size_t mapped = 0;
  for (const auto& item : items) {
    if (is_attribute(g.id_for_name(item)) || (matcher && is_attribute(matcher(item)))) ++mapped;
  }
  return static_cast<double>(mapped) / static_cast<double>(items.size());
}

}  // namespace kgdx
