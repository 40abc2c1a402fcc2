#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ontotutor/error.hpp"
#include "ontotutor/json_util.hpp"

namespace ontotutor {

using AttributeValue = std::variant<double, std::string>;

struct Concept {
  std::string id;
  std::string label;
  std::map<std::string, AttributeValue> attributes;

  bool operator==(const Concept&) const = default;
};

/// Directed relation between two concepts; `property` is a free-form label
/// such as "has-subclass".
struct SemanticEdge {
  std::string from;
  std::string to;
  std::string property;

  bool operator==(const SemanticEdge&) const = default;
  auto operator<=>(const SemanticEdge&) const = default;
};

enum class ContentKind { Text, Image, Video, Example, PracticeProblem };
enum class Channel { Visual, Example, Practice };

inline std::string_view to_string(ContentKind k) {
  switch (k) {
    case ContentKind::Text: return "text";
    case ContentKind::Image: return "image";
    case ContentKind::Video: return "video";
    case ContentKind::Example: return "example";
    case ContentKind::PracticeProblem: return "practice-problem";
  }
  return "text";
}

inline std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::Visual: return "visual";
    case Channel::Example: return "example";
    case Channel::Practice: return "practice";
  }
  return "visual";
}

inline std::optional<ContentKind> parse_content_kind(std::string_view s) {
  for (auto k : {ContentKind::Text, ContentKind::Image, ContentKind::Video, ContentKind::Example,
                 ContentKind::PracticeProblem})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline std::optional<Channel> parse_channel(std::string_view s) {
  for (auto c : {Channel::Visual, Channel::Example, Channel::Practice})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

/// Channel implied by an item's kind. Text items are gated by any channel, so
/// their stored channel is informational only.
inline Channel default_channel(ContentKind kind) {
  switch (kind) {
    case ContentKind::Image: return Channel::Visual;
    case ContentKind::Video:
    case ContentKind::Example: return Channel::Example;
    case ContentKind::PracticeProblem: return Channel::Practice;
    case ContentKind::Text: return Channel::Visual;
  }
  return Channel::Visual;
}

inline bool channel_consistent(ContentKind kind, Channel channel) {
  return kind == ContentKind::Text || default_channel(kind) == channel;
}

struct ContentItem {
  std::string id;
  std::string concept_id;
  ContentKind kind = ContentKind::Text;
  Channel channel = Channel::Visual;
  double threshold = 0.0;
  std::string body;

  bool operator==(const ContentItem&) const = default;
};

struct AgentAssignment {
  std::string concept_id;
  std::string agent_id;

  bool operator==(const AgentAssignment&) const = default;
  auto operator<=>(const AgentAssignment&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ErrorCode kind) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; });
  }
};

/// Concept DAG with attached content and agent assignments.
///
/// Values built through the mutation functions below always satisfy the type
/// invariants. `OntologyGraph::unchecked` exists for loaders, which construct
/// the raw value first and then run `validate` on it.
class OntologyGraph {
 public:
  OntologyGraph() = default;

  static OntologyGraph unchecked(std::vector<Concept> concepts, std::vector<SemanticEdge> edges,
                                 std::vector<ContentItem> content, std::vector<AgentAssignment> assignments) {
    OntologyGraph g;
    g.concepts_ = std::move(concepts);
    g.edges_ = std::move(edges);
    g.content_ = std::move(content);
    g.assignments_ = std::move(assignments);
    return g;
  }

  const std::vector<Concept>& concepts() const { return concepts_; }
  const std::vector<SemanticEdge>& edges() const { return edges_; }
  const std::vector<ContentItem>& content() const { return content_; }
  const std::vector<AgentAssignment>& assignments() const { return assignments_; }

  bool empty() const { return concepts_.empty(); }
  std::size_t size() const { return concepts_.size(); }

  const Concept* find_concept(std::string_view id) const {
    for (const auto& c : concepts_)
      if (c.id == id) return &c;
    return nullptr;
  }
  bool has_concept(std::string_view id) const { return find_concept(id) != nullptr; }

  const Concept& concept_at(std::string_view id) const {
    if (const auto* c = find_concept(id)) return *c;
    throw Error(ErrorCode::UnknownConcept, std::string(id));
  }

  std::optional<std::string> agent_for(std::string_view concept_id) const {
    for (const auto& a : assignments_)
      if (a.concept_id == concept_id) return a.agent_id;
    return std::nullopt;
  }

  std::optional<std::string> concept_of_agent(std::string_view agent_id) const {
    for (const auto& a : assignments_)
      if (a.agent_id == agent_id) return a.concept_id;
    return std::nullopt;
  }

  std::vector<std::string> children(std::string_view id) const {
    std::set<std::string> out;
    for (const auto& e : edges_)
      if (e.from == id) out.insert(e.to);
    return {out.begin(), out.end()};
  }

  std::vector<std::string> parents(std::string_view id) const {
    std::set<std::string> out;
    for (const auto& e : edges_)
      if (e.to == id) out.insert(e.from);
    return {out.begin(), out.end()};
  }

  /// Concepts reachable from `id` along outgoing edges, including `id`.
  std::set<std::string> reachable_from(std::string_view id) const {
    std::set<std::string> seen{std::string(id)};
    std::vector<std::string> stack{std::string(id)};
    while (!stack.empty()) {
      const std::string cur = std::move(stack.back());
      stack.pop_back();
      for (const auto& e : edges_)
        if (e.from == cur && seen.insert(e.to).second) stack.push_back(e.to);
    }
    return seen;
  }

  // Structural equality ignores insertion order.
  friend bool operator==(const OntologyGraph& a, const OntologyGraph& b) {
    auto by_id = [](const auto& x, const auto& y) { return x.id < y.id; };
    auto sorted = [](auto v, auto cmp) {
      std::sort(v.begin(), v.end(), cmp);
      return v;
    };
    return sorted(a.concepts_, by_id) == sorted(b.concepts_, by_id) &&
           sorted(a.edges_, std::less<>{}) == sorted(b.edges_, std::less<>{}) &&
           sorted(a.content_, by_id) == sorted(b.content_, by_id) &&
           sorted(a.assignments_, std::less<>{}) == sorted(b.assignments_, std::less<>{});
  }

 private:
  friend OntologyGraph add_concept(OntologyGraph, Concept);
  friend OntologyGraph add_edge(OntologyGraph, SemanticEdge);
  friend OntologyGraph add_content(OntologyGraph, ContentItem);
  friend OntologyGraph assign_agent(OntologyGraph, std::string_view, std::string_view);

  std::vector<Concept> concepts_;
  std::vector<SemanticEdge> edges_;
  std::vector<ContentItem> content_;
  std::vector<AgentAssignment> assignments_;
};

// Mutations take the graph by value and return the updated graph; a throwing
// call leaves the caller's value untouched.

inline OntologyGraph add_concept(OntologyGraph graph, Concept node) {
  if (node.id.empty()) throw Error(ErrorCode::BadParameter, "concept id must be non-empty");
  for (const auto& [key, _] : node.attributes)
    if (key.empty()) throw Error(ErrorCode::BadParameter, "attribute key must be non-empty on " + node.id);
  if (graph.has_concept(node.id)) throw Error(ErrorCode::DuplicateId, node.id);
  if (node.label.empty()) node.label = node.id;
  graph.concepts_.push_back(std::move(node));
  return graph;
}

inline OntologyGraph add_edge(OntologyGraph graph, SemanticEdge edge) {
  if (!graph.has_concept(edge.from)) throw Error(ErrorCode::UnknownConcept, edge.from);
  if (!graph.has_concept(edge.to)) throw Error(ErrorCode::UnknownConcept, edge.to);
  if (edge.from == edge.to) throw Error(ErrorCode::SelfLoop, edge.from);
  if (std::find(graph.edges_.begin(), graph.edges_.end(), edge) != graph.edges_.end())
    throw Error(ErrorCode::DuplicateId, "edge " + edge.from + "->" + edge.to + " (" + edge.property + ")");
  // from -> to closes a cycle iff from is already reachable from to.
  if (graph.reachable_from(edge.to).contains(edge.from))
    throw Error(ErrorCode::CycleDetected, edge.from + "->" + edge.to);
  graph.edges_.push_back(std::move(edge));
  return graph;
}

inline OntologyGraph add_content(OntologyGraph graph, ContentItem item) {
  if (item.id.empty()) throw Error(ErrorCode::BadParameter, "content id must be non-empty");
  if (!graph.has_concept(item.concept_id)) throw Error(ErrorCode::UnknownConcept, item.concept_id);
  for (const auto& c : graph.content_)
    if (c.id == item.id) throw Error(ErrorCode::DuplicateId, item.id);
  if (!(item.threshold >= 0.0 && item.threshold <= 1.0))
    throw Error(ErrorCode::ThresholdOutOfRange, item.id + " threshold " + std::to_string(item.threshold));
  if (!channel_consistent(item.kind, item.channel))
    throw Error(ErrorCode::ChannelMismatch, item.id);
  graph.content_.push_back(std::move(item));
  return graph;
}

inline OntologyGraph assign_agent(OntologyGraph graph, std::string_view concept_id, std::string_view agent_id) {
  if (!graph.has_concept(concept_id)) throw Error(ErrorCode::UnknownConcept, std::string(concept_id));
  if (agent_id.empty()) throw Error(ErrorCode::BadParameter, "agent id must be non-empty");
  if (graph.agent_for(concept_id)) throw Error(ErrorCode::AlreadyAssigned, std::string(concept_id));
  if (graph.concept_of_agent(agent_id)) throw Error(ErrorCode::DuplicateId, std::string(agent_id));
  graph.assignments_.push_back({std::string(concept_id), std::string(agent_id)});
  return graph;
}

/// Topological order of every concept. Among concepts whose prerequisites are
/// all placed, the lexicographically smallest id goes first.
inline std::vector<std::string> lesson_order(const OntologyGraph& graph) {
  std::map<std::string, std::size_t> indegree;
  for (const auto& c : graph.concepts()) indegree.emplace(c.id, 0);
  for (const auto& e : graph.edges())
    if (indegree.contains(e.from) && indegree.contains(e.to)) ++indegree[e.to];

  std::set<std::string> ready;
  for (const auto& [id, deg] : indegree)
    if (deg == 0) ready.insert(id);

  std::vector<std::string> order;
  order.reserve(indegree.size());
  while (!ready.empty()) {
    std::string cur = *ready.begin();
    ready.erase(ready.begin());
    for (const auto& e : graph.edges()) {
      if (e.from != cur) continue;
      auto it = indegree.find(e.to);
      if (it != indegree.end() && --it->second == 0) ready.insert(e.to);
    }
    order.push_back(std::move(cur));
  }
  return order;
}

/// Content attached to `concept_id` or to any of its descendants, ordered by id.
inline std::vector<ContentItem> content_for(const OntologyGraph& graph, std::string_view concept_id) {
  if (!graph.has_concept(concept_id)) throw Error(ErrorCode::UnknownConcept, std::string(concept_id));
  const auto reach = graph.reachable_from(concept_id);
  std::map<std::string, ContentItem> picked;
  for (const auto& item : graph.content())
    if (reach.contains(item.concept_id)) picked.emplace(item.id, item);
  std::vector<ContentItem> out;
  out.reserve(picked.size());
  for (auto& [_, item] : picked) out.push_back(std::move(item));
  return out;
}

/// Agent ids on the parents and children of an assigned concept, sorted.
inline std::vector<std::string> neighbors_with_agents(const OntologyGraph& graph, std::string_view concept_id) {
  if (!graph.has_concept(concept_id)) throw Error(ErrorCode::UnknownConcept, std::string(concept_id));
  if (!graph.agent_for(concept_id)) throw Error(ErrorCode::NotAssigned, std::string(concept_id));
  std::set<std::string> agents;
  auto collect = [&](const std::vector<std::string>& ids) {
    for (const auto& id : ids)
      if (auto a = graph.agent_for(id)) agents.insert(*a);
  };
  collect(graph.parents(concept_id));
  collect(graph.children(concept_id));
  return {agents.begin(), agents.end()};
}

namespace detail {

inline bool has_cycle(const OntologyGraph& graph) {
  std::set<std::string> ids;
  for (const auto& c : graph.concepts()) ids.insert(c.id);
  std::size_t valid_nodes = ids.size();
  // Kahn's algorithm places every node iff the graph is acyclic.
  return lesson_order(graph).size() != valid_nodes;
}

}  // namespace detail

/// Reports every broken invariant. An empty report means the graph would
/// have been constructible through the checked mutation functions.
inline ValidationReport validate(const OntologyGraph& graph) {
  ValidationReport report;
  auto add = [&](ErrorCode kind, std::string msg) { report.violations.push_back({kind, std::move(msg)}); };

  std::set<std::string> concept_ids;
  for (const auto& c : graph.concepts()) {
    if (c.id.empty()) add(ErrorCode::BadParameter, "concept with empty id");
    if (!concept_ids.insert(c.id).second) add(ErrorCode::DuplicateId, "concept " + c.id);
    for (const auto& [key, _] : c.attributes)
      if (key.empty()) add(ErrorCode::BadParameter, "empty attribute key on concept " + c.id);
  }

  std::set<SemanticEdge> seen_edges;
  for (const auto& e : graph.edges()) {
    const std::string name = e.from + "->" + e.to;
    if (!concept_ids.contains(e.from)) add(ErrorCode::DanglingReference, "edge " + name + " source " + e.from);
    if (!concept_ids.contains(e.to)) add(ErrorCode::DanglingReference, "edge " + name + " target " + e.to);
    if (e.from == e.to) add(ErrorCode::SelfLoop, "edge " + name);
    if (!seen_edges.insert(e).second) add(ErrorCode::DuplicateId, "edge " + name + " (" + e.property + ")");
  }
  if (!report.has(ErrorCode::SelfLoop) && detail::has_cycle(graph))
    add(ErrorCode::CycleDetected, "edges contain a directed cycle");

  std::set<std::string> content_ids;
  for (const auto& item : graph.content()) {
    if (item.id.empty()) add(ErrorCode::BadParameter, "content item with empty id");
    if (!content_ids.insert(item.id).second) add(ErrorCode::DuplicateId, "content " + item.id);
    if (!concept_ids.contains(item.concept_id))
      add(ErrorCode::DanglingReference, "content " + item.id + " concept " + item.concept_id);
    if (!(item.threshold >= 0.0 && item.threshold <= 1.0))
      add(ErrorCode::ThresholdOutOfRange, "content " + item.id + " threshold " + std::to_string(item.threshold));
    if (!channel_consistent(item.kind, item.channel))
      add(ErrorCode::ChannelMismatch, "content " + item.id + " kind " + std::string(to_string(item.kind)) +
                                          " on channel " + std::string(to_string(item.channel)));
  }

  std::set<std::string> assigned_concepts, agent_ids;
  for (const auto& a : graph.assignments()) {
    if (!concept_ids.contains(a.concept_id))
      add(ErrorCode::DanglingReference, "assignment of " + a.agent_id + " to unknown concept " + a.concept_id);
    if (!assigned_concepts.insert(a.concept_id).second) add(ErrorCode::AlreadyAssigned, "concept " + a.concept_id);
    if (a.agent_id.empty()) add(ErrorCode::BadParameter, "assignment with empty agent id on " + a.concept_id);
    if (!agent_ids.insert(a.agent_id).second) add(ErrorCode::DuplicateId, "agent " + a.agent_id);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Document form

inline detail::json to_json(const OntologyGraph& graph) {
  using detail::json;
  json concepts = json::array();
  for (const auto& c : graph.concepts()) {
    json attrs = json::object();
    for (const auto& [k, v] : c.attributes)
      std::visit([&](const auto& x) { attrs[k] = x; }, v);
    concepts.push_back({{"id", c.id}, {"label", c.label}, {"attributes", attrs}});
  }
  json edges = json::array();
  for (const auto& e : graph.edges()) edges.push_back({{"from", e.from}, {"to", e.to}, {"property", e.property}});
  json content = json::array();
  for (const auto& item : graph.content())
    content.push_back({{"id", item.id},
                       {"concept", item.concept_id},
                       {"kind", to_string(item.kind)},
                       {"channel", to_string(item.channel)},
                       {"threshold", item.threshold},
                       {"body", item.body}});
  json assignments = json::array();
  for (const auto& a : graph.assignments()) assignments.push_back({{"concept", a.concept_id}, {"agent_id", a.agent_id}});
  return {{"concepts", concepts}, {"edges", edges}, {"content", content}, {"assignments", assignments}};
}

inline std::string save_ontology(const OntologyGraph& graph) { return to_json(graph).dump(2) + "\n"; }

/// Parses a document into a graph without checking graph invariants.
inline OntologyGraph parse_ontology(std::string_view text) {
  using namespace detail;
  const json doc = parse_json(text);
  require_object(doc, "ontology");
  reject_unknown_keys(doc, {"concepts", "edges", "content", "assignments"}, "ontology");

  std::vector<Concept> concepts;
  if (auto it = doc.find("concepts"); it != doc.end()) {
    require_array(*it, "concepts");
    for (const auto& jc : *it) {
      require_object(jc, "concept");
      reject_unknown_keys(jc, {"id", "label", "attributes"}, "concept");
      Concept c;
      c.id = get_as<std::string>(require(jc, "id", "concept"), "concept.id");
      c.label = jc.contains("label") ? get_as<std::string>(jc["label"], "concept.label") : c.id;
      if (auto at = jc.find("attributes"); at != jc.end()) {
        require_object(*at, "concept.attributes");
        for (auto kv = at->begin(); kv != at->end(); ++kv) {
          if (kv->is_number()) c.attributes[kv.key()] = kv->get<double>();
          else if (kv->is_string()) c.attributes[kv.key()] = kv->get<std::string>();
          else schema_fail("concept.attributes." + kv.key() + ": expected number or string");
        }
      }
      concepts.push_back(std::move(c));
    }
  }

  std::vector<SemanticEdge> edges;
  if (auto it = doc.find("edges"); it != doc.end()) {
    require_array(*it, "edges");
    for (const auto& je : *it) {
      require_object(je, "edge");
      reject_unknown_keys(je, {"from", "to", "property"}, "edge");
      edges.push_back({get_as<std::string>(require(je, "from", "edge"), "edge.from"),
                       get_as<std::string>(require(je, "to", "edge"), "edge.to"),
                       je.contains("property") ? get_as<std::string>(je["property"], "edge.property") : ""});
    }
  }

  std::vector<ContentItem> content;
  if (auto it = doc.find("content"); it != doc.end()) {
    require_array(*it, "content");
    for (const auto& ji : *it) {
      require_object(ji, "content item");
      reject_unknown_keys(ji, {"id", "concept", "kind", "channel", "threshold", "body"}, "content item");
      ContentItem item;
      item.id = get_as<std::string>(require(ji, "id", "content item"), "content.id");
      item.concept_id = get_as<std::string>(require(ji, "concept", "content item"), "content.concept");
      const auto kind = get_as<std::string>(require(ji, "kind", "content item"), "content.kind");
      const auto parsed_kind = parse_content_kind(kind);
      if (!parsed_kind) schema_fail("content.kind: unknown kind '" + kind + "'");
      item.kind = *parsed_kind;
      item.channel = default_channel(item.kind);
      if (ji.contains("channel")) {
        const auto ch = get_as<std::string>(ji["channel"], "content.channel");
        const auto parsed = parse_channel(ch);
        if (!parsed) schema_fail("content.channel: unknown channel '" + ch + "'");
        item.channel = *parsed;
      }
      item.threshold = get_as<double>(require(ji, "threshold", "content item"), "content.threshold");
      item.body = ji.contains("body") ? get_as<std::string>(ji["body"], "content.body") : "";
      content.push_back(std::move(item));
    }
  }

  std::vector<AgentAssignment> assignments;
  if (auto it = doc.find("assignments"); it != doc.end()) {
    require_array(*it, "assignments");
    for (const auto& ja : *it) {
      require_object(ja, "assignment");
      reject_unknown_keys(ja, {"concept", "agent_id"}, "assignment");
      assignments.push_back({get_as<std::string>(require(ja, "concept", "assignment"), "assignment.concept"),
                             get_as<std::string>(require(ja, "agent_id", "assignment"), "assignment.agent_id")});
    }
  }
  return OntologyGraph::unchecked(std::move(concepts), std::move(edges), std::move(content), std::move(assignments));
}

/// Parses and validates; throws ParseError or ValidationError.
inline OntologyGraph load_ontology(std::string_view text) {
  auto graph = parse_ontology(text);
  auto report = validate(graph);
  if (!report.ok()) throw ValidationError(std::move(report.violations));
  return graph;
}

inline OntologyGraph load_ontology_file(const std::filesystem::path& path) { return load_ontology(detail::read_file(path)); }

}  // namespace ontotutor
