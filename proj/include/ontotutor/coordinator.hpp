#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "ontotutor/ontology.hpp"
#include "ontotutor/rl_engine.hpp"

namespace ontotutor {

struct ShareResult {
  std::string recipient;
  std::map<std::string, std::size_t> copied_from;  // donor id -> transitions copied
  std::size_t total = 0;
  std::string notice;  // set when there was nothing to share
};

/// Owns the per-concept agents and exchanges experience between agents on
/// ontology-adjacent concepts.
class Coordinator {
 public:
  explicit Coordinator(OntologyGraph graph) : graph_(std::move(graph)) {}

  const OntologyGraph& graph() const { return graph_; }

  /// Adds an agent. Its id and concept must match an ontology assignment.
  void attach(Agent agent) {
    const auto assigned = graph_.agent_for(agent.concept_id);
    if (!assigned) throw Error(ErrorCode::NotAssigned, agent.concept_id);
    if (*assigned != agent.id)
      throw Error(ErrorCode::BadParameter,
                  "concept " + agent.concept_id + " is assigned to " + *assigned + ", not " + agent.id);
    std::string concept_id = agent.concept_id;
    agents_.insert_or_assign(std::move(concept_id), std::move(agent));
  }

  bool has_agent(std::string_view agent_id) const { return find(agent_id) != nullptr; }

  Agent& agent(std::string_view agent_id) {
    if (auto* a = find(agent_id)) return *a;
    throw Error(ErrorCode::UnknownAgent, std::string(agent_id));
  }
  const Agent& agent(std::string_view agent_id) const { return const_cast<Coordinator*>(this)->agent(agent_id); }

  Agent* agent_on(std::string_view concept_id) {
    auto it = agents_.find(std::string(concept_id));
    return it == agents_.end() ? nullptr : &it->second;
  }
  const Agent* agent_on(std::string_view concept_id) const {
    auto it = agents_.find(std::string(concept_id));
    return it == agents_.end() ? nullptr : &it->second;
  }

  /// Agents keyed by concept id.
  const std::map<std::string, Agent>& agents() const { return agents_; }
  std::map<std::string, Agent>& agents() { return agents_; }

  /// Copies up to `k` of the most recent transitions from every attached
  /// agent on a concept adjacent to the recipient's. Donor buffers are not
  /// touched; transitions that originated with the recipient are skipped.
  ShareResult share_experience(std::string_view to_agent, std::size_t k) {
    Agent& recipient = agent(to_agent);
    auto incoming = collect(recipient, k);
    return deliver(recipient, k, std::move(incoming));
  }

  /// Shares into every agent from donor buffers as they stood before any
  /// copy, so the order of recipients does not matter.
  std::vector<ShareResult> share_all(std::size_t k) {
    std::vector<Incoming> pending;
    for (auto& [_, recipient] : agents_) pending.push_back(collect(recipient, k));
    std::vector<ShareResult> results;
    std::size_t i = 0;
    for (auto& [_, recipient] : agents_) results.push_back(deliver(recipient, k, std::move(pending[i++])));
    return results;
  }

 private:
  using Incoming = std::vector<std::pair<std::string, std::vector<Transition>>>;

  Incoming collect(const Agent& recipient, std::size_t k) const {
    Incoming incoming;
    if (k == 0) return incoming;
    for (const auto& donor_id : neighbors_with_agents(graph_, recipient.concept_id)) {
      const Agent* donor = find(donor_id);
      if (!donor) continue;
      std::vector<Transition> picked;
      const auto& entries = donor->buffer.entries();
      for (auto it = entries.rbegin(); it != entries.rend() && picked.size() < k; ++it)
        if (it->origin != recipient.id) picked.push_back(*it);
      std::reverse(picked.begin(), picked.end());
      incoming.emplace_back(donor_id, std::move(picked));
    }
    return incoming;
  }

  static ShareResult deliver(Agent& recipient, std::size_t k, Incoming incoming) {
    ShareResult result;
    result.recipient = recipient.id;
    if (k == 0) {
      result.notice = "k = 0, nothing shared";
      return result;
    }
    for (auto& [donor_id, transitions] : incoming) {
      result.copied_from[donor_id] = transitions.size();
      result.total += transitions.size();
      for (auto& t : transitions) record(recipient, std::move(t));
    }
    if (incoming.empty()) result.notice = "no adjacent agents attached";
    else if (result.total == 0) result.notice = "adjacent agents have no transferable experience";
    return result;
  }

  Agent* find(std::string_view agent_id) {
    for (auto& [_, a] : agents_)
      if (a.id == agent_id) return &a;
    return nullptr;
  }
  const Agent* find(std::string_view agent_id) const {
    for (const auto& [_, a] : agents_)
      if (a.id == agent_id) return &a;
    return nullptr;
  }

  OntologyGraph graph_;
  std::map<std::string, Agent> agents_;
};

}  // namespace ontotutor
