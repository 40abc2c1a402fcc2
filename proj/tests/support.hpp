#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ontotutor/ontotutor.hpp"

namespace testing_support {

namespace fs = std::filesystem;

inline fs::path sample(const std::string& name) { return fs::path(ONTOTUTOR_SAMPLES_DIR) / name; }

/// Fresh, empty scratch directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ontotutor-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline ontotutor::Concept node(std::string id, std::string label = {}) {
  return {std::move(id), label.empty() ? std::string{} : std::move(label), {}};
}

inline ontotutor::ContentItem item(std::string id, std::string concept_id, ontotutor::ContentKind kind,
                                   double threshold) {
  return {std::move(id), std::move(concept_id), kind, ontotutor::default_channel(kind), threshold, {}};
}

/// Two-level graph: functions above linear and quadratic, all three assigned.
inline ontotutor::OntologyGraph functions_graph() {
  using namespace ontotutor;
  OntologyGraph g;
  g = add_concept(g, node("functions", "Functions"));
  g = add_concept(g, node("linear", "Linear functions"));
  g = add_concept(g, node("quadratic", "Quadratic functions"));
  g = add_edge(g, {"functions", "linear", "has-subclass"});
  g = add_edge(g, {"functions", "quadratic", "has-subclass"});
  g = add_content(g, item("lin-graph", "linear", ContentKind::Image, 0.9));
  g = add_content(g, item("lin-text", "linear", ContentKind::Text, 0.0));
  g = add_content(g, item("quad-problems", "quadratic", ContentKind::PracticeProblem, 0.5));
  g = assign_agent(g, "functions", "agent-functions");
  g = assign_agent(g, "linear", "agent-linear");
  g = assign_agent(g, "quadratic", "agent-quadratic");
  return g;
}

inline std::vector<double> random_vector(ontotutor::Rng& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace testing_support
