#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ontotutor/error.hpp"
#include "ontotutor/json_util.hpp"
#include "ontotutor/ontology.hpp"
#include "ontotutor/rl_engine.hpp"

namespace ontotutor {

enum class GuidanceBand { Minimal, Moderate, Detailed };
enum class EncouragementBand { Neutral, Supportive, Enthusiastic };

inline std::string_view to_string(GuidanceBand b) {
  switch (b) {
    case GuidanceBand::Minimal: return "minimal";
    case GuidanceBand::Moderate: return "moderate";
    case GuidanceBand::Detailed: return "detailed";
  }
  return "minimal";
}

inline std::string_view to_string(EncouragementBand b) {
  switch (b) {
    case EncouragementBand::Neutral: return "neutral";
    case EncouragementBand::Supportive: return "supportive";
    case EncouragementBand::Enthusiastic: return "enthusiastic";
  }
  return "neutral";
}

// Action layout.
inline constexpr std::size_t kVisualIndex = 0;
inline constexpr std::size_t kExampleIndex = 1;
inline constexpr std::size_t kPracticeIndex = 2;
inline constexpr std::size_t kGuidanceIndex = 3;
inline constexpr std::size_t kEncouragementIndex = 4;

struct AssistancePlan {
  std::string concept_id;
  std::vector<std::string> items;
  std::string dialogue;
  GuidanceBand guidance = GuidanceBand::Minimal;
  EncouragementBand encouragement = EncouragementBand::Neutral;

  bool operator==(const AssistancePlan&) const = default;
};

inline void check_assist_action(const ActionVec& a) {
  if (a.size() < kStandardActionDim)
    throw Error(ErrorCode::DimensionMismatch, "assistance needs a " + std::to_string(kStandardActionDim) +
                                                  "-component action, got " + std::to_string(a.size()));
}

/// Weight gating an item: its channel's component, or the strongest of the
/// three content channels for text.
inline double gate_value(const ContentItem& item, const ActionVec& a) {
  if (item.kind == ContentKind::Text) return std::max({a[kVisualIndex], a[kExampleIndex], a[kPracticeIndex]});
  switch (item.channel) {
    case Channel::Visual: return a[kVisualIndex];
    case Channel::Example: return a[kExampleIndex];
    case Channel::Practice: return a[kPracticeIndex];
  }
  return 0.0;
}

/// Items whose gate value reaches their threshold, ordered by descending
/// threshold then id.
inline std::vector<ContentItem> select_content(std::span<const ContentItem> items, const ActionVec& a) {
  check_assist_action(a);
  std::vector<ContentItem> out;
  for (const auto& item : items)
    if (gate_value(item, a) >= item.threshold) out.push_back(item);
  std::sort(out.begin(), out.end(), [](const ContentItem& x, const ContentItem& y) {
    if (x.threshold != y.threshold) return x.threshold > y.threshold;
    return x.id < y.id;
  });
  return out;
}

namespace detail {
inline int third_band(double v) {
  if (v < 1.0 / 3.0) return 0;
  if (v < 2.0 / 3.0) return 1;
  return 2;
}
}  // namespace detail

inline std::pair<GuidanceBand, EncouragementBand> bands(const ActionVec& a) {
  check_assist_action(a);
  return {static_cast<GuidanceBand>(detail::third_band(a[kGuidanceIndex])),
          static_cast<EncouragementBand>(detail::third_band(a[kEncouragementIndex]))};
}

inline std::string template_key(GuidanceBand g, EncouragementBand e) {
  return std::string(to_string(g)) + "." + std::string(to_string(e));
}

/// Dialogue text per (guidance, encouragement) band pair, keyed
/// "guidance.encouragement". Templates may use {concept_label} and
/// {item_count}.
struct DialogueTemplates {
  std::map<std::string, std::string> entries;

  bool operator==(const DialogueTemplates&) const = default;

  bool complete() const {
    for (auto g : {GuidanceBand::Minimal, GuidanceBand::Moderate, GuidanceBand::Detailed})
      for (auto e : {EncouragementBand::Neutral, EncouragementBand::Supportive, EncouragementBand::Enthusiastic})
        if (!entries.contains(template_key(g, e))) return false;
    return true;
  }

  static DialogueTemplates standard() {
    return {{
        {"minimal.neutral", "{concept_label}: {item_count} resource(s) available."},
        {"minimal.supportive", "Here are {item_count} resource(s) on {concept_label}. You can do this."},
        {"minimal.enthusiastic", "Great progress! {item_count} resource(s) on {concept_label} are ready for you!"},
        {"moderate.neutral", "Review these {item_count} resource(s) on {concept_label}, starting with the first."},
        {"moderate.supportive",
         "Let's work through {concept_label} together. Start with the first of these {item_count} resource(s)."},
        {"moderate.enthusiastic",
         "You're doing great! Work through these {item_count} resource(s) on {concept_label} in order!"},
        {"detailed.neutral",
         "Study plan for {concept_label}: go through all {item_count} resource(s) in the order listed, then retry "
         "the quiz."},
        {"detailed.supportive",
         "Take it step by step: the {item_count} resource(s) below cover {concept_label} from the basics up. Finish "
         "each before moving on."},
        {"detailed.enthusiastic",
         "Let's master {concept_label}! Follow these {item_count} resource(s) one at a time and you'll have it!"},
    }};
  }
};

namespace detail {
inline std::string fill_slots(std::string text, const std::map<std::string, std::string>& slots) {
  for (const auto& [name, value] : slots) {
    const std::string token = "{" + name + "}";
    for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + value.size()))
      text.replace(pos, token.size(), value);
  }
  return text;
}
}  // namespace detail

struct DialogueRequest {
  const Concept* concept_node = nullptr;
  std::size_t item_count = 0;
  GuidanceBand guidance = GuidanceBand::Minimal;
  EncouragementBand encouragement = EncouragementBand::Neutral;
};

/// Produces plan dialogue. Only the template implementation ships; other
/// text generators plug in here.
class DialogueGenerator {
 public:
  virtual ~DialogueGenerator() = default;
  virtual std::string render(const DialogueRequest& request) const = 0;
};

class TemplateDialogue final : public DialogueGenerator {
 public:
  explicit TemplateDialogue(DialogueTemplates templates) : templates_(std::move(templates)) {}

  std::string render(const DialogueRequest& r) const override {
    const auto key = template_key(r.guidance, r.encouragement);
    auto it = templates_.entries.find(key);
    if (it == templates_.entries.end()) throw Error(ErrorCode::MissingTemplate, key);
    return detail::fill_slots(it->second, {{"concept_label", r.concept_node ? r.concept_node->label : ""},
                                           {"item_count", std::to_string(r.item_count)}});
  }

  const DialogueTemplates& templates() const { return templates_; }

 private:
  DialogueTemplates templates_;
};

inline AssistancePlan compose(const Concept& concept_node, std::span<const ContentItem> selected,
                              std::pair<GuidanceBand, EncouragementBand> band_pair, const DialogueTemplates& templates) {
  if (!templates.complete()) {
    for (auto g : {GuidanceBand::Minimal, GuidanceBand::Moderate, GuidanceBand::Detailed})
      for (auto e : {EncouragementBand::Neutral, EncouragementBand::Supportive, EncouragementBand::Enthusiastic})
        if (!templates.entries.contains(template_key(g, e))) throw Error(ErrorCode::MissingTemplate, template_key(g, e));
  }
  AssistancePlan plan;
  plan.concept_id = concept_node.id;
  for (const auto& item : selected) plan.items.push_back(item.id);
  plan.guidance = band_pair.first;
  plan.encouragement = band_pair.second;
  plan.dialogue = TemplateDialogue(templates).render({&concept_node, selected.size(), plan.guidance, plan.encouragement});
  return plan;
}

/// content_for -> select_content -> bands -> compose.
inline AssistancePlan generate_plan(const OntologyGraph& graph, std::string_view concept_id, const ActionVec& a,
                                    const DialogueTemplates& templates) {
  const auto items = content_for(graph, concept_id);
  const auto selected = select_content(items, a);
  return compose(graph.concept_at(concept_id), selected, bands(a), templates);
}

inline detail::json plan_to_json(const AssistancePlan& p) {
  return {{"concept", p.concept_id},
          {"items", p.items},
          {"dialogue", p.dialogue},
          {"guidance", to_string(p.guidance)},
          {"encouragement", to_string(p.encouragement)}};
}

inline DialogueTemplates load_templates(std::string_view text) {
  using namespace detail;
  const json doc = parse_json(text);
  require_object(doc, "templates");
  DialogueTemplates t;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool known = false;
    for (auto g : {GuidanceBand::Minimal, GuidanceBand::Moderate, GuidanceBand::Detailed})
      for (auto e : {EncouragementBand::Neutral, EncouragementBand::Supportive, EncouragementBand::Enthusiastic})
        known = known || it.key() == template_key(g, e);
    if (!known) schema_fail("templates: unknown key '" + it.key() + "'");
    t.entries[it.key()] = get_as<std::string>(*it, "templates." + it.key());
  }
  return t;
}

inline DialogueTemplates load_templates_file(const std::filesystem::path& path) {
  return load_templates(detail::read_file(path));
}

}  // namespace ontotutor
