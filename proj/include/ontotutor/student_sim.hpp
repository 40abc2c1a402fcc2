#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ontotutor/error.hpp"
#include "ontotutor/metric_transform.hpp"
#include "ontotutor/rl_engine.hpp"
#include "ontotutor/rng.hpp"

namespace ontotutor {

/// Synthetic student. `preference` is aligned with the action channels and is
/// the action that maximizes both match score and skill gain.
struct StudentProfile {
  std::map<std::string, double> skills;
  std::vector<double> preference;
  double learn_rate = 0.1;
  double base_time = 200.0;
  double engagement_base = 0.8;
  double frustration = 0.2;

  bool operator==(const StudentProfile&) const = default;
};

/// Telemetry of one section: quiz fraction, total seconds, engaged seconds,
/// interaction count, emotion code (0 negative, 1 neutral, 2 positive).
struct RawMetrics {
  double quiz = 0.0;
  double total_time = 0.0;
  double engaged_time = 0.0;
  double interactions = 0.0;
  int emotion = 1;

  bool operator==(const RawMetrics&) const = default;

  /// y1..y5 in order.
  std::vector<double> as_vector() const { return {quiz, total_time, engaged_time, interactions, double(emotion)}; }

  double named(std::string_view name) const {
    if (name == "y1") return quiz;
    if (name == "y2") return total_time;
    if (name == "y3") return engaged_time;
    if (name == "y4") return interactions;
    if (name == "y5") return emotion;
    throw Error(ErrorCode::UnknownMetric, "simulator does not emit " + std::string(name));
  }
};

inline bool is_raw_metric_name(std::string_view name) {
  return name == "y1" || name == "y2" || name == "y3" || name == "y4" || name == "y5";
}

/// Mean and spread of one sampled field; samples are mean + spread * N(0, 1)
/// clamped into the field's bounds.
struct FieldDistribution {
  double mean = 0.0;
  double spread = 0.0;

  bool operator==(const FieldDistribution&) const = default;
};

struct PopulationSpec {
  std::size_t count = 1;
  std::vector<std::string> concepts;
  FieldDistribution skill{0.5, 0.0};
  std::vector<double> preference_mean{0.9, 0.2, 0.7, 0.4, 0.6};
  std::vector<double> preference_spread{0.0, 0.0, 0.0, 0.0, 0.0};
  FieldDistribution learn_rate{0.1, 0.0};
  FieldDistribution base_time{200.0, 0.0};
  FieldDistribution engagement{0.8, 0.0};
  FieldDistribution frustration{0.2, 0.0};
  std::uint64_t seed = 0;

  bool operator==(const PopulationSpec&) const = default;
};

struct SimOptions {
  bool zero_noise = false;
  double interaction_max = kDefaultInteractionMax;
};

inline constexpr double kMinLearnRate = 1e-3;
inline constexpr double kMaxLearnRate = 0.3;

inline void validate_spec(const PopulationSpec& spec) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::BadSpec, what); };
  if (spec.count < 1) bad("population count must be at least 1");
  if (spec.preference_mean.empty()) bad("preference mean must be non-empty");
  if (spec.preference_spread.size() != spec.preference_mean.size())
    bad("preference spread must match preference mean length");
  for (double v : spec.preference_mean)
    if (!(v >= 0.0 && v <= 1.0)) bad("preference means must lie in [0, 1]");
  for (double v : spec.preference_spread)
    if (!(v >= 0.0)) bad("preference spreads must be non-negative");
  auto field = [&](const FieldDistribution& f, double lo, double hi, const char* name, bool open_lo = false) {
    if (!(f.spread >= 0.0)) bad(std::string(name) + " spread must be non-negative");
    const bool lo_ok = open_lo ? f.mean > lo : f.mean >= lo;
    if (!lo_ok || !(f.mean <= hi)) bad(std::string(name) + " mean out of bounds");
  };
  field(spec.skill, 0.0, 1.0, "skill");
  field(spec.learn_rate, 0.0, kMaxLearnRate, "learn rate", true);
  field(spec.base_time, 0.0, 1e9, "base time", true);
  field(spec.engagement, 0.0, 1.0, "engagement");
  field(spec.frustration, 0.0, 1.0, "frustration");
}

/// Students are sampled independently; student i draws from the stream
/// derive_seed(seed, i).
inline std::vector<StudentProfile> spawn_population(const PopulationSpec& spec) {
  validate_spec(spec);
  std::vector<StudentProfile> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    Rng rng(derive_seed(spec.seed, i));
    auto draw = [&](const FieldDistribution& f, double lo, double hi) {
      return std::clamp(f.mean + f.spread * rng.gaussian(), lo, hi);
    };
    StudentProfile p;
    for (const auto& c : spec.concepts) p.skills[c] = draw(spec.skill, 0.0, 1.0);
    p.preference.resize(spec.preference_mean.size());
    for (std::size_t k = 0; k < p.preference.size(); ++k)
      p.preference[k] = draw({spec.preference_mean[k], spec.preference_spread[k]}, 0.0, 1.0);
    p.learn_rate = draw(spec.learn_rate, kMinLearnRate, kMaxLearnRate);
    p.base_time = draw(spec.base_time, 1.0, 1e9);
    p.engagement_base = draw(spec.engagement, 0.0, 1.0);
    p.frustration = draw(spec.frustration, 0.0, 1.0);
    out.push_back(std::move(p));
  }
  return out;
}

/// 1 - mean absolute deviation between the action and the preference.
inline double match_score(const StudentProfile& profile, const ActionVec& a) {
  if (a.size() != profile.preference.size())
    throw Error(ErrorCode::DimensionMismatch, "action has " + std::to_string(a.size()) + " components, profile has " +
                                                  std::to_string(profile.preference.size()));
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += std::abs(a[k] - profile.preference[k]);
  return 1.0 - sum / static_cast<double>(a.size());
}

inline ActionVec optimal_action(const StudentProfile& profile) { return {profile.preference}; }

inline int emotion_code(double frustration) {
  if (frustration < 0.25) return 2;
  if (frustration < 0.6) return 1;
  return 0;
}

namespace detail {

inline double symmetric_noise(Rng& rng, const SimOptions& opt, double half_width) {
  return opt.zero_noise ? 0.0 : rng.uniform(-half_width, half_width);
}

inline double skill_of(const StudentProfile& profile, std::string_view concept_id) {
  auto it = profile.skills.find(std::string(concept_id));
  if (it == profile.skills.end()) throw Error(ErrorCode::UnknownConcept, "student has no skill on " + std::string(concept_id));
  return it->second;
}

}  // namespace detail

/// Telemetry of a student entering a section before any assistance: quiz at
/// current skill, engagement at the student's resting level, emotion from the
/// current frustration.
inline RawMetrics observe(const StudentProfile& profile, std::string_view concept_id, Rng& rng, const SimOptions& opt) {
  const double theta = detail::skill_of(profile, concept_id);
  RawMetrics y;
  y.quiz = std::clamp(theta + detail::symmetric_noise(rng, opt, 0.05), 0.0, 1.0);
  y.total_time = profile.base_time * (1.0 + profile.frustration) * (1.0 + detail::symmetric_noise(rng, opt, 0.1));
  y.engaged_time =
      y.total_time * std::clamp(profile.engagement_base + detail::symmetric_noise(rng, opt, 0.05), 0.0, 1.0);
  y.interactions = std::round(opt.interaction_max * profile.engagement_base);
  y.emotion = emotion_code(profile.frustration);
  return y;
}

struct SectionOutcome {
  RawMetrics metrics;
  StudentProfile profile;
};

/// One assisted section: the student learns in proportion to how well the
/// assistance matches their preference, and frustration drifts toward or
/// away from zero around a neutral match of 0.5.
inline SectionOutcome run_section(const StudentProfile& profile, std::string_view concept_id, const ActionVec& a,
                                  Rng& rng, const SimOptions& opt) {
  const double theta = detail::skill_of(profile, concept_id);
  const double m = match_score(profile, a);
  SectionOutcome out{{}, profile};
  const double theta_next = std::clamp(theta + profile.learn_rate * m, 0.0, 1.0);
  out.profile.skills[std::string(concept_id)] = theta_next;

  RawMetrics& y = out.metrics;
  y.quiz = std::clamp(theta_next + detail::symmetric_noise(rng, opt, 0.05), 0.0, 1.0);
  y.total_time = profile.base_time * (1.0 + profile.frustration) * (1.0 + detail::symmetric_noise(rng, opt, 0.1));
  y.engaged_time = y.total_time * std::clamp(profile.engagement_base * (0.5 + 0.5 * m) +
                                                 detail::symmetric_noise(rng, opt, 0.05),
                                             0.0, 1.0);
  y.interactions = std::round(opt.interaction_max * profile.engagement_base * m);
  const double f_next = std::clamp(profile.frustration + 0.3 * (0.5 - m), 0.0, 1.0);
  out.profile.frustration = f_next;
  y.emotion = emotion_code(f_next);
  return out;
}

inline std::string population_csv(const std::vector<StudentProfile>& students) {
  std::vector<std::string> concepts;
  std::size_t pref_dim = 0;
  if (!students.empty()) {
    for (const auto& [c, _] : students.front().skills) concepts.push_back(c);
    pref_dim = students.front().preference.size();
  }
  std::ostringstream os;
  os.precision(17);
  os << "student,learn_rate,base_time,engagement_base,frustration";
  for (std::size_t k = 0; k < pref_dim; ++k) os << ",p" << (k + 1);
  for (const auto& c : concepts) os << ",skill:" << c;
  os << "\n";
  for (std::size_t i = 0; i < students.size(); ++i) {
    const auto& s = students[i];
    os << i << ',' << s.learn_rate << ',' << s.base_time << ',' << s.engagement_base << ',' << s.frustration;
    for (double p : s.preference) os << ',' << p;
    for (const auto& c : concepts) os << ',' << s.skills.at(c);
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Document form (the "population" section of an experiment config)

namespace detail {

inline FieldDistribution field_from_json(const json& j, FieldDistribution base, std::string_view where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  require_object(j, where);
  reject_unknown_keys(j, {"mean", "spread"}, where);
  if (j.contains("mean")) base.mean = get_as<double>(j["mean"], where);
  if (j.contains("spread")) base.spread = get_as<double>(j["spread"], where);
  return base;
}

inline PopulationSpec population_from_json(const json& j, PopulationSpec base = {}) {
  require_object(j, "population");
  reject_unknown_keys(j,
                      {"count", "skill", "preference_mean", "preference_spread", "learn_rate", "base_time",
                       "engagement", "frustration", "seed"},
                      "population");
  if (j.contains("count")) {
    const auto count = get_as<long long>(j["count"], "population.count");
    if (count < 1) throw Error(ErrorCode::BadSpec, "population count must be at least 1");
    base.count = static_cast<std::size_t>(count);
  }
  if (j.contains("skill")) base.skill = field_from_json(j["skill"], base.skill, "population.skill");
  if (j.contains("preference_mean")) {
    base.preference_mean = get_as<std::vector<double>>(j["preference_mean"], "population.preference_mean");
    if (!j.contains("preference_spread")) base.preference_spread.assign(base.preference_mean.size(), 0.0);
  }
  if (j.contains("preference_spread")) {
    const auto& s = j["preference_spread"];
    if (s.is_number()) base.preference_spread.assign(base.preference_mean.size(), s.get<double>());
    else base.preference_spread = get_as<std::vector<double>>(s, "population.preference_spread");
  }
  if (j.contains("learn_rate")) base.learn_rate = field_from_json(j["learn_rate"], base.learn_rate, "population.learn_rate");
  if (j.contains("base_time")) base.base_time = field_from_json(j["base_time"], base.base_time, "population.base_time");
  if (j.contains("engagement")) base.engagement = field_from_json(j["engagement"], base.engagement, "population.engagement");
  if (j.contains("frustration"))
    base.frustration = field_from_json(j["frustration"], base.frustration, "population.frustration");
  if (j.contains("seed")) base.seed = get_as<std::uint64_t>(j["seed"], "population.seed");
  return base;
}

}  // namespace detail
}  // namespace ontotutor
