#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ontotutor/error.hpp"
#include "ontotutor/json_util.hpp"

namespace ontotutor {

struct MetricRange {
  double lo = 0.0;
  double hi = 1.0;

  bool operator==(const MetricRange&) const = default;
};

struct MetricDescriptor {
  std::string name;
  std::set<std::string> descriptors;
  std::optional<MetricRange> range;  // nullopt = unbounded
  std::string unit;

  bool operator==(const MetricDescriptor&) const = default;
};

struct SourceSchema {
  std::vector<MetricDescriptor> metrics;

  bool operator==(const SourceSchema&) const = default;
};

struct TargetSchema {
  std::vector<MetricDescriptor> metrics;

  bool operator==(const TargetSchema&) const = default;

  /// Competency, engagement and emotional state, each on [0, 1].
  static TargetSchema standard() {
    return {{
        {"x1", {"competency", "quiz", "score", "accuracy"}, MetricRange{0.0, 1.0}, "fraction"},
        {"x2", {"engagement", "interaction", "time"}, MetricRange{0.0, 1.0}, "fraction"},
        {"x3", {"emotion", "affect", "frustration"}, MetricRange{0.0, 1.0}, "fraction"},
    }};
  }
};

enum class TransformFunction { Identity, Scale, RatioMean, PiecewiseOvertime };

inline std::string_view to_string(TransformFunction f) {
  switch (f) {
    case TransformFunction::Identity: return "identity";
    case TransformFunction::Scale: return "scale";
    case TransformFunction::RatioMean: return "ratio_mean";
    case TransformFunction::PiecewiseOvertime: return "piecewise_overtime";
  }
  return "identity";
}

inline std::optional<TransformFunction> parse_transform_function(std::string_view s) {
  for (auto f : {TransformFunction::Identity, TransformFunction::Scale, TransformFunction::RatioMean,
                 TransformFunction::PiecewiseOvertime})
    if (to_string(f) == s) return f;
  return std::nullopt;
}

inline constexpr double kDefaultInteractionMax = 60.0;  // y4 max, interactions per section
inline constexpr double kDefaultAverageTime = 300.0;    // y2 average, seconds

/// One target metric's mapping.
///
/// Input order and parameter meaning depend on the function:
///   identity            (v)                 x = v
///   scale               (v)                 x = v / k                  parameter k
///   ratio_mean          (inter, eng, total) x = (inter/imax + eng/total) / 2   parameter imax
///   piecewise_overtime  (emotion, total)    x = emotion/2, reduced by the relative
///                                           overtime beyond tavg, floored at 0  parameter tavg
struct TransformSpec {
  std::string target;
  std::vector<std::string> inputs;
  TransformFunction function = TransformFunction::Identity;
  std::optional<double> parameter;

  bool operator==(const TransformSpec&) const = default;

  double parameter_or_default() const {
    if (parameter) return *parameter;
    switch (function) {
      case TransformFunction::RatioMean: return kDefaultInteractionMax;
      case TransformFunction::PiecewiseOvertime: return kDefaultAverageTime;
      default: return 1.0;
    }
  }
};

inline std::size_t expected_arity(TransformFunction f) {
  switch (f) {
    case TransformFunction::Identity:
    case TransformFunction::Scale: return 1;
    case TransformFunction::RatioMean: return 3;
    case TransformFunction::PiecewiseOvertime: return 2;
  }
  return 1;
}

namespace transform_fn {

// Zero denominators yield 0; with no time spent there is no engagement evidence.
inline double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

inline double ratio_mean(double interactions, double engaged, double total, double interaction_max) {
  return (interactions / interaction_max + safe_ratio(engaged, total)) / 2.0;
}

inline double piecewise_overtime(double emotion, double total, double average_time) {
  const double base = emotion / 2.0;
  if (total <= average_time) return base;
  return std::max(base - (total - average_time) / average_time, 0.0);
}

}  // namespace transform_fn

/// Unclamped value of a spec on already-gathered inputs.
inline double evaluate_raw(const TransformSpec& spec, std::span<const double> in) {
  const double p = spec.parameter_or_default();
  switch (spec.function) {
    case TransformFunction::Identity: return in[0];
    case TransformFunction::Scale: return in[0] / p;
    case TransformFunction::RatioMean: return transform_fn::ratio_mean(in[0], in[1], in[2], p);
    case TransformFunction::PiecewiseOvertime: return transform_fn::piecewise_overtime(in[0], in[1], p);
  }
  return 0.0;
}

struct BindingSuggestion {
  std::string source;
  std::string target;
  double score = 0.0;

  bool operator==(const BindingSuggestion&) const = default;
};

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& x : a) common += b.contains(x) ? 1 : 0;
  const std::size_t uni = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

/// Candidate source→target pairs ranked by descriptor overlap. Advisory only;
/// `bind` requires explicit specs.
inline std::vector<BindingSuggestion> suggest_bindings(const SourceSchema& source, const TargetSchema& target) {
  std::vector<BindingSuggestion> out;
  for (const auto& s : source.metrics) {
    for (const auto& t : target.metrics) {
      const double score = std::round(jaccard(s.descriptors, t.descriptors) * 1e4) / 1e4;
      if (score > 0.0) out.push_back({s.name, t.name, score});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.source != b.source) return a.source < b.source;
    return a.target < b.target;
  });
  return out;
}

/// Validated, total mapping from source vectors to target vectors.
class TransformBinding {
 public:
  const SourceSchema& source() const { return source_; }
  const TargetSchema& target() const { return target_; }
  /// Specs in target-schema order.
  const std::vector<TransformSpec>& specs() const { return specs_; }

  std::size_t source_dim() const { return source_.metrics.size(); }
  std::size_t target_dim() const { return target_.metrics.size(); }

  std::optional<std::size_t> source_index(std::string_view name) const {
    for (std::size_t i = 0; i < source_.metrics.size(); ++i)
      if (source_.metrics[i].name == name) return i;
    return std::nullopt;
  }

  bool operator==(const TransformBinding& other) const {
    return source_ == other.source_ && target_ == other.target_ && specs_ == other.specs_;
  }

 private:
  friend TransformBinding bind(SourceSchema, TargetSchema, std::vector<TransformSpec>);
  friend std::vector<double> apply(const TransformBinding&, std::span<const double>);

  SourceSchema source_;
  TargetSchema target_;
  std::vector<TransformSpec> specs_;
  std::vector<std::vector<std::size_t>> input_index_;
};

namespace detail {

inline void check_descriptor(const MetricDescriptor& m, std::string_view role) {
  if (m.name.empty()) throw Error(ErrorCode::BadParameter, std::string(role) + " metric with empty name");
  if (m.descriptors.empty()) throw Error(ErrorCode::BadParameter, "metric " + m.name + " has no descriptors");
  for (const auto& d : m.descriptors) {
    if (d.empty() || std::any_of(d.begin(), d.end(), [](unsigned char c) { return std::isupper(c); }))
      throw Error(ErrorCode::BadParameter, "metric " + m.name + " descriptor '" + d + "' must be lowercase");
  }
  if (m.range && !(m.range->lo < m.range->hi))
    throw Error(ErrorCode::BadParameter, "metric " + m.name + " range requires lo < hi");
}

inline void check_unique_names(const std::vector<MetricDescriptor>& metrics) {
  std::set<std::string> names;
  for (const auto& m : metrics)
    if (!names.insert(m.name).second) throw Error(ErrorCode::DuplicateId, "metric " + m.name);
}

}  // namespace detail

inline TransformBinding bind(SourceSchema source, TargetSchema target, std::vector<TransformSpec> specs) {
  for (const auto& m : source.metrics) detail::check_descriptor(m, "source");
  for (const auto& m : target.metrics) {
    detail::check_descriptor(m, "target");
    if (!m.range || m.range->lo < 0.0 || m.range->hi > 1.0)
      throw Error(ErrorCode::BadParameter, "target metric " + m.name + " range must lie within [0, 1]");
  }
  detail::check_unique_names(source.metrics);
  detail::check_unique_names(target.metrics);

  auto find = [](const std::vector<MetricDescriptor>& ms, std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < ms.size(); ++i)
      if (ms[i].name == name) return i;
    return std::nullopt;
  };

  std::map<std::size_t, TransformSpec> by_target;
  for (auto& spec : specs) {
    const auto t = find(target.metrics, spec.target);
    if (!t) throw Error(ErrorCode::UnknownMetric, spec.target);
    for (const auto& in : spec.inputs)
      if (!find(source.metrics, in)) throw Error(ErrorCode::UnknownMetric, in);
    if (spec.inputs.size() != expected_arity(spec.function))
      throw Error(ErrorCode::BadParameter, spec.target + ": " + std::string(to_string(spec.function)) + " takes " +
                                               std::to_string(expected_arity(spec.function)) + " input(s)");
    const bool uses_parameter = spec.function != TransformFunction::Identity;
    if (uses_parameter) {
      if (spec.function == TransformFunction::Scale && !spec.parameter)
        throw Error(ErrorCode::BadParameter, spec.target + ": scale requires a factor");
      const double p = spec.parameter_or_default();
      if (!(p > 0.0) || !std::isfinite(p))
        throw Error(ErrorCode::BadParameter, spec.target + ": parameter must be strictly positive");
    }
    if (!by_target.emplace(*t, std::move(spec)).second)
      throw Error(ErrorCode::DuplicateId, "second spec for target " + target.metrics[*t].name);
  }
  for (std::size_t i = 0; i < target.metrics.size(); ++i)
    if (!by_target.contains(i)) throw Error(ErrorCode::UncoveredTarget, target.metrics[i].name);

  TransformBinding b;
  for (auto& [i, spec] : by_target) {
    std::vector<std::size_t> idx;
    for (const auto& in : spec.inputs) idx.push_back(*find(source.metrics, in));
    b.input_index_.push_back(std::move(idx));
    b.specs_.push_back(std::move(spec));
  }
  b.source_ = std::move(source);
  b.target_ = std::move(target);
  return b;
}

/// Maps a source vector to the target vector; every output is clamped into
/// its declared target range.
inline std::vector<double> apply(const TransformBinding& binding, std::span<const double> y) {
  if (y.size() != binding.source_dim())
    throw Error(ErrorCode::SchemaMismatch, "expected " + std::to_string(binding.source_dim()) + " source values, got " +
                                               std::to_string(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto& m = binding.source_.metrics[i];
    const bool bad = !std::isfinite(y[i]) || (m.range && (y[i] < m.range->lo || y[i] > m.range->hi));
    if (bad) throw Error(ErrorCode::OutOfRangeInput, m.name + " = " + std::to_string(y[i]));
  }
  std::vector<double> x(binding.target_dim());
  std::vector<double> inputs;
  for (std::size_t t = 0; t < x.size(); ++t) {
    inputs.clear();
    for (auto i : binding.input_index_[t]) inputs.push_back(y[i]);
    double v = evaluate_raw(binding.specs_[t], inputs);
    const auto& range = *binding.target_.metrics[t].range;
    if (!std::isfinite(v)) v = v > 0 ? range.hi : range.lo;
    x[t] = std::clamp(v, range.lo, range.hi);
  }
  return x;
}

/// The worked telemetry layout: y1 quiz fraction, y2 total seconds, y3 engaged
/// seconds, y4 interaction count, y5 emotion code in {0, 1, 2}.
inline SourceSchema standard_source_schema() {
  return {{
      {"y1", {"quiz", "score", "accuracy", "competency"}, MetricRange{0.0, 1.0}, "fraction"},
      {"y2", {"time", "total", "section"}, std::nullopt, "seconds"},
      {"y3", {"time", "engagement", "content"}, std::nullopt, "seconds"},
      {"y4", {"interaction", "count", "engagement"}, std::nullopt, "count"},
      {"y5", {"emotion", "webcam", "affect"}, MetricRange{0.0, 2.0}, "code"},
  }};
}

inline TransformBinding standard_binding(double interaction_max = kDefaultInteractionMax,
                                         double average_time = kDefaultAverageTime) {
  return bind(standard_source_schema(), TargetSchema::standard(),
              {
                  {"x1", {"y1"}, TransformFunction::Identity, std::nullopt},
                  {"x2", {"y4", "y3", "y2"}, TransformFunction::RatioMean, interaction_max},
                  {"x3", {"y5", "y2"}, TransformFunction::PiecewiseOvertime, average_time},
              });
}

// ---------------------------------------------------------------------------
// Document form

namespace detail {

inline json metric_to_json(const MetricDescriptor& m) {
  json j{{"name", m.name}, {"descriptors", m.descriptors}, {"unit", m.unit}};
  if (m.range) j["range"] = {m.range->lo, m.range->hi};
  else j["range"] = "unbounded";
  return j;
}

inline MetricDescriptor metric_from_json(const json& j) {
  require_object(j, "metric");
  reject_unknown_keys(j, {"name", "descriptors", "range", "unit"}, "metric");
  MetricDescriptor m;
  m.name = get_as<std::string>(require(j, "name", "metric"), "metric.name");
  const auto descriptors = get_as<std::vector<std::string>>(require(j, "descriptors", "metric"), "metric.descriptors");
  m.descriptors = {descriptors.begin(), descriptors.end()};
  if (auto it = j.find("range"); it != j.end()) {
    if (it->is_string() && *it == "unbounded") {
      m.range = std::nullopt;
    } else {
      const auto r = get_as<std::vector<double>>(*it, "metric.range");
      if (r.size() != 2) schema_fail("metric.range: expected [lo, hi] or \"unbounded\"");
      m.range = MetricRange{r[0], r[1]};
    }
  }
  m.unit = j.contains("unit") ? get_as<std::string>(j["unit"], "metric.unit") : "";
  return m;
}

inline std::vector<MetricDescriptor> schema_from_json(const json& j, std::string_view where) {
  require_object(j, where);
  reject_unknown_keys(j, {"metrics"}, where);
  const auto& ms = require(j, "metrics", where);
  require_array(ms, std::string(where) + ".metrics");
  std::vector<MetricDescriptor> out;
  for (const auto& m : ms) out.push_back(metric_from_json(m));
  return out;
}

inline const char* parameter_key(TransformFunction f) {
  switch (f) {
    case TransformFunction::Scale: return "k";
    case TransformFunction::RatioMean: return "y4_max";
    case TransformFunction::PiecewiseOvertime: return "y2_avg";
    default: return nullptr;
  }
}

}  // namespace detail

inline std::string save_binding(const TransformBinding& b) {
  using detail::json;
  json src = json::array(), tgt = json::array(), specs = json::array();
  for (const auto& m : b.source().metrics) src.push_back(detail::metric_to_json(m));
  for (const auto& m : b.target().metrics) tgt.push_back(detail::metric_to_json(m));
  for (const auto& s : b.specs()) {
    json js{{"target", s.target}, {"inputs", s.inputs}, {"function", to_string(s.function)}};
    if (const char* key = detail::parameter_key(s.function); key && s.parameter)
      js["params"] = {{key, *s.parameter}};
    specs.push_back(js);
  }
  return json{{"source", {{"metrics", src}}}, {"target", {{"metrics", tgt}}}, {"specs", specs}}.dump(2) + "\n";
}

/// Parses a binding document and runs `bind` on it.
inline TransformBinding load_binding(std::string_view text) {
  using namespace detail;
  const json doc = parse_json(text);
  require_object(doc, "binding");
  reject_unknown_keys(doc, {"source", "target", "specs"}, "binding");
  SourceSchema source{schema_from_json(require(doc, "source", "binding"), "source")};
  TargetSchema target{schema_from_json(require(doc, "target", "binding"), "target")};
  std::vector<TransformSpec> specs;
  const auto& js = require(doc, "specs", "binding");
  require_array(js, "specs");
  for (const auto& j : js) {
    require_object(j, "spec");
    reject_unknown_keys(j, {"target", "inputs", "function", "params"}, "spec");
    TransformSpec s;
    s.target = get_as<std::string>(require(j, "target", "spec"), "spec.target");
    s.inputs = get_as<std::vector<std::string>>(require(j, "inputs", "spec"), "spec.inputs");
    const auto fname = get_as<std::string>(require(j, "function", "spec"), "spec.function");
    const auto f = parse_transform_function(fname);
    if (!f) schema_fail("spec.function: unknown function '" + fname + "'");
    s.function = *f;
    if (auto p = j.find("params"); p != j.end()) {
      require_object(*p, "spec.params");
      const char* key = parameter_key(s.function);
      for (auto it = p->begin(); it != p->end(); ++it) {
        if (!key || it.key() != key)
          schema_fail("spec.params: unknown key '" + it.key() + "' for " + fname);
        s.parameter = get_as<double>(*it, "spec.params");
      }
    }
    specs.push_back(std::move(s));
  }
  return bind(std::move(source), std::move(target), std::move(specs));
}

inline TransformBinding load_binding_file(const std::filesystem::path& path) {
  return load_binding(detail::read_file(path));
}

}  // namespace ontotutor
