#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ontotutor/assist_gen.hpp"
#include "ontotutor/coordinator.hpp"
#include "ontotutor/error.hpp"
#include "ontotutor/json_util.hpp"
#include "ontotutor/metric_transform.hpp"
#include "ontotutor/ontology.hpp"
#include "ontotutor/rl_engine.hpp"
#include "ontotutor/student_sim.hpp"

namespace ontotutor {

namespace fs = std::filesystem;

struct JumpstartConfig {
  std::string late_agent;  // concept id whose agent attaches after donor training
  std::size_t share_k = 256;
  std::size_t donor_episodes = 100;
  std::size_t max_episodes = 200;
  std::size_t seeds = 10;
  std::optional<double> threshold;  // absolute greedy reward on the late concept
  double threshold_fraction = 0.8;  // used when threshold is absent
};

struct ExperimentConfig {
  fs::path ontology_path;
  std::optional<fs::path> binding_path;    // standard binding when absent
  std::optional<fs::path> templates_path;  // standard templates when absent
  PopulationSpec population;
  AgentConfig agent;
  SimOptions simulator;
  std::size_t episodes = 1;
  std::size_t eval_episodes = 200;
  std::size_t share_k = 0;
  std::size_t share_period = 0;  // 0 = never
  std::uint64_t seed = 0;
  fs::path output_dir = "out";
  bool emit_plans = false;
  bool parallel_agents = false;
  JumpstartConfig jumpstart;
};

/// Parses a config document. Relative paths resolve against `base_dir`.
inline ExperimentConfig parse_config(std::string_view text, const fs::path& base_dir = {}) {
  using namespace detail;
  json doc;
  try {
    doc = parse_json(text);
  } catch (const ParseError& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  try {
    require_object(doc, "config");
    reject_unknown_keys(doc,
                        {"ontology", "binding", "templates", "population", "agent", "simulator", "episodes",
                         "eval_episodes", "share_k", "share_period", "seed", "output_dir", "emit_plans", "zero_noise",
                         "parallel_agents", "jumpstart"},
                        "config");
    auto resolve = [&](const std::string& p) {
      fs::path path(p);
      return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    ExperimentConfig c;
    c.ontology_path = resolve(get_as<std::string>(require(doc, "ontology", "config"), "ontology"));
    if (doc.contains("binding")) c.binding_path = resolve(get_as<std::string>(doc["binding"], "binding"));
    if (doc.contains("templates")) c.templates_path = resolve(get_as<std::string>(doc["templates"], "templates"));
    if (!doc.contains("seed")) throw Error(ErrorCode::ConfigError, "config: seed is required");
    c.seed = get_as<std::uint64_t>(doc["seed"], "seed");
    c.population.seed = derive_seed(c.seed, 0x5EED);
    if (doc.contains("population")) c.population = population_from_json(doc["population"], c.population);
    if (doc.contains("agent")) c.agent = agent_config_from_json(doc["agent"], c.agent);
    if (doc.contains("simulator")) {
      const auto& s = doc["simulator"];
      require_object(s, "simulator");
      reject_unknown_keys(s, {"interaction_max"}, "simulator");
      if (s.contains("interaction_max")) c.simulator.interaction_max = get_as<double>(s["interaction_max"], "simulator");
    }
    if (doc.contains("episodes")) c.episodes = get_as<std::size_t>(doc["episodes"], "episodes");
    if (doc.contains("eval_episodes")) c.eval_episodes = get_as<std::size_t>(doc["eval_episodes"], "eval_episodes");
    if (doc.contains("share_k")) c.share_k = get_as<std::size_t>(doc["share_k"], "share_k");
    if (doc.contains("share_period")) {
      const auto& sp = doc["share_period"];
      c.share_period = sp.is_string() && sp == "never" ? 0 : get_as<std::size_t>(sp, "share_period");
    }
    if (doc.contains("output_dir")) c.output_dir = resolve(get_as<std::string>(doc["output_dir"], "output_dir"));
    if (doc.contains("emit_plans")) c.emit_plans = get_as<bool>(doc["emit_plans"], "emit_plans");
    if (doc.contains("zero_noise")) c.simulator.zero_noise = get_as<bool>(doc["zero_noise"], "zero_noise");
    if (doc.contains("parallel_agents")) c.parallel_agents = get_as<bool>(doc["parallel_agents"], "parallel_agents");
    if (doc.contains("jumpstart")) {
      const auto& j = doc["jumpstart"];
      require_object(j, "jumpstart");
      reject_unknown_keys(j, {"late_agent", "share_k", "donor_episodes", "max_episodes", "seeds", "threshold",
                              "threshold_fraction"},
                          "jumpstart");
      auto& js = c.jumpstart;
      js.share_k = c.share_k > 0 ? c.share_k : js.share_k;
      if (j.contains("late_agent")) js.late_agent = get_as<std::string>(j["late_agent"], "jumpstart.late_agent");
      if (j.contains("share_k")) js.share_k = get_as<std::size_t>(j["share_k"], "jumpstart.share_k");
      if (j.contains("donor_episodes")) js.donor_episodes = get_as<std::size_t>(j["donor_episodes"], "jumpstart");
      if (j.contains("max_episodes")) js.max_episodes = get_as<std::size_t>(j["max_episodes"], "jumpstart");
      if (j.contains("seeds")) js.seeds = get_as<std::size_t>(j["seeds"], "jumpstart.seeds");
      if (j.contains("threshold")) js.threshold = get_as<double>(j["threshold"], "jumpstart.threshold");
      if (j.contains("threshold_fraction"))
        js.threshold_fraction = get_as<double>(j["threshold_fraction"], "jumpstart.threshold_fraction");
    }
    if (c.episodes < 1) throw Error(ErrorCode::ConfigError, "config: episodes must be at least 1");
    return c;
  } catch (const ParseError& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

inline ExperimentConfig load_config_file(const fs::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const Error&) {
    throw Error(ErrorCode::ConfigError, "cannot read config " + path.string());
  }
  return parse_config(text, path.parent_path());
}

/// Everything a run needs besides the agents: loaded documents and the cohort.
struct Environment {
  OntologyGraph graph;
  TransformBinding binding;
  DialogueTemplates templates;
  std::vector<std::string> order;
  std::vector<StudentProfile> cohort;
  std::vector<std::size_t> source_to_raw;  // binding source index -> RawMetrics component
};

inline Environment build_environment(const ExperimentConfig& config) {
  auto require_file = [](const fs::path& p, const char* what) {
    if (!fs::is_regular_file(p)) throw Error(ErrorCode::ConfigError, std::string(what) + " file not found: " + p.string());
  };
  require_file(config.ontology_path, "ontology");
  if (config.binding_path) require_file(*config.binding_path, "binding");
  if (config.templates_path) require_file(*config.templates_path, "templates");

  auto as_validation = [](const char* what, auto&& fn) {
    try {
      return fn();
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::IoError) throw;
      throw ValidationError({{e.code(), std::string(what) + ": " + e.what()}});
    }
  };

  Environment env;
  env.graph = as_validation("ontology", [&] { return load_ontology_file(config.ontology_path); });
  env.binding = as_validation("binding", [&] {
    return config.binding_path ? load_binding_file(*config.binding_path) : standard_binding(config.simulator.interaction_max);
  });
  env.templates = as_validation("templates", [&] {
    return config.templates_path ? load_templates_file(*config.templates_path) : DialogueTemplates::standard();
  });
  if (!env.templates.complete()) throw ValidationError({{ErrorCode::MissingTemplate, "templates: incomplete band set"}});

  for (const auto& m : env.binding.source().metrics) {
    if (!is_raw_metric_name(m.name))
      throw Error(ErrorCode::ConfigError, "binding source metric " + m.name + " is not emitted by the simulator (y1..y5)");
    env.source_to_raw.push_back(static_cast<std::size_t>(m.name[1] - '1'));
  }
  if (env.binding.target_dim() != config.agent.state_dim)
    throw Error(ErrorCode::ConfigError, "binding target has " + std::to_string(env.binding.target_dim()) +
                                            " metrics but agent state_dim is " + std::to_string(config.agent.state_dim));
  try {
    config.agent.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  if (config.population.preference_mean.size() != config.agent.action_dim)
    throw Error(ErrorCode::ConfigError, "population preference length must equal agent action_dim");

  env.order = lesson_order(env.graph);
  PopulationSpec spec = config.population;
  spec.concepts = env.order;
  try {
    env.cohort = spawn_population(spec);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return env;
}

struct StepRecord {
  std::size_t episode = 0;
  std::size_t student = 0;
  std::string concept_id;
  std::string agent_id;
  double reward = 0.0;
  double gap = 0.0;
  std::vector<double> x_before;
  std::vector<double> x_after;
  std::uint64_t step = 0;
};

enum class PolicyKind { Learned, UniformRandom };

inline std::uint64_t hash_id(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t agent_seed(std::uint64_t seed, std::string_view agent_id) {
  return derive_seed(seed, hash_id(agent_id));
}

/// Shortest representation that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Training and evaluation loop over one cohort and one set of agents.
///
/// Each episode resets the cohort to its initial profiles and walks every
/// student through the lesson order; each agent-assigned concept is one step.
class Session {
 public:
  Session(const ExperimentConfig& config, Environment env, const std::set<std::string>& detached = {})
      : config_(config), env_(std::move(env)), coordinator_(env_.graph) {
    for (std::size_t i = 0; i < env_.cohort.size(); ++i)
      student_rngs_.emplace_back(derive_seed(config_.seed, 0x57D0000ULL + i));
    for (const auto& concept_id : env_.order) {
      if (!env_.graph.agent_for(concept_id) || detached.contains(concept_id)) continue;
      attach_agent(concept_id, 0);
    }
  }

  /// Creates the fresh agent for `concept_id` and jump-starts it with up to
  /// `share_k` transitions from each adjacent agent.
  ShareResult attach_agent(const std::string& concept_id, std::size_t share_k) {
    const auto id = env_.graph.agent_for(concept_id);
    if (!id) throw Error(ErrorCode::NotAssigned, concept_id);
    coordinator_.attach(make_agent(*id, concept_id, config_.agent, agent_seed(config_.seed, *id)));
    return coordinator_.share_experience(*id, share_k);
  }

  /// Replaces an attached agent with a loaded one.
  void install_agent(Agent agent) { coordinator_.attach(std::move(agent)); }

  const Environment& environment() const { return env_; }
  Coordinator& coordinator() { return coordinator_; }
  const Coordinator& coordinator() const { return coordinator_; }
  std::size_t episodes_run() const { return episodes_run_; }
  std::uint64_t steps_run() const { return step_; }

  using StepSink = std::function<void(const StepRecord&, const AssistancePlan*)>;

  /// One training episode with exploration, recording and updates.
  void train_episode(const StepSink& sink = {}, bool want_plans = false) {
    std::map<std::string, std::size_t> pending;
    const std::size_t episode = episodes_run_;
    for (std::size_t s = 0; s < env_.cohort.size(); ++s) {
      traverse(episode, s, student_rngs_[s], PolicyKind::Learned, true, nullptr, [&](Agent& agent, Transition t) {
        record(agent, std::move(t));
        if (config_.parallel_agents) ++pending[agent.id];
        else if (agent.buffer.size() >= agent.config.batch_size) train_step(agent);
      }, sink, want_plans);
    }
    if (config_.parallel_agents) flush_parallel(pending);
    ++episodes_run_;
    if (config_.share_period > 0 && episodes_run_ % config_.share_period == 0 && config_.share_k > 0)
      coordinator_.share_all(config_.share_k);
  }

  struct EvalResult {
    std::size_t steps = 0;
    double mean_reward = 0.0;
    double mean_gap = 0.0;
    std::map<std::string, std::pair<double, std::size_t>> reward_by_concept;  // sum, count
  };

  /// Evaluation without exploration or updates. Student and policy noise come
  /// from streams derived from `eval_seed`, so repeated calls agree.
  EvalResult evaluate(std::size_t episodes, PolicyKind policy, std::uint64_t eval_seed,
                      std::optional<std::string> only_concept = std::nullopt) {
    EvalResult r;
    Rng policy_rng(derive_seed(eval_seed, 0xA11CEULL));
    for (std::size_t e = 0; e < episodes; ++e) {
      for (std::size_t s = 0; s < env_.cohort.size(); ++s) {
        Rng rng(derive_seed(eval_seed, e * 1000003ULL + s));
        traverse(e, s, rng, policy, false, &policy_rng, {}, [&](const StepRecord& rec, const AssistancePlan*) {
          if (only_concept && rec.concept_id != *only_concept) return;
          ++r.steps;
          r.mean_reward += rec.reward;
          r.mean_gap += rec.gap;
          auto& [sum, count] = r.reward_by_concept[rec.concept_id];
          sum += rec.reward;
          ++count;
        }, false, /*count_steps=*/false);
      }
    }
    if (r.steps > 0) {
      r.mean_reward /= static_cast<double>(r.steps);
      r.mean_gap /= static_cast<double>(r.steps);
    }
    return r;
  }

 private:
  using Recorder = std::function<void(Agent&, Transition)>;

  std::vector<double> source_vector(const RawMetrics& y) const {
    const auto raw = y.as_vector();
    std::vector<double> v;
    v.reserve(env_.source_to_raw.size());
    for (auto i : env_.source_to_raw) v.push_back(raw[i]);
    return v;
  }

  void traverse(std::size_t episode, std::size_t student, Rng& rng, PolicyKind policy, bool explore, Rng* policy_rng,
                const Recorder& recorder, const StepSink& sink, bool want_plans, bool count_steps = true) {
    StudentProfile profile = env_.cohort[student];
    for (const auto& concept_id : env_.order) {
      Agent* agent = coordinator_.agent_on(concept_id);
      if (!agent) continue;
      const RawMetrics y_before = observe(profile, concept_id, rng, config_.simulator);
      const StateVec x_before{ontotutor::apply(env_.binding, source_vector(y_before))};
      ActionVec a;
      if (policy == PolicyKind::UniformRandom) {
        a.values.resize(agent->config.action_dim);
        for (auto& v : a.values) v = policy_rng->uniform();
      } else {
        a = explore ? act(*agent, x_before, true) : act(static_cast<const Agent&>(*agent), x_before);
      }
      std::optional<AssistancePlan> plan;
      if (want_plans) plan = generate_plan(env_.graph, concept_id, a, env_.templates);
      const double gap = 1.0 - match_score(profile, a);
      auto outcome = run_section(profile, concept_id, a, rng, config_.simulator);
      profile = std::move(outcome.profile);
      const StateVec x_after{ontotutor::apply(env_.binding, source_vector(outcome.metrics))};
      const double r = reward(x_before, x_after, agent->config.reward_weights);

      StepRecord rec{episode, student, concept_id, agent->id, r, gap, x_before.values, x_after.values,
                     count_steps ? step_ : 0};
      if (count_steps) ++step_;
      if (recorder) recorder(*agent, Transition{x_before, a, r, x_after, agent->id, true});
      if (sink) sink(rec, plan ? &*plan : nullptr);
    }
  }

  void flush_parallel(const std::map<std::string, std::size_t>& pending) {
    std::vector<std::thread> workers;
    for (const auto& [id, n] : pending) {
      Agent* agent = &coordinator_.agent(id);
      workers.emplace_back([agent, n] {
        for (std::size_t i = 0; i < n; ++i)
          if (agent->buffer.size() >= agent->config.batch_size) train_step(*agent);
      });
    }
    for (auto& w : workers) w.join();
  }

  ExperimentConfig config_;
  Environment env_;
  Coordinator coordinator_;
  std::vector<Rng> student_rngs_;
  std::size_t episodes_run_ = 0;
  std::uint64_t step_ = 0;
};

// ---------------------------------------------------------------------------
// Metrics files

inline std::string metrics_header(const TargetSchema& target) {
  std::string h = "episode,student,concept,agent,reward,gap";
  for (const auto& m : target.metrics) h += ",x_before_" + m.name;
  for (const auto& m : target.metrics) h += ",x_after_" + m.name;
  h += ",step\n";
  return h;
}

inline std::string metrics_row(const StepRecord& r) {
  std::string line = std::to_string(r.episode) + "," + std::to_string(r.student) + "," + r.concept_id + "," +
                     r.agent_id + "," + format_double(r.reward) + "," + format_double(r.gap);
  for (double v : r.x_before) line += "," + format_double(v);
  for (double v : r.x_after) line += "," + format_double(v);
  line += "," + std::to_string(r.step) + "\n";
  return line;
}

inline std::string checkpoint_filename(std::string_view agent_id) { return std::string(agent_id) + ".ckpt.json"; }

struct AgentSummary {
  std::string id;
  std::string concept_id;
  std::uint64_t train_steps = 0;
  std::size_t buffer_size = 0;
};

struct RunSummary {
  std::size_t episodes = 0;
  std::size_t rows = 0;
  double mean_reward = 0.0;
  double final_episode_mean_reward = 0.0;
  double final_episode_mean_gap = 0.0;
  std::vector<AgentSummary> agents;
  fs::path metrics_path;
  fs::path checkpoint_dir;
};

inline detail::json summary_to_json(const RunSummary& s) {
  detail::json agents = detail::json::array();
  for (const auto& a : s.agents)
    agents.push_back({{"id", a.id}, {"concept", a.concept_id}, {"train_steps", a.train_steps}, {"buffer_size", a.buffer_size}});
  return {{"episodes", s.episodes},
          {"rows", s.rows},
          {"mean_reward", s.mean_reward},
          {"final_episode_mean_reward", s.final_episode_mean_reward},
          {"final_episode_mean_gap", s.final_episode_mean_gap},
          {"agents", agents}};
}

/// Trains every assigned agent for `config.episodes` episodes and writes
/// metrics.csv, summary.json, optional plans.ndjson and one checkpoint per
/// agent under `config.output_dir`.
inline RunSummary run_experiment(const ExperimentConfig& config) {
  Session session(config, build_environment(config));
  std::error_code ec;
  fs::create_directories(config.output_dir / "checkpoints", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + config.output_dir.string() + ": " + ec.message());

  RunSummary summary;
  summary.episodes = config.episodes;
  summary.metrics_path = config.output_dir / "metrics.csv";
  summary.checkpoint_dir = config.output_dir / "checkpoints";
  std::string csv = metrics_header(session.environment().binding.target());
  std::string plans;
  double reward_sum = 0.0, last_reward = 0.0, last_gap = 0.0;
  std::size_t last_count = 0;

  for (std::size_t e = 0; e < config.episodes; ++e) {
    const bool last = e + 1 == config.episodes;
    session.train_episode(
        [&](const StepRecord& r, const AssistancePlan* plan) {
          csv += metrics_row(r);
          ++summary.rows;
          reward_sum += r.reward;
          if (last) {
            last_reward += r.reward;
            last_gap += r.gap;
            ++last_count;
          }
          if (plan) {
            auto j = plan_to_json(*plan);
            j["episode"] = r.episode;
            j["student"] = r.student;
            j["step"] = r.step;
            plans += j.dump() + "\n";
          }
        },
        config.emit_plans);
  }
  if (summary.rows) summary.mean_reward = reward_sum / static_cast<double>(summary.rows);
  if (last_count) {
    summary.final_episode_mean_reward = last_reward / static_cast<double>(last_count);
    summary.final_episode_mean_gap = last_gap / static_cast<double>(last_count);
  }
  for (const auto& [concept_id, agent] : session.coordinator().agents()) {
    summary.agents.push_back({agent.id, agent.concept_id, agent.train_steps, agent.buffer.size()});
    detail::write_file(summary.checkpoint_dir / checkpoint_filename(agent.id), checkpoint_save(agent));
  }
  detail::write_file(summary.metrics_path, csv);
  detail::write_file(config.output_dir / "summary.json", summary_to_json(summary).dump(2) + "\n");
  if (config.emit_plans) detail::write_file(config.output_dir / "plans.ndjson", plans);
  return summary;
}

struct EvalSummary {
  std::size_t episodes = 0;
  std::size_t steps = 0;
  double mean_reward = 0.0;
  double mean_gap = 0.0;
  std::map<std::string, double> mean_reward_by_concept;
};

inline detail::json eval_to_json(const EvalSummary& s) {
  return {{"episodes", s.episodes},
          {"steps", s.steps},
          {"mean_reward", s.mean_reward},
          {"mean_gap", s.mean_gap},
          {"mean_reward_by_concept", s.mean_reward_by_concept}};
}

inline EvalSummary to_eval_summary(const Session::EvalResult& r, std::size_t episodes) {
  EvalSummary s{episodes, r.steps, r.mean_reward, r.mean_gap, {}};
  for (const auto& [c, sc] : r.reward_by_concept) s.mean_reward_by_concept[c] = sc.first / static_cast<double>(sc.second);
  return s;
}

inline std::uint64_t eval_seed(const ExperimentConfig& config) { return derive_seed(config.seed, 0xE7A1ULL); }

/// Greedy evaluation of checkpointed agents (one `<agent id>.ckpt.json` per
/// assignment in `checkpoint_dir`). Checkpoint files are only read.
inline EvalSummary eval_policy(const fs::path& checkpoint_dir, const ExperimentConfig& config) {
  Session session(config, build_environment(config));
  for (const auto& a : session.environment().graph.assignments()) {
    const auto path = checkpoint_dir / checkpoint_filename(a.agent_id);
    if (!fs::is_regular_file(path)) throw Error(ErrorCode::ConfigError, "missing checkpoint " + path.string());
    Agent agent = checkpoint_load(detail::read_file(path), config.agent.state_dim, config.agent.action_dim);
    if (agent.id != a.agent_id || agent.concept_id != a.concept_id)
      throw Error(ErrorCode::ConfigError, "checkpoint " + path.string() + " belongs to " + agent.id + " on " +
                                              agent.concept_id);
    session.install_agent(std::move(agent));
  }
  return to_eval_summary(session.evaluate(config.eval_episodes, PolicyKind::Learned, eval_seed(config)),
                         config.eval_episodes);
}

/// Evaluation of a uniform-random action policy under the same student
/// streams eval_policy uses.
inline EvalSummary eval_random_policy(const ExperimentConfig& config) {
  Session session(config, build_environment(config));
  return to_eval_summary(session.evaluate(config.eval_episodes, PolicyKind::UniformRandom, eval_seed(config)),
                         config.eval_episodes);
}

struct JumpstartRow {
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  double threshold = 0.0;
  std::size_t shared_episodes = 0;
  bool shared_reached = false;
  std::size_t cold_episodes = 0;
  bool cold_reached = false;
  std::size_t shared_transitions = 0;
};

struct JumpstartReport {
  std::string late_agent;
  std::size_t share_k = 0;
  std::size_t max_episodes = 0;
  std::vector<JumpstartRow> rows;
  double median_shared = 0.0;
  double median_cold = 0.0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline detail::json jumpstart_to_json(const JumpstartReport& r) {
  detail::json rows = detail::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"seed_index", row.seed_index},
                    {"seed", row.seed},
                    {"threshold", row.threshold},
                    {"shared_episodes", row.shared_episodes},
                    {"shared_reached", row.shared_reached},
                    {"cold_episodes", row.cold_episodes},
                    {"cold_reached", row.cold_reached},
                    {"shared_transitions", row.shared_transitions}});
  return {{"late_agent", r.late_agent}, {"share_k", r.share_k},         {"max_episodes", r.max_episodes},
          {"rows", rows},               {"median_shared", r.median_shared}, {"median_cold", r.median_cold}};
}

inline std::string jumpstart_csv(const JumpstartReport& r) {
  std::string out = "seed_index,seed,arm,episodes_to_threshold,reached\n";
  for (const auto& row : r.rows) {
    out += std::to_string(row.seed_index) + "," + std::to_string(row.seed) + ",shared," +
           std::to_string(row.shared_episodes) + "," + (row.shared_reached ? "1" : "0") + "\n";
    out += std::to_string(row.seed_index) + "," + std::to_string(row.seed) + ",cold," +
           std::to_string(row.cold_episodes) + "," + (row.cold_reached ? "1" : "0") + "\n";
  }
  return out;
}

/// Trains donors, then attaches the late agent twice over matched seeds (once
/// jump-started with shared experience, once cold) and counts episodes until
/// its greedy reward on its own concept reaches the threshold. Episodes that
/// never reach it are reported as max_episodes + 1.
inline JumpstartReport compare_jumpstart(const ExperimentConfig& config) {
  const auto& js = config.jumpstart;
  const Environment env = build_environment(config);
  if (env.graph.assignments().size() < 2)
    throw Error(ErrorCode::ConfigError, "jump-start comparison needs at least 2 assigned concepts");
  if (js.late_agent.empty()) throw Error(ErrorCode::ConfigError, "jumpstart.late_agent is required");
  if (!env.graph.agent_for(js.late_agent))
    throw Error(ErrorCode::ConfigError, "jumpstart.late_agent " + js.late_agent + " is not an assigned concept");
  if (js.seeds < 1 || js.max_episodes < 1) throw Error(ErrorCode::ConfigError, "jumpstart seeds and max_episodes must be positive");

  JumpstartReport report;
  report.late_agent = js.late_agent;
  report.share_k = js.share_k;
  report.max_episodes = js.max_episodes;
  std::vector<double> shared, cold;

  for (std::size_t i = 0; i < js.seeds; ++i) {
    ExperimentConfig seeded = config;
    seeded.seed = derive_seed(config.seed, 0x1A7E0000ULL + i);
    Session donors(seeded, env, {js.late_agent});
    for (std::size_t e = 0; e < js.donor_episodes; ++e) donors.train_episode();

    JumpstartRow row;
    row.seed_index = i;
    row.seed = seeded.seed;
    if (js.threshold) {
      row.threshold = *js.threshold;
    } else {
      const auto r = donors.evaluate(1, PolicyKind::Learned, eval_seed(seeded));
      row.threshold = js.threshold_fraction * r.mean_reward;
    }

    auto run_arm = [&](std::size_t k, std::size_t& episodes, bool& reached, std::size_t* transferred) {
      Session arm = donors;
      const auto share = arm.attach_agent(js.late_agent, k);
      if (transferred) *transferred = share.total;
      for (std::size_t e = 1; e <= js.max_episodes; ++e) {
        arm.train_episode();
        const auto r = arm.evaluate(1, PolicyKind::Learned, eval_seed(seeded), js.late_agent);
        if (r.mean_reward >= row.threshold) {
          episodes = e;
          reached = true;
          return;
        }
      }
      episodes = js.max_episodes + 1;
      reached = false;
    };
    run_arm(js.share_k, row.shared_episodes, row.shared_reached, &row.shared_transitions);
    run_arm(0, row.cold_episodes, row.cold_reached, nullptr);
    shared.push_back(static_cast<double>(row.shared_episodes));
    cold.push_back(static_cast<double>(row.cold_episodes));
    report.rows.push_back(row);
  }
  report.median_shared = median(shared);
  report.median_cold = median(cold);
  return report;
}

// ---------------------------------------------------------------------------
// CSV tools

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) {
    auto b = cur.find_first_not_of(" \t\r");
    auto e = cur.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/// Applies `binding` to each row of a CSV with one column per source metric
/// (any order, header required). Output has one column per target metric.
inline std::string transform_csv(const TransformBinding& binding, std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError("empty CSV input", 1, 1);
  const auto header = detail::split_csv_line(line);
  if (header.size() != binding.source_dim())
    throw Error(ErrorCode::SchemaMismatch, "CSV has " + std::to_string(header.size()) + " columns, binding source has " +
                                               std::to_string(binding.source_dim()));
  std::vector<std::size_t> column_for(binding.source_dim());
  std::set<std::string> seen;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto idx = binding.source_index(header[c]);
    if (!idx || !seen.insert(header[c]).second)
      throw Error(ErrorCode::SchemaMismatch, "CSV column '" + header[c] + "' does not match the source schema");
    column_for[*idx] = c;
  }
  std::string out;
  for (std::size_t t = 0; t < binding.target_dim(); ++t)
    out += (t ? "," : "") + binding.target().metrics[t].name;
  out += "\n";
  while (next_line()) {
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields", line_no, 1);
    std::vector<double> y(binding.source_dim());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const auto& cell = cells[column_for[i]];
      char* end = nullptr;
      y[i] = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size())
        throw ParseError("non-numeric field '" + cell + "'", line_no, column_for[i] + 1);
    }
    std::vector<double> x;
    try {
      x = ontotutor::apply(binding, y);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    for (std::size_t t = 0; t < x.size(); ++t) out += (t ? "," : "") + format_double(x[t]);
    out += "\n";
  }
  return out;
}

/// Runs every student through the lesson order `sections` times with a fixed
/// action and reports telemetry and transformed state per section.
inline std::string simulate_fixed_action(const ExperimentConfig& config, const ActionVec& action, std::size_t sections = 1) {
  Environment env = build_environment(config);
  std::string out = "student,pass,concept,y1,y2,y3,y4,y5,match";
  for (const auto& m : env.binding.target().metrics) out += "," + m.name;
  out += "\n";
  for (std::size_t s = 0; s < env.cohort.size(); ++s) {
    Rng rng(derive_seed(config.seed, 0x51A0000ULL + s));
    StudentProfile profile = env.cohort[s];
    for (std::size_t pass = 0; pass < sections; ++pass) {
      for (const auto& concept_id : env.order) {
        auto outcome = run_section(profile, concept_id, action, rng, config.simulator);
        const double m = match_score(profile, action);
        profile = std::move(outcome.profile);
        const auto raw = outcome.metrics.as_vector();
        std::vector<double> y;
        for (auto i : env.source_to_raw) y.push_back(raw[i]);
        const auto x = ontotutor::apply(env.binding, y);
        out += std::to_string(s) + "," + std::to_string(pass) + "," + concept_id;
        for (double v : raw) out += "," + format_double(v);
        out += "," + format_double(m);
        for (double v : x) out += "," + format_double(v);
        out += "\n";
      }
    }
  }
  return out;
}

}  // namespace ontotutor
