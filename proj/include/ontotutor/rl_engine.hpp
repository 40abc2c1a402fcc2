#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ontotutor/approximator.hpp"
#include "ontotutor/error.hpp"
#include "ontotutor/json_util.hpp"
#include "ontotutor/rng.hpp"

namespace ontotutor {

/// Observation of one student on one concept; components in [0, 1].
struct StateVec {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const StateVec&) const = default;
};

/// Assistance weights: visuals, examples, practice, guidance, encouragement.
struct ActionVec {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const ActionVec&) const = default;
};

inline constexpr std::size_t kStandardActionDim = 5;
inline constexpr std::size_t kStandardStateDim = 3;

struct Transition {
  StateVec state;
  ActionVec action;
  double reward = 0.0;
  StateVec next_state;
  std::string origin;     // id of the agent that produced the experience
  bool terminal = false;  // no bootstrapping from next_state when set

  bool operator==(const Transition&) const = default;
};

/// Bounded FIFO of transitions; the oldest entry is evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 50000) : capacity_(capacity) {
    if (capacity_ == 0) throw Error(ErrorCode::BadParameter, "replay capacity must be positive");
  }

  void push(Transition t) {
    if (entries_.size() == capacity_) entries_.pop_front();
    entries_.push_back(std::move(t));
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const Transition& operator[](std::size_t i) const { return entries_[i]; }
  const std::deque<Transition>& entries() const { return entries_; }

  /// Up to `k` most recent entries, oldest first.
  std::vector<Transition> most_recent(std::size_t k) const {
    const std::size_t n = std::min(k, entries_.size());
    return {entries_.end() - static_cast<std::ptrdiff_t>(n), entries_.end()};
  }

  bool operator==(const ReplayBuffer&) const = default;

 private:
  std::size_t capacity_;
  std::deque<Transition> entries_;
};

struct AgentConfig {
  std::size_t state_dim = kStandardStateDim;
  std::size_t action_dim = kStandardActionDim;
  std::vector<std::size_t> hidden_layers{64, 64};
  double gamma = 0.95;
  double tau = 0.005;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double noise_sigma = 0.2;
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = 50000;
  std::vector<double> reward_weights{0.6, 0.25, 0.15};

  bool operator==(const AgentConfig&) const = default;

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::BadParameter, "agent config: " + what); };
    if (state_dim == 0 || action_dim == 0) bad("dimensions must be positive");
    for (auto h : hidden_layers)
      if (h == 0) bad("hidden layer sizes must be positive");
    if (!(gamma >= 0.0 && gamma <= 1.0)) bad("gamma must lie in [0, 1]");
    if (!(tau >= 0.0 && tau <= 1.0)) bad("tau must lie in [0, 1]");
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) bad("step sizes must be positive");
    if (!(noise_sigma >= 0.0)) bad("noise sigma must be non-negative");
    if (batch_size == 0) bad("batch size must be positive");
    if (buffer_capacity == 0) bad("buffer capacity must be positive");
    if (reward_weights.size() != state_dim) bad("one reward weight per state component");
    double sum = 0.0;
    for (double w : reward_weights) {
      if (!(w >= 0.0)) bad("reward weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) bad("reward weights must sum to 1");
  }
};

struct Agent {
  std::string id;
  std::string concept_id;
  AgentConfig config;
  Approximator actor;
  Approximator critic;
  Approximator target_actor;
  Approximator target_critic;
  AdamState actor_opt;
  AdamState critic_opt;
  ReplayBuffer buffer;
  Rng rng;
  std::uint64_t train_steps = 0;

  bool operator==(const Agent&) const = default;
};

/// Fresh agent with randomly initialized live networks and identical targets.
inline Agent make_agent(std::string id, std::string concept_id, AgentConfig config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Agent a;
  a.id = std::move(id);
  a.concept_id = std::move(concept_id);
  a.config = config;
  a.actor = Approximator::actor(config.state_dim, config.action_dim, config.hidden_layers);
  a.critic = Approximator::critic(config.state_dim, config.action_dim, config.hidden_layers);
  a.buffer = ReplayBuffer(config.buffer_capacity);
  a.rng = Rng(derive_seed(seed, 1));
  a.actor.initialize(rng);
  a.critic.initialize(rng);
  a.target_actor = a.actor;
  a.target_critic = a.critic;
  a.actor_opt = AdamState(a.actor.parameter_count());
  a.critic_opt = AdamState(a.critic.parameter_count());
  return a;
}

inline void check_state(const Agent& agent, const StateVec& s, std::string_view what) {
  if (s.size() != agent.config.state_dim)
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " has " + std::to_string(s.size()) +
                                                  " components, agent expects " +
                                                  std::to_string(agent.config.state_dim));
}

inline void check_action(const Agent& agent, const ActionVec& a) {
  if (a.size() != agent.config.action_dim)
    throw Error(ErrorCode::DimensionMismatch, "action has " + std::to_string(a.size()) + " components, agent expects " +
                                                  std::to_string(agent.config.action_dim));
}

/// Greedy actor output.
inline ActionVec act(const Agent& agent, const StateVec& state) {
  check_state(agent, state, "state");
  return {agent.actor.forward(state.values)};
}

/// Actor output, optionally perturbed by clipped Gaussian exploration noise
/// drawn from the agent's own generator.
inline ActionVec act(Agent& agent, const StateVec& state, bool explore) {
  ActionVec a = act(static_cast<const Agent&>(agent), state);
  if (explore) {
    for (auto& v : a.values) v = std::clamp(v + agent.config.noise_sigma * agent.rng.gaussian(), 0.0, 1.0);
  }
  return a;
}

/// Weighted state improvement before clamping.
inline double raw_reward(const StateVec& prev, const StateVec& next, std::span<const double> weights) {
  if (prev.size() != next.size() || weights.size() != prev.size())
    throw Error(ErrorCode::DimensionMismatch, "reward operands differ in length");
  double r = 0.0;
  for (std::size_t k = 0; k < prev.size(); ++k) r += weights[k] * (next.values[k] - prev.values[k]);
  return r;
}

inline double reward(const StateVec& prev, const StateVec& next, std::span<const double> weights) {
  return std::clamp(raw_reward(prev, next, weights), -1.0, 1.0);
}

inline void record(Agent& agent, Transition t) {
  check_state(agent, t.state, "transition state");
  check_state(agent, t.next_state, "transition next_state");
  check_action(agent, t.action);
  if (!(t.reward >= -1.0 && t.reward <= 1.0))
    throw Error(ErrorCode::BadParameter, "transition reward outside [-1, 1]");
  agent.buffer.push(std::move(t));
}

/// Uniform draw, with replacement, of `config.batch_size` transitions.
inline std::vector<Transition> sample_batch(Agent& agent) {
  const std::size_t n = agent.buffer.size();
  if (n < agent.config.batch_size)
    throw Error(ErrorCode::InsufficientExperience,
                std::to_string(n) + " transitions buffered, batch needs " + std::to_string(agent.config.batch_size));
  std::vector<Transition> batch;
  batch.reserve(agent.config.batch_size);
  for (std::size_t i = 0; i < agent.config.batch_size; ++i) batch.push_back(agent.buffer[agent.rng.index(n)]);
  return batch;
}

struct TrainStats {
  double critic_loss = 0.0;
  double actor_objective = 0.0;
};

namespace detail {

inline std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace detail

/// One deterministic-policy-gradient update on `batch`.
///
/// The critic regresses onto r + gamma * Q'(s', mu'(s')) (no bootstrap for
/// terminal transitions), the actor ascends Q(s, mu(s)) under the updated
/// critic, and both target networks then move toward the live ones by tau.
inline TrainStats train_step(Agent& agent, std::span<const Transition> batch) {
  const auto& cfg = agent.config;
  if (agent.buffer.size() < cfg.batch_size)
    throw Error(ErrorCode::InsufficientExperience,
                std::to_string(agent.buffer.size()) + " transitions buffered, batch needs " +
                    std::to_string(cfg.batch_size));
  if (batch.empty()) throw Error(ErrorCode::InsufficientExperience, "empty batch");
  for (const auto& t : batch) {
    check_state(agent, t.state, "batch state");
    check_state(agent, t.next_state, "batch next_state");
    check_action(agent, t.action);
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  TrainStats stats;

  // Critic.
  std::vector<double> critic_grad(agent.critic.parameter_count(), 0.0);
  Approximator::Tape tape;
  for (const auto& t : batch) {
    double target = t.reward;
    if (!t.terminal && cfg.gamma != 0.0) {
      const auto next_action = agent.target_actor.forward(t.next_state.values);
      const auto q_next = agent.target_critic.forward(detail::concat(t.next_state.values, next_action));
      target += cfg.gamma * q_next[0];
    }
    const double q = agent.critic.forward(detail::concat(t.state.values, t.action.values), tape)[0];
    const double err = q - target;
    stats.critic_loss += err * err * inv_n;
    const double seed = 2.0 * err * inv_n;
    agent.critic.backward(tape, std::span<const double>(&seed, 1), critic_grad);
  }
  agent.critic_opt.step(agent.critic.parameters(), critic_grad, cfg.critic_lr);

  // Actor.
  std::vector<double> actor_grad(agent.actor.parameter_count(), 0.0);
  std::vector<double> scratch(agent.critic.parameter_count(), 0.0);
  Approximator::Tape actor_tape, critic_tape;
  const double one = 1.0;
  for (const auto& t : batch) {
    const auto a = agent.actor.forward(t.state.values, actor_tape);
    const double q = agent.critic.forward(detail::concat(t.state.values, a), critic_tape)[0];
    stats.actor_objective += q * inv_n;
    const auto dq_dinput = agent.critic.backward(critic_tape, std::span<const double>(&one, 1), scratch);
    // Ascent on Q is descent on -Q.
    std::vector<double> seed(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) seed[i] = -dq_dinput[cfg.state_dim + i] * inv_n;
    agent.actor.backward(actor_tape, seed, actor_grad);
  }
  agent.actor_opt.step(agent.actor.parameters(), actor_grad, cfg.actor_lr);

  agent.target_critic.soft_update_from(agent.critic, cfg.tau);
  agent.target_actor.soft_update_from(agent.actor, cfg.tau);
  ++agent.train_steps;
  return stats;
}

/// Samples a batch from the agent's buffer and trains on it.
inline TrainStats train_step(Agent& agent) {
  const auto batch = sample_batch(agent);
  return train_step(agent, batch);
}

// ---------------------------------------------------------------------------
// Configuration and checkpoint documents

namespace detail {

inline json agent_config_to_json(const AgentConfig& c) {
  return {{"state_dim", c.state_dim},       {"action_dim", c.action_dim},   {"hidden_layers", c.hidden_layers},
          {"gamma", c.gamma},               {"tau", c.tau},                 {"actor_lr", c.actor_lr},
          {"critic_lr", c.critic_lr},       {"noise_sigma", c.noise_sigma}, {"batch_size", c.batch_size},
          {"buffer_capacity", c.buffer_capacity}, {"reward_weights", c.reward_weights}};
}

/// Overlays the keys present in `j` onto `base`.
inline AgentConfig agent_config_from_json(const json& j, AgentConfig base = {}) {
  require_object(j, "agent");
  reject_unknown_keys(j,
                      {"state_dim", "action_dim", "hidden_layers", "gamma", "tau", "actor_lr", "critic_lr",
                       "noise_sigma", "batch_size", "buffer_capacity", "reward_weights"},
                      "agent");
  auto read = [&](const char* key, auto& field) {
    if (auto it = j.find(key); it != j.end())
      field = get_as<std::decay_t<decltype(field)>>(*it, std::string("agent.") + key);
  };
  read("state_dim", base.state_dim);
  read("action_dim", base.action_dim);
  read("hidden_layers", base.hidden_layers);
  read("gamma", base.gamma);
  read("tau", base.tau);
  read("actor_lr", base.actor_lr);
  read("critic_lr", base.critic_lr);
  read("noise_sigma", base.noise_sigma);
  read("batch_size", base.batch_size);
  read("buffer_capacity", base.buffer_capacity);
  read("reward_weights", base.reward_weights);
  return base;
}

inline json network_to_json(const Approximator& n) {
  return {{"layers", n.layer_sizes()},
          {"output", to_string(n.output_activation())},
          {"parameters", std::vector<double>(n.parameters().begin(), n.parameters().end())}};
}

inline Approximator network_from_json(const json& j, std::string_view where) {
  require_object(j, where);
  reject_unknown_keys(j, {"layers", "output", "parameters"}, where);
  const auto layers = get_as<std::vector<std::size_t>>(require(j, "layers", where), where);
  const auto output = get_as<std::string>(require(j, "output", where), where);
  if (output != "linear" && output != "logistic") schema_fail(std::string(where) + ": unknown output " + output);
  Approximator n;
  try {
    n = Approximator(layers, output == "linear" ? OutputActivation::Linear : OutputActivation::Logistic);
  } catch (const Error& e) {
    throw Error(ErrorCode::ShapeMismatch, std::string(where) + ": " + e.what());
  }
  const auto params = get_as<std::vector<double>>(require(j, "parameters", where), where);
  if (params.size() != n.parameter_count())
    throw Error(ErrorCode::ShapeMismatch, std::string(where) + ": " + std::to_string(params.size()) +
                                              " parameters for a network of " + std::to_string(n.parameter_count()));
  std::copy(params.begin(), params.end(), n.parameters().begin());
  return n;
}

inline json adam_to_json(const AdamState& s) { return {{"m", s.m}, {"v", s.v}, {"steps", s.steps}}; }

inline AdamState adam_from_json(const json& j, std::size_t expected, std::string_view where) {
  require_object(j, where);
  reject_unknown_keys(j, {"m", "v", "steps"}, where);
  AdamState s;
  s.m = get_as<std::vector<double>>(require(j, "m", where), where);
  s.v = get_as<std::vector<double>>(require(j, "v", where), where);
  s.steps = get_as<std::uint64_t>(require(j, "steps", where), where);
  if (s.m.size() != expected || s.v.size() != expected)
    throw Error(ErrorCode::ShapeMismatch, std::string(where) + ": optimizer moment size");
  return s;
}

}  // namespace detail

inline constexpr int kCheckpointVersion = 1;

/// JSON checkpoint with config, all four networks, optimizer moments and the
/// generator state. The replay buffer is not stored.
inline std::string checkpoint_save(const Agent& a) {
  using detail::json;
  json doc{{"format", "ontotutor-checkpoint"},
           {"version", kCheckpointVersion},
           {"id", a.id},
           {"concept", a.concept_id},
           {"config", detail::agent_config_to_json(a.config)},
           {"networks",
            {{"actor", detail::network_to_json(a.actor)},
             {"critic", detail::network_to_json(a.critic)},
             {"target_actor", detail::network_to_json(a.target_actor)},
             {"target_critic", detail::network_to_json(a.target_critic)}}},
           {"optimizers", {{"actor", detail::adam_to_json(a.actor_opt)}, {"critic", detail::adam_to_json(a.critic_opt)}}},
           {"rng", a.rng.serialize()},
           {"train_steps", a.train_steps}};
  return doc.dump() + "\n";
}

inline Agent checkpoint_load(std::string_view text) {
  using namespace detail;
  const json doc = parse_json(text);
  require_object(doc, "checkpoint");
  reject_unknown_keys(doc, {"format", "version", "id", "concept", "config", "networks", "optimizers", "rng", "train_steps"},
                      "checkpoint");
  if (get_as<std::string>(require(doc, "format", "checkpoint"), "format") != "ontotutor-checkpoint")
    schema_fail("checkpoint: not an ontotutor checkpoint");
  if (get_as<int>(require(doc, "version", "checkpoint"), "version") != kCheckpointVersion)
    schema_fail("checkpoint: unsupported version");

  Agent a;
  a.id = get_as<std::string>(require(doc, "id", "checkpoint"), "id");
  a.concept_id = get_as<std::string>(require(doc, "concept", "checkpoint"), "concept");
  a.config = agent_config_from_json(require(doc, "config", "checkpoint"));
  try {
    a.config.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ShapeMismatch, e.what());
  }
  const auto& nets = require(doc, "networks", "checkpoint");
  require_object(nets, "networks");
  reject_unknown_keys(nets, {"actor", "critic", "target_actor", "target_critic"}, "networks");
  a.actor = network_from_json(require(nets, "actor", "networks"), "actor");
  a.critic = network_from_json(require(nets, "critic", "networks"), "critic");
  a.target_actor = network_from_json(require(nets, "target_actor", "networks"), "target_actor");
  a.target_critic = network_from_json(require(nets, "target_critic", "networks"), "target_critic");

  const auto expected_actor = Approximator::actor(a.config.state_dim, a.config.action_dim, a.config.hidden_layers);
  const auto expected_critic = Approximator::critic(a.config.state_dim, a.config.action_dim, a.config.hidden_layers);
  if (!a.actor.same_shape(expected_actor) || !a.target_actor.same_shape(expected_actor))
    throw Error(ErrorCode::ShapeMismatch, "actor shape disagrees with config");
  if (!a.critic.same_shape(expected_critic) || !a.target_critic.same_shape(expected_critic))
    throw Error(ErrorCode::ShapeMismatch, "critic shape disagrees with config");

  const auto& opts = require(doc, "optimizers", "checkpoint");
  require_object(opts, "optimizers");
  reject_unknown_keys(opts, {"actor", "critic"}, "optimizers");
  a.actor_opt = adam_from_json(require(opts, "actor", "optimizers"), a.actor.parameter_count(), "optimizers.actor");
  a.critic_opt = adam_from_json(require(opts, "critic", "optimizers"), a.critic.parameter_count(), "optimizers.critic");
  try {
    a.rng = Rng::deserialize(get_as<std::string>(require(doc, "rng", "checkpoint"), "rng"));
  } catch (const std::invalid_argument&) {
    schema_fail("checkpoint: malformed rng state");
  }
  a.train_steps = get_as<std::uint64_t>(require(doc, "train_steps", "checkpoint"), "train_steps");
  a.buffer = ReplayBuffer(a.config.buffer_capacity);
  return a;
}

/// Loads and additionally requires the given state and action dimensions.
inline Agent checkpoint_load(std::string_view text, std::size_t state_dim, std::size_t action_dim) {
  Agent a = checkpoint_load(text);
  if (a.config.state_dim != state_dim || a.config.action_dim != action_dim)
    throw Error(ErrorCode::ShapeMismatch, "checkpoint " + a.id + " is " + std::to_string(a.config.state_dim) + "x" +
                                              std::to_string(a.config.action_dim) + ", expected " +
                                              std::to_string(state_dim) + "x" + std::to_string(action_dim));
  return a;
}

}  // namespace ontotutor
