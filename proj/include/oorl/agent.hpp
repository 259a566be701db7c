#pragma once

// Agent ontology: Agent -> OffPolicyAgent -> ActorCritic, composed of an
// actor, a critic holding a CriticEnsemble, and their target networks.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oorl/buffer.hpp"
#include "oorl/env.hpp"
#include "oorl/nn.hpp"
#include "oorl/optim.hpp"
#include "oorl/rng.hpp"
#include "oorl/tensor.hpp"

namespace oorl {

enum class ActMode { kStochastic, kDeterministic };

using LossReport = std::map<std::string, double>;

// Named tensors produced during action generation (the act_dict) or handed
// to a Bellman-target computation. Lookups of absent keys throw KeyError.
class KeyedTensors {
 public:
  void set(const std::string& key, Tensor value) { entries_[key] = std::move(value); }
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const Tensor& operator[](const std::string& key) const;
  std::vector<std::string> keys() const;

 private:
  std::map<std::string, Tensor> entries_;
};

using ActorOutput = KeyedTensors;
using BellmanContext = KeyedTensors;

struct NamedArray {
  std::vector<std::size_t> shape;
  std::vector<double> values;
};
using StateDict = std::map<std::string, NamedArray>;

// Helpers for writing and restoring state entries; restore functions throw
// IoError on missing names or shape mismatches.
void save_tensors(StateDict& out, const std::string& prefix,
                  const std::vector<Tensor>& params);
void load_tensors(const StateDict& in, const std::string& prefix,
                  std::vector<Tensor>& params);
void save_mlp(StateDict& out, const std::string& prefix, const Mlp& net);
void load_mlp(const StateDict& in, const std::string& prefix, Mlp& net);
void save_adam(StateDict& out, const std::string& prefix, const Adam& opt);
void load_adam(const StateDict& in, const std::string& prefix, Adam& opt);
void save_scalar(StateDict& out, const std::string& name, double value);
double load_scalar(const StateDict& in, const std::string& name);

// Independent random streams owned by an agent.
struct AgentStreams {
  Rng init;     // network initialization
  Rng sample;   // replay sampling, minibatch shuffles
  Rng act;      // exploration at act time
  Rng update;   // noise drawn inside losses and targets
  Rng bonus;    // algorithm extensions with their own state

  static AgentStreams from_root(std::uint64_t root);
};

class Agent {
 public:
  Agent(std::string algo_id, Space observation_space, Space action_space);
  virtual ~Agent() = default;
  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  const std::string& algo_id() const { return algo_id_; }
  const Space& observation_space() const { return obs_space_; }
  const Space& action_space() const { return act_space_; }

  Action act(const Observation& state, ActMode mode);
  void store(const Transition& t);
  // True when learn() would perform an update now.
  virtual bool ready() const = 0;
  // Performs one update when ready, otherwise returns nullopt.
  std::optional<LossReport> learn();

  std::int64_t global_step() const { return global_step_; }
  std::int64_t update_count() const { return update_count_; }

  StateDict state_dict() const;
  void load_state_dict(const StateDict& state);

 protected:
  virtual Action do_act(const Observation& state, ActMode mode) = 0;
  virtual void do_store(const Transition& t) = 0;
  virtual LossReport do_learn() = 0;
  virtual void collect_state(StateDict& out) const = 0;
  virtual void restore_state(const StateDict& in) = 0;

  Tensor state_row(const Observation& state) const;

 private:
  std::string algo_id_;
  Space obs_space_, act_space_;
  std::int64_t global_step_ = 0;
  std::int64_t update_count_ = 0;
};

enum class EnsembleReduce { kMin, kMean };

EnsembleReduce parse_reduce(const std::string& name);
std::string to_string(EnsembleReduce r);

// Elementwise min or mean across member outputs of equal shape.
Tensor reduce_ensemble(std::span<const Tensor> q_values, EnsembleReduce kind);

class CriticEnsemble {
 public:
  CriticEnsemble(const MLPSpec& spec, std::size_t members, EnsembleReduce reduce,
                 Rng& rng);

  std::size_t size() const { return members_.size(); }
  EnsembleReduce reduce_kind() const { return reduce_; }
  const MLPSpec& spec() const { return members_.front().spec(); }

  std::vector<Tensor> forward(const Tensor& input) const;
  std::vector<Tensor> forward_target(const Tensor& input) const;
  Tensor reduce(std::span<const Tensor> q_values) const {
    return reduce_ensemble(q_values, reduce_);
  }

  Mlp& member(std::size_t i) { return members_.at(i); }
  const Mlp& member(std::size_t i) const { return members_.at(i); }
  Mlp& target(std::size_t i) { return targets_.at(i); }
  const Mlp& target(std::size_t i) const { return targets_.at(i); }

  std::vector<Tensor> parameters() const;
  void polyak(double tau);
  void hard_update();

  void save(StateDict& out, const std::string& prefix) const;
  void load(const StateDict& in, const std::string& prefix);

 private:
  std::vector<Mlp> members_;
  std::vector<Mlp> targets_;
  EnsembleReduce reduce_;
};

struct CriticOptions {
  MLPSpec spec;
  std::size_t ensemble_size = 2;
  EnsembleReduce reduce = EnsembleReduce::kMin;
  AdamOptions adam{};
  double gamma = 0.99;
  double tau = 0.005;
};

// Q(s, a) critic over a state-action concatenation.
class Critic {
 public:
  Critic(const CriticOptions& options, Rng& rng);
  virtual ~Critic() = default;

  // One [n, out] tensor per online member.
  std::vector<Tensor> q_values(const Tensor& states, const Tensor& actions) const;
  Tensor q_reduced(const Tensor& states, const Tensor& actions) const;
  // Reduced target-network estimate; carries no gradient.
  Tensor target_reduced(const Tensor& states, const Tensor& actions) const;

  // Base backup r + gamma * (1 - terminated) * target_reduced(s', a') with
  // a' = context["next_action"].
  virtual Tensor get_bellman_target(const Batch& batch,
                                    const BellmanContext& context) const;
  // Mean over members of the squared error to target.
  virtual Tensor loss(const Batch& batch, const Tensor& target) const;
  // get_bellman_target, loss, one optimizer step. Returns the loss value.
  double update(const Batch& batch, const BellmanContext& context);

  void update_target() { ensemble_.polyak(options_.tau); }
  void hard_update_target() { ensemble_.hard_update(); }

  CriticEnsemble& ensemble() { return ensemble_; }
  const CriticEnsemble& ensemble() const { return ensemble_; }
  const CriticOptions& options() const { return options_; }
  Adam& optimizer() { return optim_; }

  void save(StateDict& out) const;
  void load(const StateDict& in);

 protected:
  // r + gamma * (1 - terminated) * next_value, detached.
  Tensor bootstrap(const Batch& batch, const Tensor& next_value) const;
  virtual Tensor input(const Tensor& states, const Tensor& actions) const;

 private:
  CriticOptions options_;
  CriticEnsemble ensemble_;
  Adam optim_;
};

class Actor {
 public:
  Actor(Mlp net, AdamOptions adam, bool with_target);
  virtual ~Actor() = default;

  // Batched action generation; the output holds at least "action".
  virtual ActorOutput act(const Tensor& states, ActMode mode, Rng& rng) const = 0;

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  const Mlp* target() const { return target_ ? &*target_ : nullptr; }
  virtual std::vector<Tensor> parameters() const { return net_.parameters(); }
  void update_target(double tau);
  Adam& optimizer() { return optim_; }

  virtual void save(StateDict& out) const;
  virtual void load(const StateDict& in);

 protected:
  // Backward pass and optimizer step over parameters().
  void apply(const Tensor& loss, std::optional<double> max_grad_norm = std::nullopt);

  Mlp net_;
  std::optional<Mlp> target_;
  Adam optim_;
};

struct ActorLoss {
  Tensor loss;
  ActorOutput output;
};

// Actor trained against a Q critic.
class QActor : public Actor {
 public:
  using Actor::Actor;

  virtual ActorLoss loss(const Tensor& states, const Critic& critic, Rng& rng) const = 0;
  // Context for the critic's Bellman target at the batch's next states.
  virtual BellmanContext bootstrap_context(const Tensor& next_states, Rng& rng) const = 0;
  // loss() and one optimizer step; reports loss_actor.
  virtual LossReport update(const Tensor& states, const Critic& critic, Rng& rng);
};

struct OffPolicyOptions {
  std::size_t buffer_capacity = 100000;
  std::size_t batch_size = 256;
  std::int64_t warmup_steps = 1000;
  std::int64_t update_every = 1;
};

// Replay-driven agent: stores transitions and learns on sampled batches.
class OffPolicyAgent : public Agent {
 public:
  OffPolicyAgent(std::string algo_id, Space obs, Space act, OffPolicyOptions options,
                 std::uint64_t seed);

  bool ready() const override;
  // One update on a caller-supplied batch.
  virtual LossReport update(const Batch& batch) = 0;

  const ReplayBuffer& buffer() const { return buffer_; }
  const OffPolicyOptions& off_policy_options() const { return options_; }
  AgentStreams& streams() { return streams_; }

 protected:
  void do_store(const Transition& t) override { buffer_.push(t); }
  LossReport do_learn() override;
  bool warming_up() const { return global_step() < options_.warmup_steps; }
  // Uniform action from the action space, drawn from the act stream.
  Action random_action();

  AgentStreams streams_;

 private:
  OffPolicyOptions options_;
  ReplayBuffer buffer_;
};

struct ActorCriticOptions {
  OffPolicyOptions off_policy{};
  std::int64_t policy_delay = 1;
  double tau = 0.005;
};

// Update skeleton shared by DDPG, TD3, SAC and their extensions: critic step
// on a context produced by the actor, delayed actor step, target updates.
class ActorCritic : public OffPolicyAgent {
 public:
  LossReport update(const Batch& batch) override;

  QActor& actor() { return *actor_; }
  const QActor& actor() const { return *actor_; }
  Critic& critic() { return *critic_; }
  const Critic& critic() const { return *critic_; }
  std::int64_t critic_updates() const { return critic_updates_; }

 protected:
  // Derived constructors build the actor and critic from streams_.init and
  // then call set_components.
  ActorCritic(std::string algo_id, Space obs, Space act, ActorCriticOptions options,
              std::uint64_t seed);
  void set_components(std::unique_ptr<QActor> actor, std::unique_ptr<Critic> critic);

  Action do_act(const Observation& state, ActMode mode) override;
  void collect_state(StateDict& out) const override;
  void restore_state(const StateDict& in) override;

 private:
  ActorCriticOptions ac_options_;
  std::unique_ptr<QActor> actor_;
  std::unique_ptr<Critic> critic_;
  std::int64_t critic_updates_ = 0;
};

}  // namespace oorl
