#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oorl/agent.hpp"

namespace oorl {

struct PPOOptions {
  std::vector<std::size_t> actor_hidden{64, 64};
  std::vector<std::size_t> critic_hidden{64, 64};
  Activation activation = Activation::kTanh;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  std::size_t rollout_length = 2048;
  std::size_t epochs = 10;
  std::size_t minibatches = 32;
};

// -mean(min(rho * A, clip(rho, 1 - eps, 1 + eps) * A)), rho = exp(new - old).
// old_log_prob and advantages are constants.
Tensor ppo_policy_loss(const Tensor& new_log_prob, const Tensor& old_log_prob,
                       const Tensor& advantages, double clip_ratio);

// (x - mean) / (std + 1e-8) with the population std.
std::vector<double> normalize_advantages(std::span<const double> advantages);

// Categorical policy over discrete actions, or a tanh-squashed Gaussian with
// a state-independent log_std for box actions.
class PPOActor : public Actor {
 public:
  PPOActor(const Space& obs, const Space& act, const PPOOptions& options, Rng& rng);

  // Keys: action, log_prob.
  ActorOutput act(const Tensor& states, ActMode mode, Rng& rng) const override;
  Tensor log_prob(const Tensor& states, const Tensor& actions) const;
  Tensor entropy(const Tensor& states) const;
  std::vector<Tensor> parameters() const override;

  // One clipped-surrogate step on a minibatch; returns {policy loss, entropy}.
  std::pair<double, double> update(const Tensor& states, const Tensor& actions,
                                    const Tensor& old_log_prob, const Tensor& advantages);

  void save(StateDict& out) const override;
  void load(const StateDict& in) override;

 private:
  bool discrete_;
  PPOOptions options_;
  Tensor log_std_;
};

// State-value network V(s).
class ValueFunction {
 public:
  ValueFunction(const MLPSpec& spec, AdamOptions adam, double max_grad_norm, Rng& rng);

  Tensor value(const Tensor& states) const { return net_.forward(states); }
  // One step on mean (V(s) - returns)^2; returns the loss.
  double update(const Tensor& states, const Tensor& returns);

  Mlp& net() { return net_; }
  void save(StateDict& out) const;
  void load(const StateDict& in);

 private:
  Mlp net_;
  Adam optim_;
  double max_grad_norm_;
};

class PPO : public Agent {
 public:
  PPO(const Space& obs, const Space& act, const PPOOptions& options, std::uint64_t seed);

  // Ready once the rollout holds rollout_length transitions.
  bool ready() const override;
  // Finalizes the rollout and runs the epochs of minibatch updates.
  LossReport update(RolloutBuffer& rollout);

  PPOActor& actor() { return actor_; }
  ValueFunction& value_function() { return value_; }
  const RolloutBuffer& rollout() const { return rollout_; }

 protected:
  Action do_act(const Observation& state, ActMode mode) override;
  void do_store(const Transition& t) override { rollout_.push(t); }
  LossReport do_learn() override;
  void collect_state(StateDict& out) const override;
  void restore_state(const StateDict& in) override;

 private:
  PPOOptions options_;
  AgentStreams streams_;
  PPOActor actor_;
  ValueFunction value_;
  RolloutBuffer rollout_;
};

}  // namespace oorl
