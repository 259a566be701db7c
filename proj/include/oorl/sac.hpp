#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "oorl/agent.hpp"

namespace oorl {

struct SACOptions {
  ActorCriticOptions ac{};
  std::vector<std::size_t> actor_hidden{256, 256};
  std::vector<std::size_t> critic_hidden{256, 256};
  Activation activation = Activation::kRelu;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  double lr_alpha = 3e-4;
  double gamma = 0.99;
  std::size_t ensemble_size = 2;
  EnsembleReduce reduce = EnsembleReduce::kMin;
  double initial_alpha = 1.0;
  // Defaults to -dim(A).
  std::optional<double> target_entropy;
};

// Tanh-squashed Gaussian policy with a learned temperature alpha = exp(log_alpha).
class SACActor : public QActor {
 public:
  SACActor(Mlp net, AdamOptions adam, AdamOptions alpha_adam, double initial_alpha,
           double target_entropy);

  // Keys: action, log_prob, mean_action.
  ActorOutput act(const Tensor& states, ActMode mode, Rng& rng) const override;
  // mean(alpha * log_prob - min Q(s, a~)) with alpha held constant.
  ActorLoss loss(const Tensor& states, const Critic& critic, Rng& rng) const override;
  // Keys: next_action, next_log_prob, alpha.
  BellmanContext bootstrap_context(const Tensor& next_states, Rng& rng) const override;
  // Actor step followed by a temperature step; reports loss_actor,
  // loss_alpha and the alpha used during this update.
  LossReport update(const Tensor& states, const Critic& critic, Rng& rng) override;

  // -log_alpha * mean(log_prob + target_entropy) for detached log_prob.
  Tensor temperature_loss(const Tensor& log_prob) const;

  double alpha() const;
  double target_entropy() const { return target_entropy_; }
  Tensor& log_alpha() { return log_alpha_; }

  void save(StateDict& out) const override;
  void load(const StateDict& in) override;

 private:
  Tensor log_alpha_;
  Adam alpha_optim_;
  double target_entropy_;
};

// Soft backup: r + gamma * (1 - terminated) * (target_reduced - alpha * log_prob).
class SACCritic : public Critic {
 public:
  using Critic::Critic;
  Tensor get_bellman_target(const Batch& batch, const BellmanContext& context) const override;
};

class SAC : public ActorCritic {
 public:
  SAC(const Space& obs, const Space& act, const SACOptions& options, std::uint64_t seed);

  SACActor& sac_actor() { return static_cast<SACActor&>(actor()); }

 protected:
  // Leaves the components unset for subclasses that substitute their own.
  SAC(std::string algo_id, const Space& obs, const Space& act, const SACOptions& options,
      std::uint64_t seed);
  Mlp make_policy_net();
  CriticOptions critic_options() const;
  AdamOptions actor_adam() const { return {.lr = options_.lr_actor}; }
  AdamOptions alpha_adam() const { return {.lr = options_.lr_alpha}; }
  double target_entropy() const;

  SACOptions options_;
};

}  // namespace oorl
