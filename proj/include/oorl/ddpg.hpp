#pragma once

#include <cstdint>
#include <vector>

#include "oorl/agent.hpp"

namespace oorl {

struct DDPGOptions {
  ActorCriticOptions ac{};
  std::vector<std::size_t> actor_hidden{256, 256};
  std::vector<std::size_t> critic_hidden{256, 256};
  Activation activation = Activation::kRelu;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  double gamma = 0.99;
  std::size_t ensemble_size = 1;
  EnsembleReduce reduce = EnsembleReduce::kMean;
  // Std of the Gaussian noise added to actions at act time.
  double exploration_noise = 0.1;
};

struct TD3Options : DDPGOptions {
  TD3Options() {
    ac.policy_delay = 2;
    ensemble_size = 2;
    reduce = EnsembleReduce::kMin;
  }
  double target_noise = 0.2;
  double noise_clip = 0.5;
};

// mu(s) = tanh(net(s)) in [-1, 1]^d.
class DeterministicActor : public QActor {
 public:
  DeterministicActor(Mlp net, AdamOptions adam, double exploration_noise);

  ActorOutput act(const Tensor& states, ActMode mode, Rng& rng) const override;
  // -mean Q_0(s, mu(s)) using the first critic member.
  ActorLoss loss(const Tensor& states, const Critic& critic, Rng& rng) const override;
  // next_action = mu_target(s').
  BellmanContext bootstrap_context(const Tensor& next_states, Rng& rng) const override;

 private:
  double exploration_noise_;
};

// Target policy smoothing: mu_target(s') + clip(N(0, sigma), -c, c), clipped
// to the action box.
class TD3Actor : public DeterministicActor {
 public:
  TD3Actor(Mlp net, AdamOptions adam, double exploration_noise, double target_noise,
           double noise_clip);

  BellmanContext bootstrap_context(const Tensor& next_states, Rng& rng) const override;

 private:
  double target_noise_, noise_clip_;
};

class DDPG : public ActorCritic {
 public:
  DDPG(const Space& obs, const Space& act, const DDPGOptions& options, std::uint64_t seed);

 protected:
  DDPG(std::string algo_id, const Space& obs, const Space& act, const DDPGOptions& options,
       std::uint64_t seed);
  Mlp make_actor_net();
  std::unique_ptr<Critic> make_critic();

  DDPGOptions options_;
};

class TD3 : public DDPG {
 public:
  TD3(const Space& obs, const Space& act, const TD3Options& options, std::uint64_t seed);
};

}  // namespace oorl
