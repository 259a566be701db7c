#include "oorl/ddpg.hpp"

#include <algorithm>

#include "oorl/error.hpp"

namespace oorl {

DeterministicActor::DeterministicActor(Mlp net, AdamOptions adam, double exploration_noise)
    : QActor(std::move(net), adam, true), exploration_noise_(exploration_noise) {
  if (exploration_noise_ < 0.0) throw ConfigError("exploration_noise must be >= 0");
}

ActorOutput DeterministicActor::act(const Tensor& states, ActMode mode, Rng& rng) const {
  ActorOutput out;
  const Tensor mu = net_.forward(states);
  if (mode == ActMode::kDeterministic || exploration_noise_ == 0.0) {
    out.set("action", mu);
    return out;
  }
  std::vector<double> noisy(mu.values().begin(), mu.values().end());
  for (double& v : noisy) v = std::clamp(v + exploration_noise_ * rng.normal(), -1.0, 1.0);
  out.set("action", Tensor::matrix(mu.rows(), mu.cols(), std::move(noisy)));
  return out;
}

ActorLoss DeterministicActor::loss(const Tensor& states, const Critic& critic,
                                   Rng& /*rng*/) const {
  ActorOutput out;
  const Tensor action = net_.forward(states);
  out.set("action", action);
  const Tensor q = critic.q_values(states, action).front();
  return {-mean(q), out};
}

BellmanContext DeterministicActor::bootstrap_context(const Tensor& next_states,
                                                     Rng& /*rng*/) const {
  BellmanContext ctx;
  ctx.set("next_action", target_->forward(next_states).detach());
  return ctx;
}

TD3Actor::TD3Actor(Mlp net, AdamOptions adam, double exploration_noise, double target_noise,
                   double noise_clip)
    : DeterministicActor(std::move(net), adam, exploration_noise),
      target_noise_(target_noise),
      noise_clip_(noise_clip) {
  if (target_noise_ < 0.0 || noise_clip_ < 0.0) {
    throw ConfigError("target_noise and noise_clip must be >= 0");
  }
}

BellmanContext TD3Actor::bootstrap_context(const Tensor& next_states, Rng& rng) const {
  const Tensor mu = target_->forward(next_states);
  std::vector<double> a(mu.values().begin(), mu.values().end());
  for (double& v : a) {
    const double eps = std::clamp(target_noise_ * rng.normal(), -noise_clip_, noise_clip_);
    v = std::clamp(v + eps, -1.0, 1.0);
  }
  BellmanContext ctx;
  ctx.set("next_action", Tensor::matrix(mu.rows(), mu.cols(), std::move(a)));
  return ctx;
}

DDPG::DDPG(const Space& obs, const Space& act, const DDPGOptions& options,
           std::uint64_t seed)
    : DDPG("ddpg", obs, act, options, seed) {
  Mlp net = make_actor_net();
  auto actor = std::make_unique<DeterministicActor>(
      std::move(net), AdamOptions{.lr = options_.lr_actor}, options_.exploration_noise);
  set_components(std::move(actor), make_critic());
}

DDPG::DDPG(std::string algo_id, const Space& obs, const Space& act,
           const DDPGOptions& options, std::uint64_t seed)
    : ActorCritic(std::move(algo_id), obs, act, options.ac, seed), options_(options) {}

Mlp DDPG::make_actor_net() {
  return Mlp({.input_dim = observation_space().dim(),
              .hidden = options_.actor_hidden,
              .output_dim = action_space().dim(),
              .activation = options_.activation,
              .head = Head::kDeterministicBounded},
             streams_.init);
}

std::unique_ptr<Critic> DDPG::make_critic() {
  CriticOptions c;
  c.spec = {.input_dim = observation_space().dim() + action_space().dim(),
            .hidden = options_.critic_hidden,
            .output_dim = 1,
            .activation = options_.activation,
            .head = Head::kQValue};
  c.ensemble_size = options_.ensemble_size;
  c.reduce = options_.reduce;
  c.adam.lr = options_.lr_critic;
  c.gamma = options_.gamma;
  c.tau = options_.ac.tau;
  return std::make_unique<Critic>(c, streams_.init);
}

TD3::TD3(const Space& obs, const Space& act, const TD3Options& options, std::uint64_t seed)
    : DDPG("td3", obs, act, options, seed) {
  if (options.ensemble_size < 2) throw ConfigError("td3 requires ensemble_size >= 2");
  Mlp net = make_actor_net();
  auto actor = std::make_unique<TD3Actor>(std::move(net), AdamOptions{.lr = options.lr_actor},
                                          options.exploration_noise, options.target_noise,
                                          options.noise_clip);
  set_components(std::move(actor), make_critic());
}

}  // namespace oorl
