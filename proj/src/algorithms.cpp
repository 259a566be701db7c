#include "oorl/algorithms.hpp"

#include "oorl/error.hpp"

namespace oorl {

namespace {

std::size_t size_of(const ConfigTree& c, const std::string& key) {
  return static_cast<std::size_t>(c.get_int(key));
}

OffPolicyOptions off_policy(const ConfigTree& c) {
  return {.buffer_capacity = size_of(c, "algo.buffer_capacity"),
          .batch_size = size_of(c, "algo.batch_size"),
          .warmup_steps = c.get_int("algo.warmup_steps"),
          .update_every = c.get_int("algo.update_every")};
}

template <typename Options>
void fill_continuous(const ConfigTree& c, Options& o) {
  o.ac.off_policy = off_policy(c);
  o.ac.tau = c.get_double("algo.tau");
  o.actor_hidden = c.get_sizes("nets.actor_hidden");
  o.critic_hidden = c.get_sizes("nets.critic_hidden");
  o.activation = parse_activation(c.get_string("nets.activation"));
  o.lr_actor = c.get_double("algo.lr_actor");
  o.lr_critic = c.get_double("algo.lr_critic");
  o.gamma = c.get_double("algo.gamma");
  o.ensemble_size = size_of(c, "algo.ensemble_size");
  o.reduce = parse_reduce(c.get_string("algo.reduce"));
}

}  // namespace

DQNOptions dqn_options(const ConfigTree& c) {
  DQNOptions o;
  o.off_policy = off_policy(c);
  o.hidden = c.get_sizes("nets.critic_hidden");
  o.activation = parse_activation(c.get_string("nets.activation"));
  o.lr = c.get_double("algo.lr");
  o.gamma = c.get_double("algo.gamma");
  o.epsilon_start = c.get_double("algo.epsilon_start");
  o.epsilon_end = c.get_double("algo.epsilon_end");
  o.epsilon_decay_steps = c.get_int("algo.epsilon_decay_steps");
  o.target_update_period = c.get_int("algo.target_update_period");
  return o;
}

DDPGOptions ddpg_options(const ConfigTree& c) {
  DDPGOptions o;
  fill_continuous(c, o);
  o.exploration_noise = c.get_double("algo.exploration_noise");
  return o;
}

TD3Options td3_options(const ConfigTree& c) {
  TD3Options o;
  fill_continuous(c, o);
  o.exploration_noise = c.get_double("algo.exploration_noise");
  o.target_noise = c.get_double("algo.target_noise");
  o.noise_clip = c.get_double("algo.noise_clip");
  o.ac.policy_delay = c.get_int("algo.policy_delay");
  return o;
}

SACOptions sac_options(const ConfigTree& c) {
  SACOptions o;
  fill_continuous(c, o);
  o.lr_alpha = c.get_double("algo.lr_alpha");
  o.initial_alpha = c.get_double("algo.initial_alpha");
  return o;
}

DRNDOptions drnd_options(const ConfigTree& c) {
  DRNDOptions o;
  static_cast<SACOptions&>(o) = sac_options(c);
  o.lambda_actor = c.get_double("algo.lambda_actor");
  o.lambda_critic = c.get_double("algo.lambda_critic");
  o.bonus.members = size_of(c, "algo.bonus_members");
  o.bonus.feature_dim = size_of(c, "algo.bonus_feature_dim");
  o.bonus.hidden = c.get_sizes("algo.bonus_hidden");
  o.bonus.activation = parse_activation(c.get_string("nets.activation"));
  o.bonus.adam.lr = c.get_double("algo.lr_bonus");
  return o;
}

PPOOptions ppo_options(const ConfigTree& c) {
  PPOOptions o;
  o.actor_hidden = c.get_sizes("nets.actor_hidden");
  o.critic_hidden = c.get_sizes("nets.critic_hidden");
  o.activation = parse_activation(c.get_string("nets.activation"));
  o.lr_actor = c.get_double("algo.lr_actor");
  o.lr_critic = c.get_double("algo.lr_critic");
  o.gamma = c.get_double("algo.gamma");
  o.gae_lambda = c.get_double("algo.gae_lambda");
  o.clip_ratio = c.get_double("algo.clip_ratio");
  o.entropy_coef = c.get_double("algo.entropy_coef");
  o.max_grad_norm = c.get_double("algo.max_grad_norm");
  o.rollout_length = size_of(c, "algo.rollout_length");
  o.epochs = size_of(c, "algo.epochs");
  o.minibatches = size_of(c, "algo.minibatches");
  return o;
}

std::unique_ptr<Agent> make_agent(const ConfigTree& config, const Space& obs,
                                  const Space& act) {
  const std::string& id = config.algo_id();
  const std::uint64_t seed = config.experiment().seed;
  if (id == "dqn") return std::make_unique<DQN>(obs, act, dqn_options(config), seed);
  if (id == "ddpg") return std::make_unique<DDPG>(obs, act, ddpg_options(config), seed);
  if (id == "td3") return std::make_unique<TD3>(obs, act, td3_options(config), seed);
  if (id == "sac") return std::make_unique<SAC>(obs, act, sac_options(config), seed);
  if (id == "drnd") return std::make_unique<DRND>(obs, act, drnd_options(config), seed);
  if (id == "ppo") return std::make_unique<PPO>(obs, act, ppo_options(config), seed);
  throw ConfigError("unknown algorithm '" + id + "'");
}

}  // namespace oorl
