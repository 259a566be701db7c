#pragma once

// Cross-algorithm equivalence runs shared by the unit tests and the
// acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "oorl/ddpg.hpp"
#include "oorl/drnd.hpp"
#include "oorl/sac.hpp"

namespace oorl::testing {

inline Batch random_batch(Rng& rng, std::size_t n, std::size_t obs_dim, std::size_t act_dim,
                          double terminal_prob = 0.1) {
  std::vector<Transition> ts(n);
  for (Transition& t : ts) {
    for (std::size_t i = 0; i < obs_dim; ++i) t.state.push_back(rng.uniform(-1.0, 1.0));
    for (std::size_t i = 0; i < act_dim; ++i) t.action.push_back(rng.uniform(-1.0, 1.0));
    for (std::size_t i = 0; i < obs_dim; ++i) t.next_state.push_back(rng.uniform(-1.0, 1.0));
    t.reward = rng.normal();
    t.terminated = rng.uniform() < terminal_prob;
  }
  return Batch::from_transitions(ts);
}

// Largest per-step difference between the loss reports of TD3 with zero
// target noise, no policy delay and identical twin critics, and DDPG using
// the same twin critics. Returns infinity if the report keys differ.
inline double td3_ddpg_max_loss_gap(std::size_t steps, std::uint64_t seed) {
  const Space obs = Space::box({-1, -1, -1}, {1, 1, 1});
  const Space act = Space::box({-1}, {1});
  DDPGOptions d;
  d.actor_hidden = d.critic_hidden = {16, 16};
  d.ensemble_size = 2;
  d.reduce = EnsembleReduce::kMin;
  d.ac.policy_delay = 1;
  TD3Options t;
  static_cast<DDPGOptions&>(t) = d;
  t.target_noise = 0.0;

  DDPG ddpg(obs, act, d, seed);
  TD3 td3(obs, act, t, seed);
  for (ActorCritic* agent : {static_cast<ActorCritic*>(&ddpg), static_cast<ActorCritic*>(&td3)}) {
    auto& ens = agent->critic().ensemble();
    ens.member(1).copy_from(ens.member(0));
    ens.hard_update();
  }
  Rng data(seed + 17);
  double gap = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const Batch b = random_batch(data, 32, 3, 1);
    const LossReport a = ddpg.update(b);
    const LossReport c = td3.update(b);
    if (a.size() != c.size()) return INFINITY;
    for (const auto& [key, v] : a) {
      if (!c.count(key)) return INFINITY;
      gap = std::max(gap, std::abs(v - c.at(key)));
    }
  }
  return gap;
}

// Whether DRND with both lambdas at zero reproduces SAC's loss reports
// bit for bit over `steps` direct updates.
inline bool drnd_sac_reports_identical(std::size_t steps, std::uint64_t seed) {
  const Space obs = Space::box({-1, -1, -8}, {1, 1, 8});
  const Space act = Space::box({-1}, {1});
  DRNDOptions o;
  o.actor_hidden = o.critic_hidden = {16, 16};
  o.bonus.hidden = {16};
  o.bonus.feature_dim = 8;
  o.lambda_actor = o.lambda_critic = 0.0;
  SAC sac(obs, act, o, seed);
  DRND drnd(obs, act, o, seed);
  Rng data(seed + 29);
  for (std::size_t k = 0; k < steps; ++k) {
    const Batch b = random_batch(data, 32, 3, 1);
    const LossReport a = sac.update(b);
    const LossReport c = drnd.update(b);
    for (const auto& [key, v] : a) {
      if (!c.count(key) || c.at(key) != v) return false;
    }
  }
  return true;
}

}  // namespace oorl::testing
