#pragma once

#include <memory>

#include "oorl/agent.hpp"
#include "oorl/config.hpp"
#include "oorl/ddpg.hpp"
#include "oorl/dqn.hpp"
#include "oorl/drnd.hpp"
#include "oorl/ppo.hpp"
#include "oorl/sac.hpp"

namespace oorl {

// Builds the agent named by experiment.algo_id, seeded from experiment.seed.
std::unique_ptr<Agent> make_agent(const ConfigTree& config, const Space& observation_space,
                                  const Space& action_space);

DQNOptions dqn_options(const ConfigTree& c);
DDPGOptions ddpg_options(const ConfigTree& c);
TD3Options td3_options(const ConfigTree& c);
SACOptions sac_options(const ConfigTree& c);
DRNDOptions drnd_options(const ConfigTree& c);
PPOOptions ppo_options(const ConfigTree& c);

}  // namespace oorl
