#pragma once

#include <cstdint>
#include <vector>

#include "oorl/agent.hpp"

namespace oorl {

struct DQNOptions {
  OffPolicyOptions off_policy{};
  std::vector<std::size_t> hidden{128, 128};
  Activation activation = Activation::kRelu;
  double lr = 3e-4;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::int64_t epsilon_decay_steps = 10000;
  // Hard target copy every this many updates.
  std::int64_t target_update_period = 1000;
};

// Linear annealing from start to end over decay_steps, constant afterwards.
double linear_epsilon(std::int64_t step, double start, double end, std::int64_t decay_steps);

// Q(s, .) over all discrete actions; actions in batches hold indices.
class DQNCritic : public Critic {
 public:
  using Critic::Critic;

  // r + gamma * (1 - terminated) * max_a' Q_target(s', a'); ignores context.
  Tensor get_bellman_target(const Batch& batch, const BellmanContext& context) const override;
  // Mean squared error of Q(s, a) against the target.
  Tensor loss(const Batch& batch, const Tensor& target) const override;

 protected:
  Tensor input(const Tensor& states, const Tensor& actions) const override;
};

class DQN : public OffPolicyAgent {
 public:
  DQN(const Space& obs, const Space& act, const DQNOptions& options, std::uint64_t seed);

  LossReport update(const Batch& batch) override;
  double epsilon() const;

  DQNCritic& critic() { return *critic_; }
  const DQNCritic& critic() const { return *critic_; }

 protected:
  Action do_act(const Observation& state, ActMode mode) override;
  void collect_state(StateDict& out) const override;
  void restore_state(const StateDict& in) override;

 private:
  DQNOptions options_;
  std::unique_ptr<DQNCritic> critic_;
  std::int64_t updates_ = 0;
};

}  // namespace oorl
