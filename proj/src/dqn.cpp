#include "oorl/dqn.hpp"

#include <algorithm>

#include "oorl/error.hpp"

namespace oorl {

double linear_epsilon(std::int64_t step, double start, double end, std::int64_t decay_steps) {
  if (decay_steps <= 0 || step >= decay_steps) return end;
  const double frac = static_cast<double>(step) / static_cast<double>(decay_steps);
  return start + (end - start) * frac;
}

Tensor DQNCritic::input(const Tensor& states, const Tensor& /*actions*/) const {
  return states;
}

Tensor DQNCritic::get_bellman_target(const Batch& batch,
                                     const BellmanContext& /*context*/) const {
  const Tensor q = ensemble().reduce(ensemble().forward_target(batch.next_states));
  const std::size_t n = q.rows(), a = q.cols();
  std::vector<double> best(n);
  const auto v = q.values();
  for (std::size_t i = 0; i < n; ++i) {
    best[i] = *std::max_element(v.begin() + i * a, v.begin() + (i + 1) * a);
  }
  return bootstrap(batch, Tensor::matrix(n, 1, std::move(best)));
}

Tensor DQNCritic::loss(const Batch& batch, const Tensor& target) const {
  const std::size_t n = batch.size();
  std::vector<std::size_t> index(n);
  const auto acts = batch.actions.values();
  for (std::size_t i = 0; i < n; ++i) index[i] = static_cast<std::size_t>(acts[i]);
  const std::vector<Tensor> q = ensemble().forward(batch.states);
  Tensor total;
  for (const Tensor& qi : q) {
    const Tensor mse = mean(square(gather_cols(qi, index) - target));
    total = total.defined() ? total + mse : mse;
  }
  return q.size() == 1 ? total : total * (1.0 / static_cast<double>(q.size()));
}

DQN::DQN(const Space& obs, const Space& act, const DQNOptions& options, std::uint64_t seed)
    : OffPolicyAgent("dqn", obs, act, options.off_policy, seed), options_(options) {
  if (!act.is_discrete()) throw ConfigError("dqn requires a discrete action space");
  if (options_.target_update_period < 1) {
    throw ConfigError("target_update_period must be >= 1");
  }
  CriticOptions c;
  c.spec = {.input_dim = obs.dim(),
            .hidden = options_.hidden,
            .output_dim = act.n(),
            .activation = options_.activation,
            .head = Head::kQValue};
  c.ensemble_size = 1;
  c.adam.lr = options_.lr;
  c.gamma = options_.gamma;
  critic_ = std::make_unique<DQNCritic>(c, streams_.init);
}

double DQN::epsilon() const {
  return linear_epsilon(global_step(), options_.epsilon_start, options_.epsilon_end,
                        options_.epsilon_decay_steps);
}

Action DQN::do_act(const Observation& state, ActMode mode) {
  if (mode == ActMode::kStochastic && streams_.act.uniform() < epsilon()) {
    return random_action();
  }
  const Tensor q = critic_->ensemble().member(0).forward(state_row(state));
  const auto v = q.values();
  const auto best = std::max_element(v.begin(), v.end()) - v.begin();
  return {static_cast<double>(best)};
}

LossReport DQN::update(const Batch& batch) {
  const double eps = epsilon();
  const double loss = critic_->update(batch, BellmanContext{});
  if (++updates_ % options_.target_update_period == 0) critic_->hard_update_target();
  return {{"loss_critic", loss}, {"epsilon", eps}};
}

void DQN::collect_state(StateDict& out) const {
  critic_->save(out);
  save_scalar(out, "counters.dqn_updates", static_cast<double>(updates_));
}

void DQN::restore_state(const StateDict& in) {
  critic_->load(in);
  updates_ = static_cast<std::int64_t>(load_scalar(in, "counters.dqn_updates"));
}

}  // namespace oorl
