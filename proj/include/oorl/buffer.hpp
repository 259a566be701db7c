#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "oorl/env.hpp"
#include "oorl/rng.hpp"
#include "oorl/tensor.hpp"

namespace oorl {

struct Transition {
  Observation state;
  Action action;
  double reward = 0.0;
  Observation next_state;
  bool terminated = false;
  bool truncated = false;
};

// Columnar minibatch. Per-sample scalars are [n, 1] columns.
struct Batch {
  Tensor states;       // [n, obs_dim]
  Tensor actions;      // [n, act_dim]
  Tensor rewards;      // [n, 1]
  Tensor next_states;  // [n, obs_dim]
  Tensor terminated;   // [n, 1], 1.0 for MDP terminals
  Tensor truncated;    // [n, 1]

  std::size_t size() const { return rewards.defined() ? rewards.rows() : 0; }
  static Batch from_transitions(std::span<const Transition> ts);
};

// Fixed-capacity FIFO ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  // Dimensions are fixed by the first transition pushed.
  void push(const Transition& t);
  // Uniform with replacement.
  Batch sample(std::size_t batch_size, Rng& rng) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  // i-th oldest stored transition.
  Transition at(std::size_t i) const;

 private:
  Transition read_slot(std::size_t slot) const;

  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t write_ = 0;
  std::size_t obs_dim_ = 0, act_dim_ = 0;
  std::vector<double> states_, actions_, rewards_, next_states_;
  std::vector<unsigned char> terminated_, truncated_;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Generalized advantage estimation, iterating backwards:
//   delta_t = r_t + gamma * (1 - term_t) * V_next - V_t
//   A_t     = delta_t + gamma * lam * (1 - term_t) * A_next
// For the last step V_next = bootstrap_value. A step flagged truncated in the
// middle of the buffer ends its episode: V_next comes from
// truncation_values[t] (the value of that step's next state) and the
// recursion restarts. returns = A + V.
GaeResult compute_gae(std::span<const double> rewards,
                      std::span<const double> values,
                      std::span<const unsigned char> terminated,
                      std::span<const unsigned char> truncated,
                      double bootstrap_value, double gamma, double lam,
                      std::span<const double> truncation_values = {});

// On-policy storage for one collection phase.
class RolloutBuffer {
 public:
  void push(const Transition& t);
  void clear();

  std::size_t size() const { return rewards_.size(); }
  bool finalized() const { return finalized_; }

  Tensor states() const;
  Tensor next_states() const;
  Tensor actions() const;
  const std::vector<double>& rewards() const { return rewards_; }
  const std::vector<unsigned char>& terminated() const { return terminated_; }
  const std::vector<unsigned char>& truncated() const { return truncated_; }

  // Stores value estimates, old log-probabilities and GAE outputs.
  void finalize(std::vector<double> values, std::vector<double> log_probs,
                std::vector<double> next_values, double gamma, double lam);

  const std::vector<double>& values() const;
  const std::vector<double>& log_probs() const;
  const std::vector<double>& advantages() const;
  const std::vector<double>& returns() const;

 private:
  void require_finalized() const;

  std::size_t obs_dim_ = 0, act_dim_ = 0;
  std::vector<double> states_, next_states_, actions_, rewards_;
  std::vector<unsigned char> terminated_, truncated_;
  std::vector<double> values_, log_probs_, advantages_, returns_;
  bool finalized_ = false;
};

}  // namespace oorl
