#include "oorl/buffer.hpp"

#include <algorithm>

namespace oorl {

namespace {

Tensor column(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor::matrix(n, 1, std::move(v));
}

}  // namespace

Batch Batch::from_transitions(std::span<const Transition> ts) {
  if (ts.empty()) throw ShapeError("batch: no transitions");
  const std::size_t n = ts.size();
  const std::size_t od = ts[0].state.size(), ad = ts[0].action.size();
  std::vector<double> s, a, r, ns, te, tr;
  for (const Transition& t : ts) {
    if (t.state.size() != od || t.next_state.size() != od || t.action.size() != ad) {
      throw ShapeError("batch: inconsistent transition dimensions");
    }
    s.insert(s.end(), t.state.begin(), t.state.end());
    a.insert(a.end(), t.action.begin(), t.action.end());
    ns.insert(ns.end(), t.next_state.begin(), t.next_state.end());
    r.push_back(t.reward);
    te.push_back(t.terminated ? 1.0 : 0.0);
    tr.push_back(t.truncated ? 1.0 : 0.0);
  }
  Batch b;
  b.states = Tensor::matrix(n, od, std::move(s));
  b.actions = Tensor::matrix(n, ad, std::move(a));
  b.next_states = Tensor::matrix(n, od, std::move(ns));
  b.rewards = column(std::move(r));
  b.terminated = column(std::move(te));
  b.truncated = column(std::move(tr));
  return b;
}

// ---- ReplayBuffer ----------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ShapeError("replay buffer capacity must be >= 1");
}

void ReplayBuffer::push(const Transition& t) {
  if (states_.empty()) {
    if (t.state.empty() || t.action.empty()) {
      throw ShapeError("replay: empty state or action");
    }
    obs_dim_ = t.state.size();
    act_dim_ = t.action.size();
    states_.resize(capacity_ * obs_dim_);
    next_states_.resize(capacity_ * obs_dim_);
    actions_.resize(capacity_ * act_dim_);
    rewards_.resize(capacity_);
    terminated_.resize(capacity_);
    truncated_.resize(capacity_);
  }
  if (t.state.size() != obs_dim_ || t.next_state.size() != obs_dim_ ||
      t.action.size() != act_dim_) {
    throw ShapeError("replay: transition dimensions differ from stored ones");
  }
  const std::size_t k = write_;
  std::copy(t.state.begin(), t.state.end(), states_.begin() + k * obs_dim_);
  std::copy(t.next_state.begin(), t.next_state.end(),
            next_states_.begin() + k * obs_dim_);
  std::copy(t.action.begin(), t.action.end(), actions_.begin() + k * act_dim_);
  rewards_[k] = t.reward;
  terminated_[k] = t.terminated;
  truncated_[k] = t.truncated;
  write_ = (write_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Transition ReplayBuffer::read_slot(std::size_t k) const {
  Transition t;
  t.state.assign(states_.begin() + k * obs_dim_, states_.begin() + (k + 1) * obs_dim_);
  t.next_state.assign(next_states_.begin() + k * obs_dim_,
                      next_states_.begin() + (k + 1) * obs_dim_);
  t.action.assign(actions_.begin() + k * act_dim_,
                  actions_.begin() + (k + 1) * act_dim_);
  t.reward = rewards_[k];
  t.terminated = terminated_[k];
  t.truncated = truncated_[k];
  return t;
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw ShapeError("replay: index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : write_;
  return read_slot((oldest + i) % capacity_);
}

Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (size_ == 0) throw ShapeError("replay: cannot sample from an empty buffer");
  const std::size_t n = batch_size;
  std::vector<double> s(n * obs_dim_), ns(n * obs_dim_), a(n * act_dim_);
  std::vector<double> r(n), te(n), tr(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = rng.uniform_int(size_);
    std::copy_n(states_.begin() + k * obs_dim_, obs_dim_, s.begin() + i * obs_dim_);
    std::copy_n(next_states_.begin() + k * obs_dim_, obs_dim_,
                ns.begin() + i * obs_dim_);
    std::copy_n(actions_.begin() + k * act_dim_, act_dim_, a.begin() + i * act_dim_);
    r[i] = rewards_[k];
    te[i] = terminated_[k];
    tr[i] = truncated_[k];
  }
  Batch b;
  b.states = Tensor::matrix(n, obs_dim_, std::move(s));
  b.next_states = Tensor::matrix(n, obs_dim_, std::move(ns));
  b.actions = Tensor::matrix(n, act_dim_, std::move(a));
  b.rewards = column(std::move(r));
  b.terminated = column(std::move(te));
  b.truncated = column(std::move(tr));
  return b;
}

// ---- GAE -------------------------------------------------------------------

GaeResult compute_gae(std::span<const double> rewards,
                      std::span<const double> values,
                      std::span<const unsigned char> terminated,
                      std::span<const unsigned char> truncated,
                      double bootstrap_value, double gamma, double lam,
                      std::span<const double> truncation_values) {
  const std::size_t n = rewards.size();
  if (values.size() != n || terminated.size() != n || truncated.size() != n) {
    throw ShapeError("compute_gae: input length mismatch");
  }
  if (!truncation_values.empty() && truncation_values.size() != n) {
    throw ShapeError("compute_gae: truncation_values length mismatch");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0) || !(lam >= 0.0 && lam <= 1.0)) {
    throw ShapeError("compute_gae: gamma and lambda must lie in [0, 1]");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    double next_value;
    if (i + 1 == n) {
      next_value = bootstrap_value;
      next_adv = 0.0;
    } else if (truncated[i] && !terminated[i]) {
      if (truncation_values.empty()) {
        throw ShapeError(
            "compute_gae: mid-buffer truncation requires truncation_values");
      }
      next_value = truncation_values[i];
      next_adv = 0.0;
    } else {
      next_value = values[i + 1];
    }
    const double nonterminal = terminated[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * nonterminal * next_value - values[i];
    const double adv = delta + gamma * lam * nonterminal * next_adv;
    out.advantages[i] = adv;
    out.returns[i] = adv + values[i];
    next_adv = adv;
  }
  return out;
}

// ---- RolloutBuffer ---------------------------------------------------------

void RolloutBuffer::push(const Transition& t) {
  if (rewards_.empty()) {
    obs_dim_ = t.state.size();
    act_dim_ = t.action.size();
  }
  if (t.state.size() != obs_dim_ || t.next_state.size() != obs_dim_ ||
      t.action.size() != act_dim_) {
    throw ShapeError("rollout: transition dimensions differ from stored ones");
  }
  states_.insert(states_.end(), t.state.begin(), t.state.end());
  next_states_.insert(next_states_.end(), t.next_state.begin(), t.next_state.end());
  actions_.insert(actions_.end(), t.action.begin(), t.action.end());
  rewards_.push_back(t.reward);
  terminated_.push_back(t.terminated);
  truncated_.push_back(t.truncated);
  finalized_ = false;
}

void RolloutBuffer::clear() { *this = RolloutBuffer(); }

Tensor RolloutBuffer::states() const {
  return Tensor::matrix(size(), obs_dim_, states_);
}
Tensor RolloutBuffer::next_states() const {
  return Tensor::matrix(size(), obs_dim_, next_states_);
}
Tensor RolloutBuffer::actions() const {
  return Tensor::matrix(size(), act_dim_, actions_);
}

void RolloutBuffer::finalize(std::vector<double> values,
                             std::vector<double> log_probs,
                             std::vector<double> next_values, double gamma,
                             double lam) {
  const std::size_t n = size();
  if (n == 0) throw ShapeError("rollout: nothing to finalize");
  if (values.size() != n || log_probs.size() != n || next_values.size() != n) {
    throw ShapeError("rollout: finalize input length mismatch");
  }
  const double bootstrap = terminated_.back() ? 0.0 : next_values.back();
  GaeResult gae = compute_gae(rewards_, values, terminated_, truncated_,
                              bootstrap, gamma, lam, next_values);
  values_ = std::move(values);
  log_probs_ = std::move(log_probs);
  advantages_ = std::move(gae.advantages);
  returns_ = std::move(gae.returns);
  finalized_ = true;
}

void RolloutBuffer::require_finalized() const {
  if (!finalized_) throw GraphError("rollout: not finalized");
}

const std::vector<double>& RolloutBuffer::values() const {
  require_finalized();
  return values_;
}
const std::vector<double>& RolloutBuffer::log_probs() const {
  require_finalized();
  return log_probs_;
}
const std::vector<double>& RolloutBuffer::advantages() const {
  require_finalized();
  return advantages_;
}
const std::vector<double>& RolloutBuffer::returns() const {
  require_finalized();
  return returns_;
}

}  // namespace oorl
