#include "oorl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "oorl/error.hpp"

namespace oorl {

Tensor ppo_policy_loss(const Tensor& new_log_prob, const Tensor& old_log_prob,
                       const Tensor& advantages, double clip_ratio) {
  const Tensor ratio = exp(new_log_prob - old_log_prob.detach());
  const Tensor adv = advantages.detach();
  const Tensor clipped = clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio);
  return -mean(minimum(ratio * adv, clipped * adv));
}

std::vector<double> normalize_advantages(std::span<const double> advantages) {
  const double n = static_cast<double>(advantages.size());
  const double m = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages) var += (a - m) * (a - m);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(advantages.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (advantages[i] - m) / (sd + 1e-8);
  return out;
}

namespace {

Mlp make_policy(const Space& obs, const Space& act, const PPOOptions& o, Rng& rng) {
  return Mlp({.input_dim = obs.dim(),
              .hidden = o.actor_hidden,
              .output_dim = act.is_discrete() ? act.n() : act.dim(),
              .activation = o.activation,
              .final_layer_scale = 0.01},
             rng);
}

}  // namespace

PPOActor::PPOActor(const Space& obs, const Space& act, const PPOOptions& options, Rng& rng)
    : Actor(make_policy(obs, act, options, rng), AdamOptions{.lr = options.lr_actor}, false),
      discrete_(act.is_discrete()),
      options_(options) {
  if (!discrete_) {
    log_std_ = Tensor::vector(std::vector<double>(act.dim(), 0.0), true);
    optim_ = Adam(parameters(), AdamOptions{.lr = options.lr_actor});
  }
}

std::vector<Tensor> PPOActor::parameters() const {
  std::vector<Tensor> p = net_.parameters();
  if (log_std_.defined()) p.push_back(log_std_);
  return p;
}

ActorOutput PPOActor::act(const Tensor& states, ActMode mode, Rng& rng) const {
  ActorOutput out;
  const Tensor head = net_.forward(states);
  const std::size_t n = head.rows(), k = head.cols();
  if (discrete_) {
    const Tensor logp = log_softmax(head);
    const auto lp = logp.values();
    std::vector<double> actions(n), chosen(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t a = 0;
      if (mode == ActMode::kDeterministic) {
        a = std::max_element(lp.begin() + i * k, lp.begin() + (i + 1) * k) - (lp.begin() + i * k);
      } else {
        const double u = rng.uniform();
        double cum = 0.0;
        a = k - 1;
        for (std::size_t j = 0; j < k; ++j) {
          cum += std::exp(lp[i * k + j]);
          if (u < cum) {
            a = j;
            break;
          }
        }
      }
      actions[i] = static_cast<double>(a);
      chosen[i] = lp[i * k + a];
    }
    out.set("action", Tensor::matrix(n, 1, std::move(actions)));
    out.set("log_prob", Tensor::matrix(n, 1, std::move(chosen)));
    return out;
  }
  const Tensor ls = Tensor::zeros(Shape::matrix(n, k)) + log_std_;
  const GaussianHeadOutput g =
      gaussian_sample(head, ls, rng, mode == ActMode::kDeterministic, unit_bounds(k));
  out.set("action", g.action);
  out.set("log_prob", g.log_prob);
  return out;
}

Tensor PPOActor::log_prob(const Tensor& states, const Tensor& actions) const {
  const Tensor head = net_.forward(states);
  if (discrete_) {
    std::vector<std::size_t> index(actions.rows());
    const auto a = actions.values();
    for (std::size_t i = 0; i < index.size(); ++i) index[i] = static_cast<std::size_t>(a[i]);
    return gather_cols(log_softmax(head), index);
  }
  const Tensor ls = Tensor::zeros(head.shape()) + log_std_;
  return squashed_gaussian_log_prob(head, ls, actions);
}

Tensor PPOActor::entropy(const Tensor& states) const {
  const Tensor head = net_.forward(states);
  if (discrete_) {
    const Tensor logp = log_softmax(head);
    return -sum(exp(logp) * logp, 1);
  }
  // Entropy of the Gaussian before squashing.
  const double c = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  const Tensor ls = Tensor::zeros(head.shape()) + clamp(log_std_, kLogStdMin, kLogStdMax);
  return sum(ls + c, 1);
}

std::pair<double, double> PPOActor::update(const Tensor& states, const Tensor& actions,
                                           const Tensor& old_log_prob,
                                           const Tensor& advantages) {
  Tensor loss = ppo_policy_loss(log_prob(states, actions), old_log_prob, advantages,
                                options_.clip_ratio);
  const double policy_value = loss.item();
  const Tensor ent = mean(entropy(states));
  const double ent_value = ent.item();
  if (options_.entropy_coef != 0.0) loss = loss - options_.entropy_coef * ent;
  apply(loss, options_.max_grad_norm);
  return {policy_value, ent_value};
}

void PPOActor::save(StateDict& out) const {
  Actor::save(out);
  if (log_std_.defined()) save_tensors(out, "actor_log_std", {log_std_});
}

void PPOActor::load(const StateDict& in) {
  Actor::load(in);
  if (log_std_.defined()) {
    std::vector<Tensor> p{log_std_};
    load_tensors(in, "actor_log_std", p);
  }
}

ValueFunction::ValueFunction(const MLPSpec& spec, AdamOptions adam, double max_grad_norm,
                             Rng& rng)
    : net_(spec, rng), optim_(net_.parameters(), adam), max_grad_norm_(max_grad_norm) {}

double ValueFunction::update(const Tensor& states, const Tensor& returns) {
  const Tensor loss = mean(square(value(states) - returns.detach()));
  const double v = loss.item();
  GradientMap grads = backward(loss, net_.parameters());
  clip_grad_norm(grads, net_.parameters(), max_grad_norm_);
  optim_.step(grads);
  return v;
}

void ValueFunction::save(StateDict& out) const {
  save_mlp(out, "value", net_);
  save_adam(out, "optim.value", optim_);
}

void ValueFunction::load(const StateDict& in) {
  load_mlp(in, "value", net_);
  load_adam(in, "optim.value", optim_);
}

namespace {

void validate(const PPOOptions& o) {
  if (o.rollout_length == 0 || o.epochs == 0 || o.minibatches == 0) {
    throw ConfigError("rollout_length, epochs and minibatches must be positive");
  }
  if (o.minibatches > o.rollout_length) {
    throw ConfigError("minibatches must not exceed rollout_length");
  }
  if (!(o.clip_ratio > 0.0)) throw ConfigError("clip_ratio must be positive");
  if (!(o.max_grad_norm > 0.0)) throw ConfigError("max_grad_norm must be positive");
}

std::vector<double> column(const Tensor& t) {
  return std::vector<double>(t.values().begin(), t.values().end());
}

}  // namespace

PPO::PPO(const Space& obs, const Space& act, const PPOOptions& options, std::uint64_t seed)
    : Agent("ppo", obs, act),
      options_((validate(options), options)),
      streams_(AgentStreams::from_root(seed)),
      actor_(obs, act, options, streams_.init),
      value_({.input_dim = obs.dim(),
              .hidden = options.critic_hidden,
              .output_dim = 1,
              .activation = options.activation},
             AdamOptions{.lr = options.lr_critic}, options.max_grad_norm, streams_.init) {}

bool PPO::ready() const { return rollout_.size() >= options_.rollout_length; }

Action PPO::do_act(const Observation& state, ActMode mode) {
  const ActorOutput out = actor_.act(state_row(state), mode, streams_.act);
  const auto v = out["action"].values();
  return Action(v.begin(), v.end());
}

LossReport PPO::do_learn() {
  LossReport report = update(rollout_);
  rollout_.clear();
  return report;
}

LossReport PPO::update(RolloutBuffer& rollout) {
  const Tensor states = rollout.states();
  const Tensor actions = rollout.actions();
  rollout.finalize(column(value_.value(states)), column(actor_.log_prob(states, actions)),
                   column(value_.value(rollout.next_states())), options_.gamma,
                   options_.gae_lambda);

  const std::size_t n = rollout.size();
  const std::size_t mb = n / options_.minibatches;
  std::vector<std::size_t> order(n);
  double policy_sum = 0.0, value_sum = 0.0, entropy_sum = 0.0;
  std::size_t steps = 0;
  for (std::size_t epoch = 0; epoch < options_.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[streams_.sample.uniform_int(i)]);
    }
    for (std::size_t b = 0; b < options_.minibatches; ++b) {
      const std::size_t begin = b * mb;
      const std::size_t end = b + 1 == options_.minibatches ? n : begin + mb;
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const std::size_t m = idx.size();
      std::vector<double> adv(m), old_lp(m), ret(m);
      for (std::size_t i = 0; i < m; ++i) {
        adv[i] = rollout.advantages()[idx[i]];
        old_lp[i] = rollout.log_probs()[idx[i]];
        ret[i] = rollout.returns()[idx[i]];
      }
      const Tensor s = select_rows(states, idx);
      const Tensor a = select_rows(actions, idx);
      const auto [pl, ent] =
          actor_.update(s, a, Tensor::matrix(m, 1, std::move(old_lp)),
                        Tensor::matrix(m, 1, normalize_advantages(adv)));
      value_sum += value_.update(s, Tensor::matrix(m, 1, std::move(ret)));
      policy_sum += pl;
      entropy_sum += ent;
      ++steps;
    }
  }
  const double k = static_cast<double>(steps);
  return {{"loss_actor", policy_sum / k},
          {"loss_critic", value_sum / k},
          {"entropy", entropy_sum / k}};
}

void PPO::collect_state(StateDict& out) const {
  actor_.save(out);
  value_.save(out);
}

void PPO::restore_state(const StateDict& in) {
  actor_.load(in);
  value_.load(in);
}

}  // namespace oorl
