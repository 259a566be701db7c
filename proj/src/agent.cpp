#include "oorl/agent.hpp"

#include <algorithm>

#include "oorl/error.hpp"

namespace oorl {

const Tensor& KeyedTensors::operator[](const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw KeyError("missing key '" + key + "'");
  return it->second;
}

std::vector<std::string> KeyedTensors::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

namespace {

NamedArray to_array(const Tensor& t) {
  const auto v = t.values();
  return {t.shape().dims(), std::vector<double>(v.begin(), v.end())};
}

const NamedArray& find(const StateDict& in, const std::string& name) {
  const auto it = in.find(name);
  if (it == in.end()) throw IoError("checkpoint is missing '" + name + "'");
  return it->second;
}

void restore_into(const NamedArray& a, const std::string& name, Tensor& t) {
  if (a.shape != t.shape().dims() || a.values.size() != t.numel()) {
    throw IoError("checkpoint entry '" + name + "' has shape " +
                  Shape(a.shape).str() + ", expected " + t.shape().str());
  }
  auto dst = t.mutable_values();
  std::copy(a.values.begin(), a.values.end(), dst.begin());
}

}  // namespace

void save_tensors(StateDict& out, const std::string& prefix,
                  const std::vector<Tensor>& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    out[prefix + "." + std::to_string(i)] = to_array(params[i]);
  }
}

void load_tensors(const StateDict& in, const std::string& prefix,
                  std::vector<Tensor>& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string name = prefix + "." + std::to_string(i);
    restore_into(find(in, name), name, params[i]);
  }
}

void save_mlp(StateDict& out, const std::string& prefix, const Mlp& net) {
  const auto names = net.parameter_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    out[prefix + "." + names[i]] = to_array(net.parameters()[i]);
  }
}

void load_mlp(const StateDict& in, const std::string& prefix, Mlp& net) {
  const auto names = net.parameter_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string name = prefix + "." + names[i];
    restore_into(find(in, name), name, net.parameters()[i]);
  }
}

void save_adam(StateDict& out, const std::string& prefix, const Adam& opt) {
  for (std::size_t i = 0; i < opt.params().size(); ++i) {
    const auto& dims = opt.params()[i].shape().dims();
    out[prefix + ".m." + std::to_string(i)] = {dims, opt.first_moment()[i]};
    out[prefix + ".v." + std::to_string(i)] = {dims, opt.second_moment()[i]};
  }
  save_scalar(out, prefix + ".t", static_cast<double>(opt.t()));
}

void load_adam(const StateDict& in, const std::string& prefix, Adam& opt) {
  std::vector<std::vector<double>> m, v;
  for (std::size_t i = 0; i < opt.params().size(); ++i) {
    const std::size_t n = opt.params()[i].numel();
    const std::string mn = prefix + ".m." + std::to_string(i);
    const std::string vn = prefix + ".v." + std::to_string(i);
    const NamedArray& ma = find(in, mn);
    const NamedArray& va = find(in, vn);
    if (ma.values.size() != n || va.values.size() != n) {
      throw IoError("checkpoint optimizer entry '" + mn + "' has the wrong size");
    }
    m.push_back(ma.values);
    v.push_back(va.values);
  }
  opt.restore(std::move(m), std::move(v),
              static_cast<std::int64_t>(load_scalar(in, prefix + ".t")));
}

void save_scalar(StateDict& out, const std::string& name, double value) {
  out[name] = {{}, {value}};
}

double load_scalar(const StateDict& in, const std::string& name) {
  const NamedArray& a = find(in, name);
  if (a.values.size() != 1) throw IoError("checkpoint entry '" + name + "' is not a scalar");
  return a.values[0];
}

AgentStreams AgentStreams::from_root(std::uint64_t root) {
  return {Rng(derive_seed(root, 1), "init"), Rng(derive_seed(root, 2), "sample"),
          Rng(derive_seed(root, 3), "act"), Rng(derive_seed(root, 4), "update"),
          Rng(derive_seed(root, 6), "bonus")};
}

// ---------------------------------------------------------------- Agent

Agent::Agent(std::string algo_id, Space observation_space, Space action_space)
    : algo_id_(std::move(algo_id)),
      obs_space_(std::move(observation_space)),
      act_space_(std::move(action_space)) {}

Action Agent::act(const Observation& state, ActMode mode) {
  if (state.size() != obs_space_.dim()) {
    throw ShapeError("act: state has dimension " + std::to_string(state.size()) +
                     ", expected " + std::to_string(obs_space_.dim()));
  }
  return do_act(state, mode);
}

void Agent::store(const Transition& t) {
  if (t.state.size() != obs_space_.dim() || t.next_state.size() != obs_space_.dim() ||
      t.action.size() != act_space_.dim()) {
    throw ShapeError("store: transition dimensions do not match the spaces");
  }
  do_store(t);
  ++global_step_;
}

std::optional<LossReport> Agent::learn() {
  if (!ready()) return std::nullopt;
  LossReport report = do_learn();
  ++update_count_;
  return report;
}

StateDict Agent::state_dict() const {
  StateDict out;
  collect_state(out);
  save_scalar(out, "counters.global_step", static_cast<double>(global_step_));
  save_scalar(out, "counters.update_count", static_cast<double>(update_count_));
  return out;
}

void Agent::load_state_dict(const StateDict& state) {
  restore_state(state);
  global_step_ = static_cast<std::int64_t>(load_scalar(state, "counters.global_step"));
  update_count_ = static_cast<std::int64_t>(load_scalar(state, "counters.update_count"));
}

Tensor Agent::state_row(const Observation& state) const {
  return Tensor::matrix(1, state.size(), state);
}

// ---------------------------------------------------------------- ensemble

EnsembleReduce parse_reduce(const std::string& name) {
  if (name == "min") return EnsembleReduce::kMin;
  if (name == "mean") return EnsembleReduce::kMean;
  throw ConfigError("unknown ensemble reduction '" + name + "'");
}

std::string to_string(EnsembleReduce r) {
  return r == EnsembleReduce::kMin ? "min" : "mean";
}

Tensor reduce_ensemble(std::span<const Tensor> q_values, EnsembleReduce kind) {
  if (q_values.empty()) throw ShapeError("reduce_ensemble: no members");
  for (const Tensor& q : q_values) {
    if (q.shape() != q_values.front().shape()) {
      throw ShapeError("reduce_ensemble: member shapes differ");
    }
  }
  if (q_values.size() == 1) return q_values.front();
  Tensor acc = q_values.front();
  for (std::size_t i = 1; i < q_values.size(); ++i) {
    acc = kind == EnsembleReduce::kMin ? minimum(acc, q_values[i]) : acc + q_values[i];
  }
  if (kind == EnsembleReduce::kMean) acc = acc * (1.0 / static_cast<double>(q_values.size()));
  return acc;
}

CriticEnsemble::CriticEnsemble(const MLPSpec& spec, std::size_t members,
                               EnsembleReduce reduce, Rng& rng)
    : reduce_(reduce) {
  if (members == 0) throw ConfigError("critic ensemble needs at least one member");
  for (std::size_t i = 0; i < members; ++i) {
    members_.emplace_back(spec, rng);
    targets_.push_back(members_.back().frozen_copy());
  }
}

std::vector<Tensor> CriticEnsemble::forward(const Tensor& input) const {
  std::vector<Tensor> out;
  out.reserve(members_.size());
  for (const Mlp& m : members_) out.push_back(m.forward(input));
  return out;
}

std::vector<Tensor> CriticEnsemble::forward_target(const Tensor& input) const {
  std::vector<Tensor> out;
  out.reserve(targets_.size());
  for (const Mlp& m : targets_) out.push_back(m.forward(input));
  return out;
}

std::vector<Tensor> CriticEnsemble::parameters() const {
  std::vector<Tensor> out;
  for (const Mlp& m : members_) {
    out.insert(out.end(), m.parameters().begin(), m.parameters().end());
  }
  return out;
}

void CriticEnsemble::polyak(double tau) {
  for (std::size_t i = 0; i < members_.size(); ++i) {
    polyak_update(members_[i].parameters(), targets_[i].parameters(), tau);
  }
}

void CriticEnsemble::hard_update() {
  for (std::size_t i = 0; i < members_.size(); ++i) targets_[i].copy_from(members_[i]);
}

void CriticEnsemble::save(StateDict& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < members_.size(); ++i) {
    save_mlp(out, prefix + "." + std::to_string(i), members_[i]);
    save_mlp(out, prefix + "_target." + std::to_string(i), targets_[i]);
  }
}

void CriticEnsemble::load(const StateDict& in, const std::string& prefix) {
  for (std::size_t i = 0; i < members_.size(); ++i) {
    load_mlp(in, prefix + "." + std::to_string(i), members_[i]);
    load_mlp(in, prefix + "_target." + std::to_string(i), targets_[i]);
  }
}

// ---------------------------------------------------------------- critic

Critic::Critic(const CriticOptions& options, Rng& rng)
    : options_(options),
      ensemble_(options.spec, options.ensemble_size, options.reduce, rng),
      optim_(ensemble_.parameters(), options.adam) {}

Tensor Critic::input(const Tensor& states, const Tensor& actions) const {
  return concat_cols(states, actions);
}

std::vector<Tensor> Critic::q_values(const Tensor& states, const Tensor& actions) const {
  return ensemble_.forward(input(states, actions));
}

Tensor Critic::q_reduced(const Tensor& states, const Tensor& actions) const {
  return ensemble_.reduce(q_values(states, actions));
}

Tensor Critic::target_reduced(const Tensor& states, const Tensor& actions) const {
  return ensemble_.reduce(ensemble_.forward_target(input(states, actions.detach())))
      .detach();
}

Tensor Critic::bootstrap(const Batch& batch, const Tensor& next_value) const {
  const Tensor not_done = add_scalar(-batch.terminated, 1.0);
  return (batch.rewards + options_.gamma * (not_done * next_value.detach())).detach();
}

Tensor Critic::get_bellman_target(const Batch& batch, const BellmanContext& context) const {
  const Tensor& next_action = context["next_action"];
  return bootstrap(batch, target_reduced(batch.next_states, next_action));
}

Tensor Critic::loss(const Batch& batch, const Tensor& target) const {
  const std::vector<Tensor> q = q_values(batch.states, batch.actions);
  Tensor total;
  for (const Tensor& qi : q) {
    const Tensor mse = mean(square(qi - target));
    total = total.defined() ? total + mse : mse;
  }
  return q.size() == 1 ? total : total * (1.0 / static_cast<double>(q.size()));
}

double Critic::update(const Batch& batch, const BellmanContext& context) {
  const Tensor target = get_bellman_target(batch, context);
  const Tensor l = loss(batch, target);
  const double value = l.item();
  const std::vector<Tensor> params = ensemble_.parameters();
  optim_.step(backward(l, params));
  return value;
}

void Critic::save(StateDict& out) const {
  ensemble_.save(out, "critic");
  save_adam(out, "optim.critic", optim_);
}

void Critic::load(const StateDict& in) {
  ensemble_.load(in, "critic");
  load_adam(in, "optim.critic", optim_);
}

// ---------------------------------------------------------------- actor

Actor::Actor(Mlp net, AdamOptions adam, bool with_target) : net_(std::move(net)) {
  if (with_target) target_ = net_.frozen_copy();
  optim_ = Adam(net_.parameters(), adam);
}

void Actor::update_target(double tau) {
  if (target_) polyak_update(net_.parameters(), target_->parameters(), tau);
}

void Actor::apply(const Tensor& loss, std::optional<double> max_grad_norm) {
  const std::vector<Tensor> params = parameters();
  GradientMap grads = backward(loss, params);
  if (max_grad_norm) clip_grad_norm(grads, params, *max_grad_norm);
  optim_.step(grads);
}

void Actor::save(StateDict& out) const {
  save_mlp(out, "actor", net_);
  if (target_) save_mlp(out, "actor_target", *target_);
  save_adam(out, "optim.actor", optim_);
}

void Actor::load(const StateDict& in) {
  load_mlp(in, "actor", net_);
  if (target_) load_mlp(in, "actor_target", *target_);
  load_adam(in, "optim.actor", optim_);
}

LossReport QActor::update(const Tensor& states, const Critic& critic, Rng& rng) {
  const ActorLoss l = loss(states, critic, rng);
  const double value = l.loss.item();
  apply(l.loss);
  return {{"loss_actor", value}};
}

// ---------------------------------------------------------------- off-policy

OffPolicyAgent::OffPolicyAgent(std::string algo_id, Space obs, Space act,
                               OffPolicyOptions options, std::uint64_t seed)
    : Agent(std::move(algo_id), std::move(obs), std::move(act)),
      streams_(AgentStreams::from_root(seed)),
      options_(options),
      buffer_(options.buffer_capacity) {
  if (options_.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (options_.update_every < 1) throw ConfigError("update_every must be >= 1");
  if (options_.warmup_steps < 0) throw ConfigError("warmup_steps must be >= 0");
}

bool OffPolicyAgent::ready() const {
  return buffer_.size() > 0 && !warming_up() && global_step() % options_.update_every == 0;
}

LossReport OffPolicyAgent::do_learn() {
  return update(buffer_.sample(options_.batch_size, streams_.sample));
}

Action OffPolicyAgent::random_action() {
  const Space& space = action_space();
  if (space.is_discrete()) {
    return {static_cast<double>(streams_.act.uniform_int(space.n()))};
  }
  Action a(space.dim());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = streams_.act.uniform(space.low()[i], space.high()[i]);
  }
  return a;
}

// ---------------------------------------------------------------- actor-critic

ActorCritic::ActorCritic(std::string algo_id, Space obs, Space act,
                         ActorCriticOptions options, std::uint64_t seed)
    : OffPolicyAgent(std::move(algo_id), std::move(obs), std::move(act),
                     options.off_policy, seed),
      ac_options_(options) {
  if (ac_options_.policy_delay < 1) throw ConfigError("policy_delay must be >= 1");
  if (action_space().is_discrete()) {
    throw ConfigError(this->algo_id() + " requires a continuous action space");
  }
}

void ActorCritic::set_components(std::unique_ptr<QActor> actor,
                                 std::unique_ptr<Critic> critic) {
  actor_ = std::move(actor);
  critic_ = std::move(critic);
}

Action ActorCritic::do_act(const Observation& state, ActMode mode) {
  if (mode == ActMode::kStochastic && warming_up()) return random_action();
  const ActorOutput out = actor_->act(state_row(state), mode, streams_.act);
  const auto v = out["action"].values();
  return Action(v.begin(), v.end());
}

LossReport ActorCritic::update(const Batch& batch) {
  LossReport report;
  const BellmanContext context = actor_->bootstrap_context(batch.next_states, streams_.update);
  report["loss_critic"] = critic_->update(batch, context);
  ++critic_updates_;
  if (critic_updates_ % ac_options_.policy_delay == 0) {
    report.merge(actor_->update(batch.states, *critic_, streams_.update));
    actor_->update_target(ac_options_.tau);
  }
  critic_->update_target();
  return report;
}

void ActorCritic::collect_state(StateDict& out) const {
  actor_->save(out);
  critic_->save(out);
  save_scalar(out, "counters.critic_updates", static_cast<double>(critic_updates_));
}

void ActorCritic::restore_state(const StateDict& in) {
  actor_->load(in);
  critic_->load(in);
  critic_updates_ = static_cast<std::int64_t>(load_scalar(in, "counters.critic_updates"));
}

}  // namespace oorl
