#include "oorl/sac.hpp"

#include <cmath>

#include "oorl/error.hpp"

namespace oorl {

SACActor::SACActor(Mlp net, AdamOptions adam, AdamOptions alpha_adam, double initial_alpha,
                   double target_entropy)
    : QActor(std::move(net), adam, false), target_entropy_(target_entropy) {
  if (!(initial_alpha > 0.0)) throw ConfigError("initial_alpha must be positive");
  log_alpha_ = Tensor::scalar(std::log(initial_alpha), true);
  alpha_optim_ = Adam({log_alpha_}, alpha_adam);
}

double SACActor::alpha() const { return std::exp(log_alpha_.item()); }

ActorOutput SACActor::act(const Tensor& states, ActMode mode, Rng& rng) const {
  const Tensor out = net_.forward(states);
  const std::size_t d = out.cols() / 2;
  const GaussianHeadOutput g =
      gaussian_sample(slice_cols(out, 0, d), slice_cols(out, d, 2 * d), rng,
                      mode == ActMode::kDeterministic, unit_bounds(d));
  ActorOutput result;
  result.set("action", g.action);
  result.set("log_prob", g.log_prob);
  result.set("mean_action", g.mean_action);
  return result;
}

ActorLoss SACActor::loss(const Tensor& states, const Critic& critic, Rng& rng) const {
  ActorOutput out = act(states, ActMode::kStochastic, rng);
  const Tensor q = critic.q_reduced(states, out["action"]);
  const Tensor loss = mean(out["log_prob"] * alpha() - q);
  return {loss, out};
}

BellmanContext SACActor::bootstrap_context(const Tensor& next_states, Rng& rng) const {
  const ActorOutput out = act(next_states, ActMode::kStochastic, rng);
  BellmanContext ctx;
  ctx.set("next_action", out["action"].detach());
  ctx.set("next_log_prob", out["log_prob"].detach());
  ctx.set("alpha", Tensor::scalar(alpha()));
  return ctx;
}

Tensor SACActor::temperature_loss(const Tensor& log_prob) const {
  const double m = mean(log_prob.detach() + target_entropy_).item();
  return log_alpha_ * (-m);
}

LossReport SACActor::update(const Tensor& states, const Critic& critic, Rng& rng) {
  const double alpha_used = alpha();
  const ActorLoss l = loss(states, critic, rng);
  const double actor_value = l.loss.item();
  const Tensor log_prob = l.output["log_prob"].detach();
  apply(l.loss);

  const Tensor t_loss = temperature_loss(log_prob);
  const double alpha_value = t_loss.item();
  alpha_optim_.step(backward(t_loss, std::vector<Tensor>{log_alpha_}));
  return {{"loss_actor", actor_value}, {"loss_alpha", alpha_value}, {"alpha", alpha_used}};
}

void SACActor::save(StateDict& out) const {
  Actor::save(out);
  save_scalar(out, "log_alpha", log_alpha_.item());
  save_adam(out, "optim.alpha", alpha_optim_);
}

void SACActor::load(const StateDict& in) {
  Actor::load(in);
  log_alpha_.mutable_values()[0] = load_scalar(in, "log_alpha");
  load_adam(in, "optim.alpha", alpha_optim_);
}

Tensor SACCritic::get_bellman_target(const Batch& batch,
                                     const BellmanContext& context) const {
  const Tensor& next_action = context["next_action"];
  const Tensor& log_prob = context["next_log_prob"];
  const double alpha = context["alpha"].item();
  const Tensor target_reduced = this->target_reduced(batch.next_states, next_action);
  const Tensor q_target = target_reduced - log_prob * alpha;
  return bootstrap(batch, q_target);
}

SAC::SAC(const Space& obs, const Space& act, const SACOptions& options, std::uint64_t seed)
    : SAC("sac", obs, act, options, seed) {
  Mlp net = make_policy_net();
  auto actor = std::make_unique<SACActor>(std::move(net), actor_adam(), alpha_adam(),
                                          options_.initial_alpha, target_entropy());
  auto critic = std::make_unique<SACCritic>(critic_options(), streams_.init);
  set_components(std::move(actor), std::move(critic));
}

SAC::SAC(std::string algo_id, const Space& obs, const Space& act, const SACOptions& options,
         std::uint64_t seed)
    : ActorCritic(std::move(algo_id), obs, act, options.ac, seed), options_(options) {}

Mlp SAC::make_policy_net() {
  return Mlp({.input_dim = observation_space().dim(),
              .hidden = options_.actor_hidden,
              .output_dim = action_space().dim(),
              .activation = options_.activation,
              .head = Head::kGaussian},
             streams_.init);
}

CriticOptions SAC::critic_options() const {
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
  return c;
}

double SAC::target_entropy() const {
  return options_.target_entropy.value_or(-static_cast<double>(action_space().dim()));
}

}  // namespace oorl
