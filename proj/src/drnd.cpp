#include "oorl/drnd.hpp"

#include "oorl/error.hpp"

namespace oorl {

DRNDBonus::DRNDBonus(std::size_t input_dim, const DRNDBonusOptions& options, Rng rng)
    : rng_(std::move(rng)) {
  if (options.members == 0 || options.feature_dim == 0) {
    throw ConfigError("bonus members and feature_dim must be positive");
  }
  const MLPSpec spec{.input_dim = input_dim,
                     .hidden = options.hidden,
                     .output_dim = options.feature_dim,
                     .activation = options.activation};
  for (std::size_t j = 0; j < options.members; ++j) {
    targets_.push_back(Mlp(spec, rng_).frozen_copy());
  }
  predictor_ = Mlp(spec, rng_);
  optim_ = Adam(predictor_.parameters(), options.adam);
}

Tensor DRNDBonus::bonus(const Tensor& states, const Tensor& actions) const {
  const Tensor x = concat_cols(states, actions);
  const double inv_m = 1.0 / static_cast<double>(targets_.size());
  std::vector<Tensor> features;
  features.reserve(targets_.size());
  for (const Mlp& t : targets_) features.push_back(t.forward(x));
  Tensor mu = features.front();
  for (std::size_t j = 1; j < features.size(); ++j) mu = mu + features[j];
  mu = mu * inv_m;
  Tensor var = square(features.front() - mu);
  for (std::size_t j = 1; j < features.size(); ++j) var = var + square(features[j] - mu);
  var = var * inv_m;
  return mean(square(predictor_.forward(x) - mu) + var, 1);
}

double DRNDBonus::update(const Batch& batch) {
  std::vector<std::size_t> index(batch.size());
  for (std::size_t& j : index) j = rng_.uniform_int(targets_.size());
  return update(batch.states, batch.actions, index);
}

double DRNDBonus::update(const Tensor& states, const Tensor& actions,
                         const std::vector<std::size_t>& target_index) {
  const std::size_t n = states.rows();
  if (target_index.size() != n) throw ShapeError("bonus update: index size mismatch");
  const Tensor x = concat_cols(states.detach(), actions.detach());
  std::vector<Tensor> features;
  for (const Mlp& t : targets_) features.push_back(t.forward(x));
  const std::size_t k = features.front().cols();
  std::vector<double> chosen(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    if (target_index[i] >= targets_.size()) throw ShapeError("bonus update: bad target index");
    const auto f = features[target_index[i]].values();
    std::copy(f.begin() + i * k, f.begin() + (i + 1) * k, chosen.begin() + i * k);
  }
  const Tensor err = predictor_.forward(x) - Tensor::matrix(n, k, std::move(chosen));
  const Tensor loss = mean(sum(square(err), 1));
  const double value = loss.item();
  optim_.step(backward(loss, predictor_.parameters()));
  return value;
}

void DRNDBonus::save(StateDict& out) const {
  for (std::size_t j = 0; j < targets_.size(); ++j) {
    save_mlp(out, "bonus.target." + std::to_string(j), targets_[j]);
  }
  save_mlp(out, "bonus.predictor", predictor_);
  save_adam(out, "optim.bonus", optim_);
}

void DRNDBonus::load(const StateDict& in) {
  for (std::size_t j = 0; j < targets_.size(); ++j) {
    load_mlp(in, "bonus.target." + std::to_string(j), targets_[j]);
  }
  load_mlp(in, "bonus.predictor", predictor_);
  load_adam(in, "optim.bonus", optim_);
}

DRNDActor::DRNDActor(Mlp net, AdamOptions adam, AdamOptions alpha_adam, double initial_alpha,
                     double target_entropy, std::shared_ptr<const DRNDBonus> bonus_ensemble,
                     double lambda_actor)
    : SACActor(std::move(net), adam, alpha_adam, initial_alpha, target_entropy),
      bonus_ensemble_(std::move(bonus_ensemble)),
      lambda_actor_(lambda_actor) {}

ActorLoss DRNDActor::loss(const Tensor& state, const Critic& critics, Rng& rng) const {
  auto [loss, act_dict] = SACActor::loss(state, critics, rng);
  const Tensor& action = act_dict["action"];
  const Tensor bonus = mean(bonus_ensemble_->bonus(state, action));
  return {loss + lambda_actor_ * bonus, act_dict};
}

DRNDCritic::DRNDCritic(const CriticOptions& options, Rng& rng,
                       std::shared_ptr<const DRNDBonus> bonus_ensemble, double lambda_critic)
    : SACCritic(options, rng),
      bonus_ensemble_(std::move(bonus_ensemble)),
      lambda_critic_(lambda_critic) {}

Tensor DRNDCritic::get_bellman_target(const Batch& batch,
                                      const BellmanContext& context) const {
  const Tensor& next_action = context["next_action"];
  const Tensor& log_prob = context["next_log_prob"];
  const double alpha = context["alpha"].item();
  const Tensor target_reduced = this->target_reduced(batch.next_states, next_action);
  const Tensor bonus = bonus_ensemble_->bonus(batch.next_states, next_action);
  const Tensor q_target = target_reduced - log_prob * alpha - lambda_critic_ * bonus;
  return bootstrap(batch, q_target);
}

DRND::DRND(const Space& obs, const Space& act, const DRNDOptions& options,
           std::uint64_t seed)
    : SAC("drnd", obs, act, options, seed) {
  bonus_ = std::make_shared<DRNDBonus>(obs.dim() + act.dim(), options.bonus, streams_.bonus);
  Mlp net = make_policy_net();
  auto actor = std::make_unique<DRNDActor>(std::move(net), actor_adam(), alpha_adam(),
                                           options.initial_alpha, target_entropy(), bonus_,
                                           options.lambda_actor);
  auto critic = std::make_unique<DRNDCritic>(critic_options(), streams_.init, bonus_,
                                             options.lambda_critic);
  set_components(std::move(actor), std::move(critic));
}

LossReport DRND::update(const Batch& batch) {
  LossReport report = SAC::update(batch);
  report["loss_bonus"] = bonus_->update(batch);
  return report;
}

void DRND::collect_state(StateDict& out) const {
  SAC::collect_state(out);
  bonus_->save(out);
}

void DRND::restore_state(const StateDict& in) {
  SAC::restore_state(in);
  bonus_->load(in);
}

}  // namespace oorl
