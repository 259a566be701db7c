#pragma once

// SAC extended with an ensemble-based exploration bonus. Relative to SAC the
// extension is: the DRNDBonus component, DRNDActor::loss,
// DRNDCritic::get_bellman_target, and the predictor update after each SAC
// update.

#include <cstdint>
#include <memory>
#include <vector>

#include "oorl/sac.hpp"

namespace oorl {

struct DRNDBonusOptions {
  std::size_t members = 3;
  std::size_t feature_dim = 32;
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::kRelu;
  AdamOptions adam{};
};

// M frozen random target networks and one trained predictor over (s, a).
class DRNDBonus {
 public:
  DRNDBonus(std::size_t input_dim, const DRNDBonusOptions& options, Rng rng);

  // Per-sample bonus [n, 1]: over the feature dimension, the mean of
  // (f_pred - mu)^2 + var_j f_j, where mu and var are the mean and
  // population variance of the M target features.
  Tensor bonus(const Tensor& states, const Tensor& actions) const;
  // One step on mean_i || f_pred(x_i) - f_{j_i}(x_i) ||^2 with j_i drawn
  // uniformly per sample. Returns the loss before the step.
  double update(const Batch& batch);
  // Same update with caller-chosen target indices.
  double update(const Tensor& states, const Tensor& actions,
                const std::vector<std::size_t>& target_index);

  std::size_t members() const { return targets_.size(); }
  const Mlp& target(std::size_t j) const { return targets_.at(j); }
  Mlp& target(std::size_t j) { return targets_.at(j); }
  const Mlp& predictor() const { return predictor_; }
  Mlp& predictor() { return predictor_; }

  void save(StateDict& out) const;
  void load(const StateDict& in);

 private:
  std::vector<Mlp> targets_;
  Mlp predictor_;
  Adam optim_;
  Rng rng_;
};

class DRNDActor : public SACActor {
 public:
  DRNDActor(Mlp net, AdamOptions adam, AdamOptions alpha_adam, double initial_alpha,
            double target_entropy, std::shared_ptr<const DRNDBonus> bonus_ensemble,
            double lambda_actor);

  ActorLoss loss(const Tensor& state, const Critic& critics, Rng& rng) const override;

 private:
  std::shared_ptr<const DRNDBonus> bonus_ensemble_;
  double lambda_actor_;
};

class DRNDCritic : public SACCritic {
 public:
  DRNDCritic(const CriticOptions& options, Rng& rng,
             std::shared_ptr<const DRNDBonus> bonus_ensemble, double lambda_critic);

  Tensor get_bellman_target(const Batch& batch, const BellmanContext& context) const override;

 private:
  std::shared_ptr<const DRNDBonus> bonus_ensemble_;
  double lambda_critic_;
};

struct DRNDOptions : SACOptions {
  double lambda_actor = 1.0;
  double lambda_critic = 1.0;
  DRNDBonusOptions bonus{};
};

class DRND : public SAC {
 public:
  DRND(const Space& obs, const Space& act, const DRNDOptions& options, std::uint64_t seed);

  // SAC update, then one predictor step; adds loss_bonus.
  LossReport update(const Batch& batch) override;

  const DRNDBonus& bonus() const { return *bonus_; }

 protected:
  void collect_state(StateDict& out) const override;
  void restore_state(const StateDict& in) override;

 private:
  std::shared_ptr<DRNDBonus> bonus_;
};

}  // namespace oorl
