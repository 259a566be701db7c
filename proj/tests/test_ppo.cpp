#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "oorl/error.hpp"
#include "oorl/grad_check.hpp"
#include "oorl/ppo.hpp"
#include "support/fixtures.hpp"

using namespace oorl;
using namespace oorl::testing;

namespace {

Tensor column(std::vector<double> v, bool requires_grad = false) {
  const std::size_t n = v.size();
  return Tensor::matrix(n, 1, std::move(v), requires_grad);
}

PPOOptions small_options() {
  PPOOptions o;
  o.actor_hidden = o.critic_hidden = {8};
  o.rollout_length = 16;
  o.minibatches = 4;
  o.epochs = 2;
  return o;
}

}  // namespace

TEST_CASE("surrogate at ratio one is minus the mean advantage") {
  const Tensor lp = column({-0.3, -1.2, -2.0});
  const Tensor adv = column({1.0, -2.0, 0.5});
  CHECK(ppo_policy_loss(lp, lp, adv, 0.2).item() == doctest::Approx(-(-0.5 / 3.0)));
}

TEST_CASE("surrogate matches a brute-force evaluation") {
  const std::vector<double> new_lp{0.1, -0.5, 0.4}, old_lp{-0.2, -0.3, 0.45},
      adv{1.5, -0.7, -2.0};
  const double eps = 0.2;
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double rho = std::exp(new_lp[i] - old_lp[i]);
    const double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps);
    total += std::min(rho * adv[i], clipped * adv[i]);
  }
  const double got = ppo_policy_loss(column(new_lp), column(old_lp), column(adv), eps).item();
  CHECK(std::abs(got - (-total / 3.0)) < 1e-12);
}

TEST_CASE("clipped plateau has zero gradient") {
  // Positive advantage above 1 + eps, negative advantage below 1 - eps.
  const Tensor new_lp = column({0.5, -0.5}, true);
  const Tensor old_lp = column({0.0, 0.0});
  const GradientMap g = backward(ppo_policy_loss(new_lp, old_lp, column({1.0, -1.0}), 0.2));
  CHECK(g.at(new_lp) == std::vector<double>{0.0, 0.0});

  const Tensor inside = column({0.05, -0.05}, true);
  const GradientMap h = backward(ppo_policy_loss(inside, old_lp, column({1.0, -1.0}), 0.2));
  CHECK(h.at(inside)[0] != 0.0);
  CHECK(h.at(inside)[1] != 0.0);
}

TEST_CASE("unbounded clip gives the unclipped policy gradient") {
  Rng rng(1);
  for (const Space& act : {Space::discrete(3), Space::box({-1, -1}, {1, 1})}) {
    PPOActor actor(Space::box({-1, -1}, {1, 1}), act, small_options(), rng);
    Rng data(2);
    std::vector<double> s(20);
    for (double& v : s) v = data.uniform(-1, 1);
    const Tensor states = Tensor::matrix(10, 2, s);
    const ActorOutput out = actor.act(states, ActMode::kStochastic, rng);
    std::vector<double> old(10), adv(10);
    for (std::size_t i = 0; i < 10; ++i) {
      old[i] = out["log_prob"].values()[i] + 0.3 * data.normal();
      adv[i] = data.normal();
    }
    const std::vector<Tensor> params = actor.parameters();
    const Tensor lp = actor.log_prob(states, out["action"]);
    const GradientMap clipped =
        backward(ppo_policy_loss(lp, column(old), column(adv), 1e9), params);
    const Tensor lp2 = actor.log_prob(states, out["action"]);
    const GradientMap plain = backward(-mean(exp(lp2 - column(old)) * column(adv)), params);
    for (const Tensor& p : params) {
      for (std::size_t k = 0; k < p.numel(); ++k) {
        const double a = clipped.at(p)[k], b = plain.at(p)[k];
        CHECK(std::abs(a - b) <= 1e-6 * std::max(std::abs(b), 1e-12));
      }
    }
  }
}

TEST_CASE("advantage normalization") {
  const std::vector<double> a{1.0, 2.0, 3.0, 6.0};
  const auto z = normalize_advantages(a);
  double m = 0.0, v = 0.0;
  for (double x : z) m += x / 4.0;
  for (double x : z) v += (x - m) * (x - m) / 4.0;
  CHECK(std::abs(m) < 1e-12);
  CHECK(std::abs(v - 1.0) < 1e-6);
  const auto flat = normalize_advantages(std::vector<double>{2.0, 2.0});
  CHECK(flat == std::vector<double>{0.0, 0.0});
}

TEST_CASE("PPO policies: log-probabilities agree with sampling") {
  Rng rng(3);
  PPOActor cat(Space::box({-1}, {1}), Space::discrete(4), small_options(), rng);
  const Tensor s = Tensor::matrix(3, 1, {-0.5, 0.0, 0.7});
  const ActorOutput out = cat.act(s, ActMode::kStochastic, rng);
  CHECK(values_of(cat.log_prob(s, out["action"])) == values_of(out["log_prob"]));
  const Tensor h_all = cat.entropy(s);
  for (double h : h_all.values()) CHECK(h <= std::log(4.0) + 1e-12);

  PPOActor box(Space::box({-1}, {1}), Space::box({-1, -1}, {1, 1}), small_options(), rng);
  const ActorOutput b = box.act(s, ActMode::kStochastic, rng);
  const auto recomputed = values_of(box.log_prob(s, b["action"]));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(recomputed[i] - b["log_prob"].values()[i]) < 1e-6);
    for (std::size_t d = 0; d < 2; ++d) CHECK(std::abs(b["action"].at(i, d)) < 1.0);
  }
  // Initial log_std is zero: entropy of a unit Gaussian per dimension.
  CHECK(box.entropy(s).values()[0] == doctest::Approx(2.0 * 0.5 * std::log(2 * M_PI * M_E)));
}

TEST_CASE("PPO collects a rollout, then learns and clears it") {
  PPO agent(Space::box({-1, -1}, {1, 1}), Space::discrete(2), small_options(), 4);
  Rng data(1);
  for (int i = 0; i < 16; ++i) {
    CHECK_FALSE(agent.learn().has_value());
    const Observation s{data.uniform(-1, 1), data.uniform(-1, 1)};
    agent.store(transition(s, agent.act(s, ActMode::kStochastic), 1.0, s, i == 9, i == 15));
  }
  const auto r = agent.learn();
  REQUIRE(r.has_value());
  CHECK(r->size() == 3);
  CHECK(r->count("loss_actor") == 1);
  CHECK(r->count("loss_critic") == 1);
  CHECK(r->count("entropy") == 1);
  CHECK(agent.rollout().size() == 0);
  CHECK_FALSE(agent.learn().has_value());

  PPOOptions bad = small_options();
  bad.minibatches = 32;
  CHECK_THROWS_AS(PPO(Space::box({-1}, {1}), Space::discrete(2), bad, 0), ConfigError);
}

TEST_CASE("PPO is deterministic for a fixed seed") {
  auto run = [](std::uint64_t seed) {
    PPO agent(Space::box({-1}, {1}), Space::box({-2}, {2}), small_options(), seed);
    Rng data(0);
    LossReport last;
    for (int i = 0; i < 32; ++i) {
      const Observation s{data.uniform(-1, 1)};
      agent.store(transition(s, agent.act(s, ActMode::kStochastic), data.normal(), s));
      if (auto r = agent.learn()) last = *r;
    }
    return last;
  };
  CHECK(run(5) == run(5));
  CHECK(run(5) != run(6));
}

TEST_CASE("PPO losses pass grad_check") {
  Rng rng(7);
  PPOOptions o = small_options();
  PPOActor actor(Space::box({-1, -1}, {1, 1}), Space::box({-1}, {1}), o, rng);
  const Tensor s0 = Tensor::matrix(4, 2, {0.1, 0.2, -0.4, 0.3, 0.9, -0.8, 0.0, 0.5});
  const Tensor a = actor.act(s0, ActMode::kStochastic, rng)["action"];
  const Tensor old = column({-0.1, 0.2, 0.0, -0.3});
  const Tensor adv = column({1.0, -0.5, 0.3, 2.0});
  auto f = [&](const std::vector<Tensor>& in) {
    return ppo_policy_loss(actor.log_prob(in[0], a), old, adv, 0.2) - 0.01 * mean(actor.entropy(in[0]));
  };
  CHECK(grad_check(f, {s0}).passed);

  ValueFunction value({.input_dim = 2, .hidden = {8}, .output_dim = 1,
                       .activation = Activation::kTanh},
                      {}, 0.5, rng);
  auto g = [&](const std::vector<Tensor>& in) {
    return mean(square(value.value(in[0]) - column({1, 2, 3, 4})));
  };
  CHECK(grad_check(g, {s0}).passed);
}
