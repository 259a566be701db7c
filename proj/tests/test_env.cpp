#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oorl/env.hpp"
#include "oorl/error.hpp"

using namespace oorl;

TEST_CASE("seeded resets are reproducible") {
  for (const char* id : {"cartpole", "pendulum"}) {
    auto a = make_env(id);
    auto b = make_env(id);
    CHECK(a->reset(7) == b->reset(7));
    CHECK(a->reset(7) == a->reset(7));
  }
}

TEST_CASE("cartpole reset distribution") {
  CartPole env;
  env.reset(3);
  for (int i = 0; i < 200; ++i) {
    for (double x : env.reset()) CHECK((x >= -0.05 && x <= 0.05));
  }
}

TEST_CASE("pendulum reset distribution") {
  Pendulum env;
  env.reset(3);
  for (int i = 0; i < 200; ++i) {
    const Observation o = env.reset();
    CHECK(o.size() == 3);
    CHECK((env.theta() >= -std::numbers::pi && env.theta() <= std::numbers::pi));
    CHECK((env.theta_dot() >= -1.0 && env.theta_dot() <= 1.0));
    CHECK(o[0] == std::cos(env.theta()));
    CHECK(o[1] == std::sin(env.theta()));
    CHECK(o[2] == env.theta_dot());
  }
}

TEST_CASE("pendulum equilibrium") {
  Pendulum env;
  env.set_state(0.0, 0.0);
  const StepResult r = env.step({0.0});
  CHECK(r.reward == 0.0);
  CHECK(env.theta() == 0.0);
  CHECK(env.theta_dot() == 0.0);
  CHECK_FALSE(r.terminated);
}

TEST_CASE("pendulum worst-case cost") {
  Pendulum env;
  env.set_state(std::numbers::pi, 8.0);
  const double pi = std::numbers::pi;
  CHECK(env.step({2.0}).reward == doctest::Approx(-(pi * pi + 6.4 + 0.004)).epsilon(1e-14));
}

TEST_CASE("cartpole single Euler step from rest") {
  // Hand-integrated reference dynamics.
  const double g = 9.8, mc = 1.0, mp = 0.1, l = 0.5, f = 10.0, dt = 0.02;
  const double total = mc + mp;
  const double temp = f / total;
  const double theta_acc = (0.0 - temp) / (l * (4.0 / 3.0 - mp / total));
  const double x_acc = temp - mp * l * theta_acc / total;
  (void)g;

  CartPole env;
  env.set_state({0, 0, 0, 0});
  const StepResult r = env.step({1.0});
  CHECK(r.observation[0] == 0.0);
  CHECK(r.observation[1] == doctest::Approx(dt * x_acc).epsilon(1e-15));
  CHECK(r.observation[2] == 0.0);
  CHECK(r.observation[3] == doctest::Approx(dt * theta_acc).epsilon(1e-15));
  CHECK(r.reward == 1.0);
  CHECK_FALSE(r.terminated);

  env.set_state({0, 0, 0, 0});
  const StepResult left = env.step({0.0});
  CHECK(left.observation[1] == doctest::Approx(-dt * x_acc).epsilon(1e-15));
}

TEST_CASE("cartpole termination and errors") {
  CartPole env;
  env.set_state({2.39, 1.0, 0.0, 0.0});
  const StepResult r = env.step({1.0});
  CHECK(r.terminated);
  CHECK_THROWS_AS(env.step({1.0}), EnvError);
  env.reset(1);
  CHECK_THROWS_AS(env.step({2.0}), EnvError);
  CHECK_THROWS_AS(env.step({0.5}), EnvError);

  env.set_state({0.0, 0.0, 0.25, 0.0});
  CHECK(env.step({0.0}).terminated);
}

TEST_CASE("dynamics are a pure function of state and action") {
  Pendulum a, b;
  a.set_state(0.4, -1.3);
  b.reset(99);
  b.set_state(0.4, -1.3);
  CHECK(a.step({0.7}).observation == b.step({0.7}).observation);
}

TEST_CASE("time limit") {
  SUBCASE("pendulum truncates at 200") {
    auto env = make_env("pendulum");
    env->reset(0);
    StepResult r;
    for (int i = 0; i < 199; ++i) {
      r = env->step({0.0});
      CHECK_FALSE(r.truncated);
    }
    r = env->step({0.0});
    CHECK(r.truncated);
    CHECK_FALSE(r.terminated);
  }
  SUBCASE("termination wins over truncation") {
    auto env = make_env("cartpole");
    env->reset(0);
    StepResult r;
    int steps = 0;
    do {
      r = env->step({1.0});
      ++steps;
    } while (!r.terminated && steps < 500);
    CHECK(r.terminated);
    CHECK(steps < 500);
    CHECK_FALSE(r.truncated);
  }
  SUBCASE("reset clears the counter") {
    TimeLimit env(std::make_unique<Pendulum>(), 3);
    env.reset(0);
    env.step({0.0});
    env.step({0.0});
    env.reset();
    CHECK(env.elapsed() == 0);
    CHECK_FALSE(env.step({0.0}).truncated);
    CHECK_FALSE(env.step({0.0}).truncated);
    CHECK(env.step({0.0}).truncated);
  }
}

TEST_CASE("action rescale") {
  ActionRescale env(std::make_unique<Pendulum>());
  CHECK(env.to_inner({0.0})[0] == 0.0);
  CHECK(env.to_inner({1.0})[0] == 2.0);
  CHECK(env.to_inner({-1.0})[0] == -2.0);
  env.reset(0);
  CHECK_THROWS_AS(env.step({1.5}), EnvError);
  CHECK_THROWS_AS(ActionRescale(std::make_unique<CartPole>()), EnvError);
}

TEST_CASE("spaces") {
  CHECK_THROWS_AS(Space::discrete(1), EnvError);
  CHECK_THROWS_AS(Space::box({1.0}, {1.0}), EnvError);
  const Space d = Space::discrete(3);
  CHECK(d.contains({2.0}));
  CHECK_FALSE(d.contains({3.0}));
  CHECK_THROWS_AS(make_env("mountaincar"), EnvError);
}

TEST_CASE("pendulum energy drift with zero torque") {
  // Physical energy of a uniform rod, and the first-order modified energy that
  // velocity-first symplectic Euler conserves up to O(dt^2).
  const double dt = Pendulum::kDt;
  auto energy = [](double th, double thd) { return thd * thd / 6.0 + 5.0 * std::cos(th); };
  auto modified = [&](double th, double thd) {
    return energy(th, thd) + 0.5 * dt * 5.0 * thd * std::sin(th);
  };
  Pendulum env;
  env.reset(5);
  for (int episode = 0; episode < 20; ++episode) {
    env.reset();
    const double e_start = energy(env.theta(), env.theta_dot());
    int steps = 0;
    bool clipped = false;
    for (; steps < 200; ++steps) {
      const double m0 = modified(env.theta(), env.theta_dot());
      env.step({0.0});
      if (std::abs(env.theta_dot()) >= Pendulum::kMaxSpeed) {
        clipped = true;
        break;
      }
      CHECK(std::abs(modified(env.theta(), env.theta_dot()) - m0) < 0.05);
    }
    if (!clipped) {
      CHECK(std::abs(energy(env.theta(), env.theta_dot()) - e_start) / steps < 0.05);
    }
  }
}
