#include <cmath>
#include <deque>
#include <vector>

#include "doctest.h"
#include "oorl/buffer.hpp"
#include "oorl/error.hpp"
#include "support/oracles.hpp"

using namespace oorl;
using oorl::testing::gae_brute_force;

namespace {

Transition make(double k, std::size_t od = 2) {
  Transition t;
  t.state.assign(od, k);
  t.action = {k * 0.1};
  t.reward = k;
  t.next_state.assign(od, k + 1);
  t.terminated = static_cast<long>(k) % 3 == 0;
  return t;
}

}  // namespace

TEST_CASE("replay push and FIFO eviction") {
  ReplayBuffer buf(5);
  for (int k = 0; k < 3; ++k) buf.push(make(k));
  CHECK(buf.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(buf.at(k).reward == k);

  ReplayBuffer ring(5);
  for (int k = 0; k < 6; ++k) ring.push(make(k));
  CHECK(ring.size() == 5);
  CHECK(ring.at(0).reward == 1.0);
  for (int k = 6; k < 9; ++k) ring.push(make(k));
  for (int i = 0; i < 5; ++i) CHECK(ring.at(i).reward == 4 + i);
}

TEST_CASE("replay rejects dimension changes") {
  ReplayBuffer buf(4);
  buf.push(make(1));
  CHECK_THROWS_AS(buf.push(make(1, 3)), ShapeError);
}

TEST_CASE("replay matches a naive list model") {
  Rng rng(4);
  ReplayBuffer buf(17);
  std::deque<double> model;
  for (int op = 0; op < 1000; ++op) {
    const double k = static_cast<double>(op);
    buf.push(make(k));
    model.push_back(k);
    if (model.size() > 17) model.pop_front();
    REQUIRE(buf.size() == model.size());
    if (rng.uniform() < 0.1) {
      for (std::size_t i = 0; i < model.size(); ++i) CHECK(buf.at(i).reward == model[i]);
    }
  }
}

TEST_CASE("replay sampling") {
  Rng rng(1);
  ReplayBuffer empty(3);
  CHECK_THROWS_AS(empty.sample(2, rng), ShapeError);

  ReplayBuffer one(3);
  one.push(make(7));
  const Batch b = one.sample(4, rng);
  CHECK(b.size() == 4);
  for (double r : b.rewards.values()) CHECK(r == 7.0);
  CHECK(b.states.shape() == Shape::matrix(4, 2));

  ReplayBuffer buf(10);
  for (int k = 0; k < 10; ++k) buf.push(make(k));
  Rng a(3), c(3);
  const Batch x = buf.sample(32, a), y = buf.sample(32, c);
  CHECK(std::vector<double>(x.rewards.values().begin(), x.rewards.values().end()) ==
        std::vector<double>(y.rewards.values().begin(), y.rewards.values().end()));
}

TEST_CASE("replay sampling is uniform") {
  ReplayBuffer buf(10);
  for (int k = 0; k < 10; ++k) buf.push(make(k));
  Rng rng(2024);
  std::vector<int> counts(10, 0);
  const int draws = 100000;
  for (int i = 0; i < draws / 1000; ++i) {
    const Batch b = buf.sample(1000, rng);
    for (double r : b.rewards.values()) ++counts[static_cast<int>(r)];
  }
  // Binomial(1e5, 0.1): sigma of the frequency is sqrt(0.09 / 1e5).
  const double sigma = std::sqrt(0.1 * 0.9 / draws);
  for (int c : counts) CHECK(std::abs(c / double(draws) - 0.1) < 3 * sigma);
}

TEST_CASE("gae special cases") {
  const std::vector<double> r{1.0, 0.5, -0.2, 2.0};
  const std::vector<double> v{0.3, 0.1, 0.7, -0.4};
  const std::vector<unsigned char> none(4, 0), term{0, 0, 0, 1};

  SUBCASE("lambda zero gives one-step TD errors") {
    const auto out = compute_gae(r, v, none, none, 0.9, 0.99, 0.0);
    for (std::size_t t = 0; t < 4; ++t) {
      const double next = t + 1 < 4 ? v[t + 1] : 0.9;
      CHECK(out.advantages[t] == doctest::Approx(r[t] + 0.99 * next - v[t]).epsilon(1e-15));
      CHECK(out.returns[t] == doctest::Approx(out.advantages[t] + v[t]).epsilon(1e-15));
    }
  }
  SUBCASE("lambda one, gamma one telescopes to reward-to-go") {
    const auto out = compute_gae(r, v, term, none, 123.0, 1.0, 1.0);
    for (std::size_t t = 0; t < 4; ++t) {
      double to_go = 0.0;
      for (std::size_t k = t; k < 4; ++k) to_go += r[k];
      CHECK(out.advantages[t] == doctest::Approx(to_go - v[t]).epsilon(1e-14));
    }
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(compute_gae(r, std::vector<double>{1.0}, none, none, 0, 0.9, 0.9),
                    ShapeError);
  }
}

TEST_CASE("gae matches the brute-force weighted sum") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(10);
    std::vector<double> r(n), v(n);
    std::vector<unsigned char> term(n), trunc(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = rng.uniform(-1, 1);
      v[i] = rng.uniform(-1, 1);
      term[i] = rng.uniform() < 0.2;
    }
    const double boot = rng.uniform(-1, 1);
    const double gamma = rng.uniform(0.5, 1.0), lam = rng.uniform(0.0, 1.0);
    const auto out = compute_gae(r, v, term, trunc, boot, gamma, lam);
    const auto ref = gae_brute_force(r, v, term, boot, gamma, lam);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(out.advantages[i] - ref[i]) < 1e-12);
  }
}

TEST_CASE("gae cuts the recursion at mid-buffer truncation") {
  const std::vector<double> r{1.0, 1.0, 1.0};
  const std::vector<double> v{0.5, 0.5, 0.5};
  const std::vector<unsigned char> term(3, 0), trunc{1, 0, 0};
  const std::vector<double> next_v{2.0, 0.5, 0.5};
  CHECK_THROWS_AS(compute_gae(r, v, term, trunc, 0.0, 0.9, 0.9), ShapeError);
  const auto out = compute_gae(r, v, term, trunc, 0.25, 0.9, 0.9, next_v);
  CHECK(out.advantages[0] == doctest::Approx(1.0 + 0.9 * 2.0 - 0.5).epsilon(1e-15));
}

TEST_CASE("rollout buffer finalization") {
  RolloutBuffer buf;
  for (int k = 0; k < 4; ++k) buf.push(make(k + 1));
  CHECK(buf.size() == 4);
  CHECK_THROWS_AS(buf.advantages(), GraphError);
  const std::vector<double> values{0.1, 0.2, 0.3, 0.4};
  buf.finalize(values, {-1, -1, -1, -1}, {0.2, 0.3, 0.4, 0.9}, 0.99, 0.95);
  CHECK(buf.finalized());
  CHECK(buf.values() == values);
  const auto a = buf.advantages();
  // Step 3 (reward 3) is terminal in make().
  CHECK(a[2] == doctest::Approx(3.0 - 0.3).epsilon(1e-15));
  buf.clear();
  CHECK(buf.size() == 0);
  CHECK_FALSE(buf.finalized());
}
