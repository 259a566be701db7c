#pragma once

// Native classic-control environments behind a reset/step interface that
// follows the Gymnasium conventions (terminated vs truncated).

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oorl/rng.hpp"

namespace oorl {

using Observation = std::vector<double>;
// Continuous actions hold one value per dimension; discrete actions hold the
// index as a single value.
using Action = std::vector<double>;

class Space {
 public:
  static Space discrete(std::size_t n);
  static Space box(std::vector<double> low, std::vector<double> high);

  bool is_discrete() const { return discrete_; }
  std::size_t n() const { return n_; }
  const std::vector<double>& low() const { return low_; }
  const std::vector<double>& high() const { return high_; }
  // Width of the vector representation: 1 for discrete spaces.
  std::size_t dim() const { return discrete_ ? 1 : low_.size(); }
  bool contains(const Action& a) const;

 private:
  bool discrete_ = false;
  std::size_t n_ = 0;
  std::vector<double> low_, high_;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminated = false;  // MDP terminal: suppresses bootstrapping
  bool truncated = false;   // time limit: bootstrapping continues
};

class Env {
 public:
  virtual ~Env() = default;
  virtual const Space& observation_space() const = 0;
  virtual const Space& action_space() const = 0;
  // Seeding re-initializes the environment's generator; without a seed the
  // existing stream continues.
  virtual Observation reset(std::optional<std::uint64_t> seed = std::nullopt) = 0;
  virtual StepResult step(const Action& action) = 0;
  virtual std::string id() const = 0;
};

// Cart-pole balancing with explicit Euler integration.
class CartPole final : public Env {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kTotalMass = kMassCart + kMassPole;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kPoleMassLength = kMassPole * kHalfLength;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kThetaThreshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
  static constexpr double kXThreshold = 2.4;

  CartPole();
  const Space& observation_space() const override { return obs_space_; }
  const Space& action_space() const override { return act_space_; }
  Observation reset(std::optional<std::uint64_t> seed = std::nullopt) override;
  StepResult step(const Action& action) override;
  std::string id() const override { return "cartpole"; }

  // (x, x_dot, theta, theta_dot)
  const std::array<double, 4>& state() const { return state_; }
  void set_state(const std::array<double, 4>& s);

 private:
  Space obs_space_, act_space_;
  Rng rng_;
  std::array<double, 4> state_{};
  bool needs_reset_ = true;
};

// Torque-controlled pendulum with semi-implicit Euler integration.
class Pendulum final : public Env {
 public:
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;
  static constexpr double kDt = 0.05;
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;

  Pendulum();
  const Space& observation_space() const override { return obs_space_; }
  const Space& action_space() const override { return act_space_; }
  Observation reset(std::optional<std::uint64_t> seed = std::nullopt) override;
  StepResult step(const Action& action) override;
  std::string id() const override { return "pendulum"; }

  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }
  void set_state(double theta, double theta_dot);
  Observation observation() const;

 private:
  Space obs_space_, act_space_;
  Rng rng_;
  double theta_ = 0.0, theta_dot_ = 0.0;
  bool needs_reset_ = true;
};

// Wraps angles into [-pi, pi).
double angle_normalize(double x);

// Sets truncated (never terminated) once max_steps steps have elapsed.
class TimeLimit final : public Env {
 public:
  TimeLimit(std::unique_ptr<Env> inner, std::size_t max_steps);
  const Space& observation_space() const override {
    return inner_->observation_space();
  }
  const Space& action_space() const override { return inner_->action_space(); }
  Observation reset(std::optional<std::uint64_t> seed = std::nullopt) override;
  StepResult step(const Action& action) override;
  std::string id() const override { return inner_->id(); }

  std::size_t elapsed() const { return elapsed_; }
  Env& inner() { return *inner_; }

 private:
  std::unique_ptr<Env> inner_;
  std::size_t max_steps_;
  std::size_t elapsed_ = 0;
};

// Maps agent actions in [-1, 1]^d affinely onto the inner box.
class ActionRescale final : public Env {
 public:
  explicit ActionRescale(std::unique_ptr<Env> inner);
  const Space& observation_space() const override {
    return inner_->observation_space();
  }
  const Space& action_space() const override { return unit_space_; }
  Observation reset(std::optional<std::uint64_t> seed = std::nullopt) override {
    return inner_->reset(seed);
  }
  StepResult step(const Action& action) override;
  std::string id() const override { return inner_->id(); }

  Action to_inner(const Action& action) const;
  Env& inner() { return *inner_; }

 private:
  std::unique_ptr<Env> inner_;
  Space unit_space_;
};

std::size_t default_time_limit(const std::string& env_id);
bool is_known_env(const std::string& env_id);
// Registered id -> fully wrapped environment (rescaled actions for box
// spaces, then the reference time limit unless overridden).
std::unique_ptr<Env> make_env(const std::string& env_id,
                              std::optional<std::size_t> max_steps = std::nullopt);

}  // namespace oorl
