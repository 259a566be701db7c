#include "oorl/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "oorl/error.hpp"

namespace oorl {

// ---- Space -----------------------------------------------------------------

Space Space::discrete(std::size_t n) {
  if (n < 2) throw EnvError("discrete space needs n >= 2");
  Space s;
  s.discrete_ = true;
  s.n_ = n;
  return s;
}

Space Space::box(std::vector<double> low, std::vector<double> high) {
  if (low.empty() || low.size() != high.size()) {
    throw EnvError("box space: low/high size mismatch");
  }
  for (std::size_t i = 0; i < low.size(); ++i) {
    if (!(low[i] < high[i])) throw EnvError("box space: low must be < high");
  }
  Space s;
  s.low_ = std::move(low);
  s.high_ = std::move(high);
  return s;
}

bool Space::contains(const Action& a) const {
  if (discrete_) {
    if (a.size() != 1) return false;
    const double x = a[0];
    return x >= 0.0 && x < static_cast<double>(n_) && x == std::floor(x);
  }
  if (a.size() != low_.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] >= low_[i] && a[i] <= high_[i])) return false;
  }
  return true;
}

// ---- CartPole --------------------------------------------------------------

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

CartPole::CartPole()
    : obs_space_(Space::box(
          {-2 * kXThreshold, -kInf, -2 * kThetaThreshold, -kInf},
          {2 * kXThreshold, kInf, 2 * kThetaThreshold, kInf})),
      act_space_(Space::discrete(2)),
      rng_(0, "cartpole") {}

Observation CartPole::reset(std::optional<std::uint64_t> seed) {
  if (seed) rng_ = Rng(*seed, "cartpole");
  for (double& s : state_) s = rng_.uniform(-0.05, 0.05);
  needs_reset_ = false;
  return {state_.begin(), state_.end()};
}

void CartPole::set_state(const std::array<double, 4>& s) {
  state_ = s;
  needs_reset_ = false;
}

StepResult CartPole::step(const Action& action) {
  if (!act_space_.contains(action)) throw EnvError("cartpole: invalid action");
  if (needs_reset_) throw EnvError("cartpole: step() after termination; call reset()");

  auto [x, x_dot, theta, theta_dot] = state_;
  const double force = action[0] == 1.0 ? kForceMag : -kForceMag;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double temp =
      (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (kHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
  const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

  x += kTau * x_dot;
  x_dot += kTau * x_acc;
  theta += kTau * theta_dot;
  theta_dot += kTau * theta_acc;
  state_ = {x, x_dot, theta, theta_dot};

  StepResult r;
  r.observation = {state_.begin(), state_.end()};
  r.terminated = x < -kXThreshold || x > kXThreshold ||
                 theta < -kThetaThreshold || theta > kThetaThreshold;
  r.reward = 1.0;
  needs_reset_ = r.terminated;
  return r;
}

// ---- Pendulum --------------------------------------------------------------

double angle_normalize(double x) {
  constexpr double pi = std::numbers::pi;
  double y = std::fmod(x + pi, 2.0 * pi);
  if (y < 0.0) y += 2.0 * pi;
  return y - pi;
}

Pendulum::Pendulum()
    : obs_space_(Space::box({-1.0, -1.0, -kMaxSpeed}, {1.0, 1.0, kMaxSpeed})),
      act_space_(Space::box({-kMaxTorque}, {kMaxTorque})),
      rng_(0, "pendulum") {}

Observation Pendulum::observation() const {
  return {std::cos(theta_), std::sin(theta_), theta_dot_};
}

Observation Pendulum::reset(std::optional<std::uint64_t> seed) {
  if (seed) rng_ = Rng(*seed, "pendulum");
  theta_ = rng_.uniform(-std::numbers::pi, std::numbers::pi);
  theta_dot_ = rng_.uniform(-1.0, 1.0);
  needs_reset_ = false;
  return observation();
}

void Pendulum::set_state(double theta, double theta_dot) {
  theta_ = theta;
  theta_dot_ = theta_dot;
  needs_reset_ = false;
}

StepResult Pendulum::step(const Action& action) {
  if (!act_space_.contains(action)) throw EnvError("pendulum: invalid action");
  if (needs_reset_) throw EnvError("pendulum: step() before reset()");

  const double u = std::clamp(action[0], -kMaxTorque, kMaxTorque);
  const double th_n = angle_normalize(theta_);
  const double cost =
      th_n * th_n + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u;

  double new_theta_dot =
      theta_dot_ + (3.0 * kGravity / (2.0 * kLength) * std::sin(theta_) +
                    3.0 / (kMass * kLength * kLength) * u) *
                       kDt;
  new_theta_dot = std::clamp(new_theta_dot, -kMaxSpeed, kMaxSpeed);
  theta_ = theta_ + new_theta_dot * kDt;
  theta_dot_ = new_theta_dot;

  StepResult r;
  r.observation = observation();
  r.reward = -cost;
  return r;
}

// ---- wrappers --------------------------------------------------------------

TimeLimit::TimeLimit(std::unique_ptr<Env> inner, std::size_t max_steps)
    : inner_(std::move(inner)), max_steps_(max_steps) {
  if (max_steps_ < 1) throw EnvError("time limit must be >= 1");
}

Observation TimeLimit::reset(std::optional<std::uint64_t> seed) {
  elapsed_ = 0;
  return inner_->reset(seed);
}

StepResult TimeLimit::step(const Action& action) {
  StepResult r = inner_->step(action);
  ++elapsed_;
  if (elapsed_ >= max_steps_ && !r.terminated) r.truncated = true;
  return r;
}

ActionRescale::ActionRescale(std::unique_ptr<Env> inner)
    : inner_(std::move(inner)) {
  const Space& a = inner_->action_space();
  if (a.is_discrete()) {
    throw EnvError("action rescaling requires a box action space");
  }
  unit_space_ = Space::box(std::vector<double>(a.dim(), -1.0),
                           std::vector<double>(a.dim(), 1.0));
}

Action ActionRescale::to_inner(const Action& action) const {
  const Space& a = inner_->action_space();
  Action out(action.size());
  for (std::size_t i = 0; i < action.size(); ++i) {
    out[i] = a.low()[i] + 0.5 * (action[i] + 1.0) * (a.high()[i] - a.low()[i]);
  }
  return out;
}

StepResult ActionRescale::step(const Action& action) {
  if (!unit_space_.contains(action)) {
    throw EnvError("action outside [-1, 1]^d");
  }
  // Clip guards against floating-point spill past the endpoints.
  Action inner = to_inner(action);
  const Space& a = inner_->action_space();
  for (std::size_t i = 0; i < inner.size(); ++i) {
    inner[i] = std::clamp(inner[i], a.low()[i], a.high()[i]);
  }
  return inner_->step(inner);
}

// ---- registry --------------------------------------------------------------

bool is_known_env(const std::string& env_id) {
  return env_id == "cartpole" || env_id == "pendulum";
}

std::size_t default_time_limit(const std::string& env_id) {
  if (env_id == "cartpole") return 500;
  if (env_id == "pendulum") return 200;
  throw EnvError("unknown environment id '" + env_id + "'");
}

std::unique_ptr<Env> make_env(const std::string& env_id,
                              std::optional<std::size_t> max_steps) {
  std::unique_ptr<Env> env;
  if (env_id == "cartpole") {
    env = std::make_unique<CartPole>();
  } else if (env_id == "pendulum") {
    env = std::make_unique<ActionRescale>(std::make_unique<Pendulum>());
  } else {
    throw EnvError("unknown environment id '" + env_id + "'");
  }
  return std::make_unique<TimeLimit>(std::move(env),
                                     max_steps.value_or(default_time_limit(env_id)));
}

}  // namespace oorl
