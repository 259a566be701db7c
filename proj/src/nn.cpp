#include "oorl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oorl {

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw ShapeError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

Mlp::Mlp(MLPSpec spec, Rng& rng) : spec_(std::move(spec)) {
  if (spec_.input_dim == 0 || spec_.output_dim == 0) {
    throw ShapeError("mlp: input and output widths must be >= 1");
  }
  std::vector<std::size_t> widths{spec_.input_dim};
  for (std::size_t h : spec_.hidden) {
    if (h == 0) throw ShapeError("mlp: zero-width hidden layer");
    widths.push_back(h);
  }
  widths.push_back(spec_.final_width());

  const bool policy_head =
      spec_.head == Head::kGaussian || spec_.head == Head::kDeterministicBounded;
  const double final_scale =
      spec_.final_layer_scale.value_or(policy_head ? 0.01 : 1.0);

  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l], fan_out = widths[l + 1];
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    if (l + 2 == widths.size()) bound *= final_scale;
    std::vector<double> w(fan_in * fan_out);
    for (double& x : w) x = rng.uniform(-bound, bound);
    params_.push_back(Tensor::matrix(fan_in, fan_out, std::move(w), true));
    params_.push_back(Tensor::zeros(Shape::vector(fan_out), true));
  }
}

Tensor Mlp::forward(const Tensor& batch) const {
  if (batch.shape().rank() != 2 || batch.cols() != spec_.input_dim) {
    throw ShapeError("mlp: expected input of width " +
                     std::to_string(spec_.input_dim) + ", got " +
                     batch.shape().str());
  }
  Tensor h = batch;
  const std::size_t layers = params_.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    h = matmul(h, params_[2 * l]) + params_[2 * l + 1];
    if (l + 1 < layers) {
      h = spec_.activation == Activation::kRelu ? relu(h) : tanh(h);
    }
  }
  if (spec_.head == Head::kDeterministicBounded) h = tanh(h);
  return h;
}

std::vector<std::string> Mlp::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < params_.size() / 2; ++l) {
    names.push_back("layer" + std::to_string(l) + ".weight");
    names.push_back("layer" + std::to_string(l) + ".bias");
  }
  return names;
}

Mlp Mlp::frozen_copy() const {
  Mlp copy;
  copy.spec_ = spec_;
  for (const Tensor& p : params_) copy.params_.push_back(p.clone(false));
  return copy;
}

void Mlp::copy_from(const Mlp& other) {
  if (other.params_.size() != params_.size()) {
    throw ShapeError("mlp: copy between different architectures");
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (other.params_[k].shape() != params_[k].shape()) {
      throw ShapeError("mlp: copy between different architectures");
    }
    auto src = other.params_[k].values();
    auto dst = params_[k].mutable_values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

void polyak_update(const std::vector<Tensor>& online, std::vector<Tensor>& target,
                   double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw ShapeError("polyak_update: tau must lie in [0, 1]");
  }
  if (online.size() != target.size()) {
    throw ShapeError("polyak_update: parameter count mismatch");
  }
  for (std::size_t k = 0; k < online.size(); ++k) {
    if (online[k].shape() != target[k].shape()) {
      throw ShapeError("polyak_update: shape mismatch " +
                       online[k].shape().str() + " vs " +
                       target[k].shape().str());
    }
  }
  for (std::size_t k = 0; k < online.size(); ++k) {
    auto src = online[k].values();
    auto dst = target[k].mutable_values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = tau * src[i] + (1.0 - tau) * dst[i];
    }
  }
}

namespace {

Tensor rescale(const Tensor& unit, const Bounds& bounds) {
  const std::size_t d = unit.cols();
  if (bounds.low.size() != d || bounds.high.size() != d) {
    throw ShapeError("gaussian_sample: bounds dimension mismatch");
  }
  std::vector<double> half(d), mid(d);
  for (std::size_t j = 0; j < d; ++j) {
    half[j] = 0.5 * (bounds.high[j] - bounds.low[j]);
    mid[j] = 0.5 * (bounds.high[j] + bounds.low[j]);
  }
  return unit * Tensor::vector(half) + Tensor::vector(mid);
}

}  // namespace

Bounds unit_bounds(std::size_t d) {
  return {std::vector<double>(d, -1.0), std::vector<double>(d, 1.0)};
}

GaussianHeadOutput gaussian_sample(const Tensor& mean, const Tensor& log_std,
                                   Rng& rng, bool deterministic,
                                   const Bounds& bounds) {
  std::vector<double> eps(mean.numel(), 0.0);
  if (!deterministic) {
    for (double& e : eps) e = rng.normal();
  }
  return gaussian_from_noise(mean, log_std, eps, bounds);
}

GaussianHeadOutput gaussian_from_noise(const Tensor& mean, const Tensor& log_std,
                                       const std::vector<double>& eps,
                                       const Bounds& bounds) {
  if (mean.shape() != log_std.shape() || mean.shape().rank() != 2) {
    throw ShapeError("gaussian_sample: mean/log_std shape mismatch");
  }
  if (eps.size() != mean.numel()) {
    throw ShapeError("gaussian_sample: noise size mismatch");
  }
  const std::size_t n = mean.rows(), d = mean.cols();
  const Tensor ls = clamp(log_std, kLogStdMin, kLogStdMax);
  const bool deterministic =
      std::all_of(eps.begin(), eps.end(), [](double e) { return e == 0.0; });
  const Tensor u =
      deterministic ? mean : mean + exp(ls) * Tensor::matrix(n, d, eps);

  // Normal log-density written in terms of the standardized noise.
  std::vector<double> half_sq(n * d);
  for (std::size_t i = 0; i < eps.size(); ++i) half_sq[i] = 0.5 * eps[i] * eps[i];
  const double log_sqrt_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const Tensor normal_logpdf =
      (-(ls + Tensor::matrix(n, d, half_sq))) - log_sqrt_2pi;

  const Tensor t = tanh(u);
  const Tensor correction = log(add_scalar(-square(t), 1.0 + kTanhEps));
  const Tensor log_prob = sum(normal_logpdf - correction, 1);

  constexpr double kEdge = 1.0 - 1e-12;
  const Tensor raw = clamp(t, -kEdge, kEdge);

  GaussianHeadOutput out;
  out.pre_tanh = u;
  out.raw_action = raw;
  out.action = rescale(raw, bounds);
  out.log_prob = log_prob;
  out.mean_action = rescale(tanh(mean), bounds);
  return out;
}

Tensor squashed_gaussian_log_prob(const Tensor& mean, const Tensor& log_std,
                                  const Tensor& raw_action) {
  if (mean.shape() != log_std.shape() || mean.shape() != raw_action.shape() ||
      mean.shape().rank() != 2) {
    throw ShapeError("squashed_gaussian_log_prob: shape mismatch");
  }
  constexpr double kEdge = 1.0 - 1e-6;
  const std::size_t n = mean.rows(), d = mean.cols();
  std::vector<double> u(n * d), correction(n * d);
  const auto a = raw_action.values();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = std::clamp(a[i], -kEdge, kEdge);
    u[i] = std::atanh(r);
    const double t = std::tanh(u[i]);
    correction[i] = std::log(1.0 - t * t + kTanhEps);
  }
  const Tensor ls = clamp(log_std, kLogStdMin, kLogStdMax);
  const Tensor z = (Tensor::matrix(n, d, u) - mean) * exp(-ls);
  const double log_sqrt_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const Tensor normal_logpdf = (-(ls + 0.5 * square(z))) - log_sqrt_2pi;
  return sum(normal_logpdf - Tensor::matrix(n, d, correction), 1);
}

}  // namespace oorl
