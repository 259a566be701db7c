#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "oorl/rng.hpp"
#include "oorl/tensor.hpp"

namespace oorl {

enum class Activation { kRelu, kTanh };
enum class Head {
  kPlain,
  // Final layer has 2 * output_dim units: mean then log-std.
  kGaussian,
  // tanh applied to the output.
  kDeterministicBounded,
  kQValue,
};

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

struct MLPSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 0;
  Activation activation = Activation::kRelu;
  Head head = Head::kPlain;
  // Multiplier on the final layer's initial weights. Defaults to 0.01 for
  // policy heads (gaussian, deterministic-bounded) and 1 otherwise.
  std::optional<double> final_layer_scale;

  std::size_t final_width() const {
    return head == Head::kGaussian ? 2 * output_dim : output_dim;
  }
};

// Affine layers x * W + b with W of shape [fan_in, fan_out].
class Mlp {
 public:
  Mlp() = default;
  // Weights uniform in +-1/sqrt(fan_in), zero biases.
  Mlp(MLPSpec spec, Rng& rng);

  Tensor forward(const Tensor& batch) const;

  const MLPSpec& spec() const { return spec_; }
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  // "layer{i}.weight" / "layer{i}.bias", aligned with parameters().
  std::vector<std::string> parameter_names() const;

  // Deep copy whose parameters do not require grad (target networks).
  Mlp frozen_copy() const;
  // Overwrites this network's parameter values with another's.
  void copy_from(const Mlp& other);

 private:
  MLPSpec spec_;
  std::vector<Tensor> params_;
};

// target <- tau * online + (1 - tau) * target, for every parameter.
void polyak_update(const std::vector<Tensor>& online, std::vector<Tensor>& target,
                   double tau);

struct Bounds {
  std::vector<double> low, high;
};

struct GaussianHeadOutput {
  Tensor action;       // tanh(u) rescaled to bounds, [n, d]
  Tensor raw_action;   // tanh(u), strictly inside (-1, 1)
  Tensor log_prob;     // [n, 1], density of raw_action on (-1, 1)^d
  Tensor pre_tanh;     // u
  Tensor mean_action;  // tanh(mean) rescaled to bounds
};

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kTanhEps = 1e-6;

// Reparameterized tanh-squashed diagonal Gaussian. log_std is clamped into
// [kLogStdMin, kLogStdMax]. Deterministic mode uses u = mean and reports the
// log-density at that point.
GaussianHeadOutput gaussian_sample(const Tensor& mean, const Tensor& log_std,
                                   Rng& rng, bool deterministic,
                                   const Bounds& bounds);

// Same transform with caller-supplied standard-normal noise ([n, d]); zero
// noise is the deterministic case.
GaussianHeadOutput gaussian_from_noise(const Tensor& mean, const Tensor& log_std,
                                       const std::vector<double>& noise,
                                       const Bounds& bounds);

// Log-density of given squashed actions raw_action in (-1, 1)^d under the
// policy (mean, log_std); differentiable in mean and log_std only. [n, 1].
Tensor squashed_gaussian_log_prob(const Tensor& mean, const Tensor& log_std,
                                  const Tensor& raw_action);

// Bounds of the unit box [-1, 1]^d.
Bounds unit_bounds(std::size_t d);

}  // namespace oorl
