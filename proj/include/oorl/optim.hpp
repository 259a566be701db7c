#pragma once

#include <cstdint>
#include <vector>

#include "oorl/tensor.hpp"

namespace oorl {

struct AdamOptions {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. Parameters are updated in place through their leaf
// buffers; first/second moments mirror the parameter shapes.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Tensor> params, AdamOptions options);

  // Every parameter must have a gradient entry of matching size.
  void step(const GradientMap& grads);

  const std::vector<Tensor>& params() const { return params_; }
  const AdamOptions& options() const { return options_; }
  std::int64_t t() const { return t_; }
  const std::vector<std::vector<double>>& first_moment() const { return m_; }
  const std::vector<std::vector<double>>& second_moment() const { return v_; }

  // Restores moment buffers and step count (checkpoint loading).
  void restore(std::vector<std::vector<double>> m,
               std::vector<std::vector<double>> v, std::int64_t t);

 private:
  std::vector<Tensor> params_;
  AdamOptions options_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
};

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(GradientMap& grads, const std::vector<Tensor>& params,
                      double max_norm);

}  // namespace oorl
