#include "oorl/optim.hpp"

#include <cmath>

namespace oorl {

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const Tensor& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step(const GradientMap& grads) {
  for (const Tensor& p : params_) {
    if (!grads.contains(p)) throw GraphError("adam: missing gradient");
    if (grads.at(p).size() != p.numel()) {
      throw ShapeError("adam: gradient/parameter shape mismatch for " +
                       p.shape().str());
    }
  }
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = params_[k];
    const std::vector<double>& g = grads.at(p);
    auto w = p.mutable_values();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  }
}

void Adam::restore(std::vector<std::vector<double>> m,
                   std::vector<std::vector<double>> v, std::int64_t t) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw ShapeError("adam: moment count does not match parameters");
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (m[k].size() != params_[k].numel() || v[k].size() != params_[k].numel()) {
      throw ShapeError("adam: moment shape mismatch");
    }
  }
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

double clip_grad_norm(GradientMap& grads, const std::vector<Tensor>& params,
                      double max_norm) {
  double sq = 0.0;
  for (const Tensor& p : params) {
    for (double g : grads.at(p)) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (const Tensor& p : params) {
      for (double& g : grads.at(p)) g *= f;
    }
  }
  return norm;
}

}  // namespace oorl
