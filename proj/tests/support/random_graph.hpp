#pragma once

// Random differentiable computation graphs over the full op set, used by
// the gradient-check suites.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "oorl/rng.hpp"
#include "oorl/tensor.hpp"

namespace oorl::testing {

class RandomGraph {
 public:
  static constexpr std::size_t kRows = 3, kIn = 3, kCols = 4;

  explicit RandomGraph(std::uint64_t seed) {
    Rng rng(seed, "graph");
    auto rand = [&rng](std::size_t r, std::size_t c, bool vec = false) {
      std::vector<double> v(r * c);
      for (double& x : v) x = rng.uniform(-1.0, 1.0);
      return vec ? Tensor::vector(v) : Tensor::matrix(r, c, v);
    };
    inputs_ = {rand(kRows, kIn), rand(kIn, kCols), rand(1, kCols, true),
               rand(kRows, kCols), rand(kCols, kCols)};
    const std::size_t steps = 4 + rng.uniform_int(5);
    std::size_t pool = 2;  // matmul result and input C
    for (std::size_t s = 0; s < steps; ++s) {
      Step st;
      st.op = static_cast<int>(rng.uniform_int(kOpCount));
      st.a = rng.uniform_int(pool);
      st.b = rng.uniform_int(pool);
      for (std::size_t r = 0; r < kRows; ++r) st.index.push_back(rng.uniform_int(kCols));
      steps_.push_back(st);
      ++pool;
    }
  }

  const std::vector<Tensor>& inputs() const { return inputs_; }
  std::vector<int> ops() const {
    std::vector<int> out;
    for (const Step& st : steps_) out.push_back(st.op);
    return out;
  }

  Tensor operator()(const std::vector<Tensor>& in) const {
    const Tensor& x = in[0];
    const Tensor& w = in[1];
    const Tensor& b = in[2];
    const Tensor& c = in[3];
    const Tensor& d = in[4];
    std::vector<Tensor> pool{tanh(matmul(x, w) + b), c};
    std::vector<Tensor> terms;
    for (const Step& st : steps_) {
      const Tensor& p = pool[st.a];
      const Tensor& q = pool[st.b];
      Tensor out;
      switch (st.op) {
        case 0: out = p + q; break;
        case 1: out = p - q; break;
        case 2: out = p * q; break;
        case 3: out = -p; break;
        case 4: out = exp(tanh(p)); break;
        case 5: out = log(softplus(p) + 0.1); break;
        case 6: out = tanh(p); break;
        case 7: out = relu(p) + q; break;
        case 8: out = softplus(p); break;
        case 9: out = square(tanh(p)); break;
        case 10: out = clamp(p, -0.5, 0.5) + q; break;
        case 11: out = tanh(matmul(p, d)); break;
        case 12: out = minimum(p, q); break;
        case 13: out = maximum(p, q); break;
        case 14: out = p * b; break;
        case 15: out = slice_cols(concat_cols(p, q), 1, 1 + kCols); break;
        case 16: out = log_softmax(p); break;
        case 17:
          terms.push_back(sum(gather_cols(p, st.index)));
          out = tanh(q + mean(p, 0));
          break;
        case 18:
          terms.push_back(mean(sum(p, 1)));
          out = scale(p, 0.5) - 0.25;
          break;
        default: out = p; break;
      }
      pool.push_back(out);
    }
    Tensor loss = mean(square(pool.back()));
    for (std::size_t k = 0; k + 1 < pool.size(); ++k) loss = loss + mean(pool[k]);
    for (const Tensor& t : terms) loss = loss + t;
    return loss;
  }

  static constexpr std::size_t kOpCount = 19;

 private:
  struct Step {
    int op = 0;
    std::size_t a = 0, b = 0;
    std::vector<std::size_t> index;
  };
  std::vector<Tensor> inputs_;
  std::vector<Step> steps_;
};

}  // namespace oorl::testing
