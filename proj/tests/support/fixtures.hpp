#pragma once

#include <algorithm>
#include <initializer_list>
#include <vector>

#include "doctest.h"
#include "oorl/buffer.hpp"
#include "oorl/nn.hpp"

namespace oorl::testing {

// Overwrites every parameter of net, in parameters() order.
inline void set_params(Mlp& net, std::initializer_list<std::vector<double>> values) {
  std::size_t i = 0;
  for (const auto& v : values) {
    auto dst = net.parameters().at(i++).mutable_values();
    REQUIRE(dst.size() == v.size());
    std::copy(v.begin(), v.end(), dst.begin());
  }
  REQUIRE(i == net.parameters().size());
}

inline Transition transition(std::vector<double> s, std::vector<double> a, double r,
                             std::vector<double> s2, bool terminated = false,
                             bool truncated = false) {
  return {std::move(s), std::move(a), r, std::move(s2), terminated, truncated};
}

inline Batch batch_of(std::initializer_list<Transition> ts) {
  const std::vector<Transition> v(ts);
  return Batch::from_transitions(v);
}

inline std::vector<double> values_of(const Tensor& t) {
  return std::vector<double>(t.values().begin(), t.values().end());
}

inline std::vector<std::vector<double>> snapshot(const std::vector<Tensor>& params) {
  std::vector<std::vector<double>> out;
  for (const Tensor& p : params) out.push_back(values_of(p));
  return out;
}

}  // namespace oorl::testing
