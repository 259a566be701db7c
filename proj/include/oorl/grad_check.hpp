#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "oorl/tensor.hpp"

namespace oorl {

struct GradCheckOptions {
  double rtol = 1e-4;
  double step = 1e-5;
  // Components where both estimates are below this magnitude are compared
  // absolutely against `atol`.
  double small = 1e-6;
  double atol = 1e-7;
};

struct GradCheckReport {
  bool passed = true;
  double worst_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t failures = 0;
  std::string worst_location;
};

using ScalarFn = std::function<Tensor(const std::vector<Tensor>&)>;

// Compares backward() against central finite differences for every
// component of every input. `f` must build a fresh graph on each call.
GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& point,
                           const GradCheckOptions& options = {});

}  // namespace oorl
