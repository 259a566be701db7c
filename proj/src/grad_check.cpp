#include "oorl/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace oorl {

GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& point,
                           const GradCheckOptions& options) {
  std::vector<Tensor> inputs;
  inputs.reserve(point.size());
  for (const Tensor& p : point) inputs.push_back(p.clone(true));

  const GradientMap analytic = backward(f(inputs), inputs);

  GradCheckReport report;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto w = inputs[k].mutable_values();
    const auto& g = analytic.at(inputs[k]);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double x0 = w[i];
      w[i] = x0 + options.step;
      const double fp = f(inputs).item();
      w[i] = x0 - options.step;
      const double fm = f(inputs).item();
      w[i] = x0;
      const double numeric = (fp - fm) / (2.0 * options.step);

      const double scale = std::max(std::abs(numeric), std::abs(g[i]));
      const double diff = std::abs(numeric - g[i]);
      bool ok;
      double rel;
      if (scale < options.small) {
        ok = diff <= options.atol;
        rel = ok ? 0.0 : diff / options.atol * options.rtol;
      } else {
        rel = diff / scale;
        ok = rel <= options.rtol;
      }
      ++report.checked;
      if (!ok) {
        ++report.failures;
        report.passed = false;
      }
      if (rel >= report.worst_rel_error) {
        report.worst_rel_error = rel;
        report.worst_location =
            "input " + std::to_string(k) + " component " + std::to_string(i);
      }
    }
  }
  return report;
}

}  // namespace oorl
