#include "fairgraph/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace fairgraph {

GradCheckReport grad_check(const ParamRefs<double>& params, const std::function<double()>& loss,
                           const std::function<void()>& compute_gradients, double tolerance,
                           GradCheckOptions options) {
  const double base = loss();
  const double again = loss();
  if (base != again) {
    fail(ErrorCode::kCheck, "grad check: loss is not deterministic under a fixed seed");
  }
  if (!std::isfinite(base)) fail(ErrorCode::kCheck, "grad check: loss is not finite");

  compute_gradients();
  std::vector<Matrix<double>> analytic;
  analytic.reserve(params.size());
  for (const auto* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  report.tolerance = tolerance;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Parameter<double>& param = *params[pi];
    GradCheckEntry entry;
    entry.parameter = param.name;
    for (size_t i = 0; i < param.value.size(); ++i) {
      double& x = param.value.data()[i];
      const double saved = x;
      x = saved + options.step;
      const double up = loss();
      x = saved - options.step;
      const double down = loss();
      x = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[pi].data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double err = std::abs(a - numeric) / denom;
      if (i == 0 || err > entry.max_relative_error) {
        entry.max_relative_error = err;
        entry.worst_index = i;
        entry.analytic = a;
        entry.numeric = numeric;
      }
    }
    report.max_relative_error = std::max(report.max_relative_error, entry.max_relative_error);
    report.per_parameter.push_back(entry);
  }
  report.pass = report.max_relative_error <= tolerance;
  return report;
}

}  // namespace fairgraph
