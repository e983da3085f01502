#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fairgraph/dense_net.hpp"

namespace fairgraph {

struct GradCheckEntry {
  std::string parameter;
  size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double max_relative_error = 0.0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  std::vector<GradCheckEntry> per_parameter;
  bool pass = false;
};

struct GradCheckOptions {
  double step = 1e-6;
  // Denominator floor: |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
};

// Compares the gradients written by `compute_gradients` (which must zero and
// then fill every parameter's grad) against central differences of `loss`.
// Both callables must be deterministic; this is checked before differencing.
GradCheckReport grad_check(const ParamRefs<double>& params, const std::function<double()>& loss,
                           const std::function<void()>& compute_gradients, double tolerance,
                           GradCheckOptions options = {});

}  // namespace fairgraph
