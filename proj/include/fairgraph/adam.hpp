#pragma once

#include <cstdint>
#include <vector>

#include "fairgraph/dense_net.hpp"

namespace fairgraph {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction over a fixed list of parameters. Moments are
// created with the parameters' shapes at construction.
template <typename Real>
class Adam {
 public:
  Adam(ParamRefs<Real> params, AdamOptions options = {});

  void step();
  void zero_grad() { zero_grads(params_); }

  uint64_t step_count() const { return step_count_; }
  const AdamOptions& options() const { return options_; }
  const Matrix<Real>& first_moment(size_t i) const { return first_[i]; }
  const Matrix<Real>& second_moment(size_t i) const { return second_[i]; }

 private:
  ParamRefs<Real> params_;
  AdamOptions options_;
  std::vector<Matrix<Real>> first_;
  std::vector<Matrix<Real>> second_;
  uint64_t step_count_ = 0;
};

}  // namespace fairgraph
