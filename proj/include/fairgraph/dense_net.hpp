#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fairgraph/matrix.hpp"
#include "fairgraph/rng.hpp"

namespace fairgraph {

enum class Mode { kTrain, kEval };

// A trainable tensor and its accumulated gradient.
template <typename Real>
struct Parameter {
  std::string name;
  Matrix<Real> value;
  Matrix<Real> grad;

  Parameter() = default;
  Parameter(std::string n, size_t rows, size_t cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols) {}

  void zero_grad() { grad.fill(Real(0)); }
};

template <typename Real>
using ParamRefs = std::vector<Parameter<Real>*>;

// Named view over every tensor a module persists (parameters and buffers).
template <typename Real>
using TensorRefs = std::vector<std::pair<std::string, Matrix<Real>*>>;

template <typename Real>
void zero_grads(const ParamRefs<Real>& params) {
  for (auto* p : params) p->zero_grad();
}

template <typename Real>
class BatchNorm {
 public:
  struct Pass {
    Matrix<Real> normalized;
    std::vector<Real> inv_std;
    bool valid = false;
  };

  explicit BatchNorm(size_t features, double momentum = 0.1, double eps = 1e-5);

  size_t features() const { return gamma_.value.cols(); }

  // Train mode normalizes by batch statistics and, when update_running is
  // set, folds them into the running estimates used by eval mode.
  Matrix<Real> forward(const Matrix<Real>& x, Mode mode, Pass* pass, bool update_running = true);
  Matrix<Real> backward(const Pass& pass, const Matrix<Real>& upstream);

  ParamRefs<Real> parameters() { return {&gamma_, &beta_}; }
  TensorRefs<Real> tensors(const std::string& prefix);

  const Matrix<Real>& running_mean() const { return running_mean_; }
  const Matrix<Real>& running_var() const { return running_var_; }

 private:
  Parameter<Real> gamma_;
  Parameter<Real> beta_;
  Matrix<Real> running_mean_;
  Matrix<Real> running_var_;
  double momentum_;
  double eps_;
};

struct DenseNetConfig {
  // input width, hidden widths..., output width
  std::vector<size_t> widths;
  double leaky_slope = 0.01;
  double dropout = 0.0;
  bool batchnorm = false;
  // Apply the activation after the last affine layer too.
  bool activate_output = false;

  size_t layer_count() const { return widths.empty() ? 0 : widths.size() - 1; }
  size_t input_width() const { return widths.front(); }
  size_t output_width() const { return widths.back(); }

  // `layers` affine layers, hidden layers all `hidden` wide.
  static DenseNetConfig mlp(size_t in, size_t hidden, size_t out, size_t layers);
};

// Multi-layer perceptron: affine -> [batchnorm] -> leaky ReLU -> [dropout]
// for each hidden layer, then a final affine layer.
template <typename Real>
class DenseNet {
 public:
  // Activations recorded by a forward pass; consumed by backward.
  struct Pass {
    std::vector<Matrix<Real>> inputs;  // input to each affine layer
    std::vector<Matrix<Real>> pre;     // pre-activation per layer
    std::vector<Matrix<Real>> masks;   // dropout scale per hidden layer (empty if none)
    std::vector<typename BatchNorm<Real>::Pass> norms;
    bool valid = false;
  };

  DenseNet(DenseNetConfig config, Rng& init_rng);

  const DenseNetConfig& config() const { return config_; }
  size_t layer_count() const { return weights_.size(); }

  Matrix<Real> forward(const Matrix<Real>& input, Mode mode, Rng* rng, Pass* pass = nullptr);
  Matrix<Real> predict(const Matrix<Real>& input) const;

  // Accumulates parameter gradients and returns the input gradient. The pass
  // is invalidated so a second backward without a new forward is an error.
  Matrix<Real> backward(Pass& pass, const Matrix<Real>& upstream);

  ParamRefs<Real> parameters();
  TensorRefs<Real> tensors(const std::string& prefix);
  void zero_grad() { zero_grads(parameters()); }

  Parameter<Real>& weight(size_t layer) { return weights_[layer]; }
  Parameter<Real>& bias(size_t layer) { return biases_[layer]; }
  const Parameter<Real>& weight(size_t layer) const { return weights_[layer]; }
  const Parameter<Real>& bias(size_t layer) const { return biases_[layer]; }

 private:
  Matrix<Real> run(const Matrix<Real>& input, Mode mode, Rng* rng, Pass* pass, bool update_running);
  bool is_activated(size_t layer) const {
    return layer + 1 < weights_.size() || config_.activate_output;
  }

  DenseNetConfig config_;
  std::vector<Parameter<Real>> weights_;
  std::vector<Parameter<Real>> biases_;
  std::vector<BatchNorm<Real>> norms_;
};

template <typename Real>
void require_finite(const Matrix<Real>& m, const char* what);

}  // namespace fairgraph
