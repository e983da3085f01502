#include "fairgraph/dense_net.hpp"

#include <cmath>
#include <utility>

#include "fairgraph/kernels.hpp"

namespace fairgraph {

template <typename Real>
void require_finite(const Matrix<Real>& m, const char* what) {
  for (Real v : m.values()) {
    if (!std::isfinite(v)) fail(ErrorCode::kNumericInput, std::string(what) + ": non-finite input");
  }
}

DenseNetConfig DenseNetConfig::mlp(size_t in, size_t hidden, size_t out, size_t layers) {
  DenseNetConfig config;
  config.widths.push_back(in);
  for (size_t i = 1; i < layers; ++i) config.widths.push_back(hidden);
  config.widths.push_back(out);
  return config;
}

// ---------------------------------------------------------------------------
// BatchNorm

template <typename Real>
BatchNorm<Real>::BatchNorm(size_t features, double momentum, double eps)
    : gamma_("gamma", 1, features),
      beta_("beta", 1, features),
      running_mean_(1, features, Real(0)),
      running_var_(1, features, Real(1)),
      momentum_(momentum),
      eps_(eps) {
  gamma_.value.fill(Real(1));
}

template <typename Real>
Matrix<Real> BatchNorm<Real>::forward(const Matrix<Real>& x, Mode mode, Pass* pass,
                                      bool update_running) {
  const size_t n = x.rows();
  const size_t f = x.cols();
  if (f != features()) fail(ErrorCode::kShape, "batchnorm: feature count mismatch");
  Matrix<Real> y(n, f);
  if (mode == Mode::kEval) {
    for (size_t j = 0; j < f; ++j) {
      const Real scale =
          gamma_.value(0, j) / std::sqrt(running_var_(0, j) + static_cast<Real>(eps_));
      for (size_t i = 0; i < n; ++i) {
        y(i, j) = (x(i, j) - running_mean_(0, j)) * scale + beta_.value(0, j);
      }
    }
    if (pass) pass->valid = false;
    return y;
  }
  if (n == 0) fail(ErrorCode::kShape, "batchnorm: empty batch in train mode");

  Matrix<Real> normalized(n, f);
  std::vector<Real> inv_std(f);
  for (size_t j = 0; j < f; ++j) {
    Real mean = 0;
    for (size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<Real>(n);
    Real var = 0;
    for (size_t i = 0; i < n; ++i) {
      const Real c = x(i, j) - mean;
      var += c * c;
    }
    var /= static_cast<Real>(n);
    inv_std[j] = Real(1) / std::sqrt(var + static_cast<Real>(eps_));
    for (size_t i = 0; i < n; ++i) {
      normalized(i, j) = (x(i, j) - mean) * inv_std[j];
      y(i, j) = normalized(i, j) * gamma_.value(0, j) + beta_.value(0, j);
    }
    if (update_running) {
      const Real m = static_cast<Real>(momentum_);
      const Real unbiased = n > 1 ? var * static_cast<Real>(n) / static_cast<Real>(n - 1) : var;
      running_mean_(0, j) = (Real(1) - m) * running_mean_(0, j) + m * mean;
      running_var_(0, j) = (Real(1) - m) * running_var_(0, j) + m * unbiased;
    }
  }
  if (pass) {
    pass->normalized = std::move(normalized);
    pass->inv_std = std::move(inv_std);
    pass->valid = true;
  }
  return y;
}

template <typename Real>
Matrix<Real> BatchNorm<Real>::backward(const Pass& pass, const Matrix<Real>& upstream) {
  if (!pass.valid) fail(ErrorCode::kState, "batchnorm: backward without a train-mode forward");
  const size_t n = upstream.rows();
  const size_t f = upstream.cols();
  require_shape(upstream, pass.normalized.rows(), pass.normalized.cols(), "batchnorm upstream");
  Matrix<Real> dx(n, f);
  for (size_t j = 0; j < f; ++j) {
    Real sum_dy = 0;
    Real sum_dy_xhat = 0;
    for (size_t i = 0; i < n; ++i) {
      sum_dy += upstream(i, j);
      sum_dy_xhat += upstream(i, j) * pass.normalized(i, j);
    }
    gamma_.grad(0, j) += sum_dy_xhat;
    beta_.grad(0, j) += sum_dy;
    const Real scale = gamma_.value(0, j) * pass.inv_std[j] / static_cast<Real>(n);
    for (size_t i = 0; i < n; ++i) {
      dx(i, j) = scale * (static_cast<Real>(n) * upstream(i, j) - sum_dy -
                          pass.normalized(i, j) * sum_dy_xhat);
    }
  }
  return dx;
}

template <typename Real>
TensorRefs<Real> BatchNorm<Real>::tensors(const std::string& prefix) {
  return {{prefix + "gamma", &gamma_.value},
          {prefix + "beta", &beta_.value},
          {prefix + "running_mean", &running_mean_},
          {prefix + "running_var", &running_var_}};
}

// ---------------------------------------------------------------------------
// DenseNet

template <typename Real>
DenseNet<Real>::DenseNet(DenseNetConfig config, Rng& init_rng) : config_(std::move(config)) {
  if (config_.widths.size() < 2) fail(ErrorCode::kShape, "dense net needs at least one layer");
  for (size_t w : config_.widths) {
    if (w == 0) fail(ErrorCode::kShape, "dense net widths must be positive");
  }
  if (config_.dropout < 0.0 || config_.dropout >= 1.0) {
    fail(ErrorCode::kConfig, "dropout rate must lie in [0, 1)");
  }
  const size_t layers = config_.layer_count();
  for (size_t l = 0; l < layers; ++l) {
    const size_t in = config_.widths[l];
    const size_t out = config_.widths[l + 1];
    Parameter<Real> w("weight", out, in);
    Parameter<Real> b("bias", 1, out);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (Real& v : w.value.values()) v = static_cast<Real>(init_rng.uniform(-bound, bound));
    for (Real& v : b.value.values()) v = static_cast<Real>(init_rng.uniform(-bound, bound));
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
    if (config_.batchnorm && l + 1 < layers) norms_.emplace_back(out);
  }
}

template <typename Real>
Matrix<Real> DenseNet<Real>::forward(const Matrix<Real>& input, Mode mode, Rng* rng, Pass* pass) {
  return run(input, mode, rng, pass, true);
}

template <typename Real>
Matrix<Real> DenseNet<Real>::predict(const Matrix<Real>& input) const {
  // Eval mode touches no mutable state.
  return const_cast<DenseNet*>(this)->run(input, Mode::kEval, nullptr, nullptr, false);
}

template <typename Real>
Matrix<Real> DenseNet<Real>::run(const Matrix<Real>& input, Mode mode, Rng* rng, Pass* pass,
                                 bool update_running) {
  if (input.cols() != config_.input_width()) {
    fail(ErrorCode::kShape, "dense net: input width " + std::to_string(input.cols()) +
                                " != " + std::to_string(config_.input_width()));
  }
  require_finite(input, "dense net");
  const bool train = mode == Mode::kTrain;
  const bool dropout = train && config_.dropout > 0.0;
  if (dropout && rng == nullptr) fail(ErrorCode::kUsage, "dense net: dropout needs an rng");

  const size_t layers = weights_.size();
  if (pass) {
    pass->inputs.assign(layers, {});
    pass->pre.assign(layers, {});
    pass->masks.assign(layers, {});
    pass->norms.assign(layers, {});
    pass->valid = false;
  }
  const Real slope = static_cast<Real>(config_.leaky_slope);
  const Real keep = static_cast<Real>(1.0 - config_.dropout);

  Matrix<Real> x = input;
  for (size_t l = 0; l < layers; ++l) {
    Matrix<Real> y;
    kernels::affine_forward(x, weights_[l].value, std::as_const(biases_[l].value).values(), y);
    if (pass) pass->inputs[l] = std::move(x);
    const bool hidden = l + 1 < layers;
    if (hidden && config_.batchnorm) {
      y = norms_[l].forward(y, mode, pass ? &pass->norms[l] : nullptr, update_running && train);
    }
    if (is_activated(l)) {
      if (pass) pass->pre[l] = y;
      for (Real& v : y.values()) {
        if (v < Real(0)) v *= slope;
      }
    }
    if (hidden && dropout) {
      Matrix<Real> mask(y.rows(), y.cols());
      // Four 16-bit uniforms per draw from the generator.
      const auto threshold = static_cast<uint64_t>(std::llround((1.0 - config_.dropout) * 65536.0));
      uint64_t bits = 0;
      int left = 0;
      for (Real& m : mask.values()) {
        if (left == 0) {
          bits = rng->next_u64();
          left = 4;
        }
        m = (bits & 0xFFFF) < threshold ? Real(1) / keep : Real(0);
        bits >>= 16;
        --left;
      }
      for (size_t i = 0; i < y.size(); ++i) y.data()[i] *= mask.data()[i];
      if (pass) pass->masks[l] = std::move(mask);
    }
    x = std::move(y);
  }
  if (pass) pass->valid = true;
  return x;
}

template <typename Real>
Matrix<Real> DenseNet<Real>::backward(Pass& pass, const Matrix<Real>& upstream) {
  if (!pass.valid) fail(ErrorCode::kState, "dense net: backward without a matching forward pass");
  const size_t layers = weights_.size();
  if (pass.inputs.size() != layers) fail(ErrorCode::kState, "dense net: pass from another network");
  require_shape(upstream, pass.inputs[0].rows(), config_.output_width(), "dense net upstream");
  pass.valid = false;

  const Real slope = static_cast<Real>(config_.leaky_slope);
  Matrix<Real> grad = upstream;
  for (size_t l = layers; l-- > 0;) {
    const bool hidden = l + 1 < layers;
    if (hidden && !pass.masks[l].empty()) {
      for (size_t i = 0; i < grad.size(); ++i) grad.data()[i] *= pass.masks[l].data()[i];
    }
    if (is_activated(l)) {
      const Matrix<Real>& pre = pass.pre[l];
      for (size_t i = 0; i < grad.size(); ++i) {
        if (pre.data()[i] < Real(0)) grad.data()[i] *= slope;
      }
    }
    if (hidden && config_.batchnorm) grad = norms_[l].backward(pass.norms[l], grad);
    kernels::affine_backward_params(grad, pass.inputs[l], weights_[l].grad, biases_[l].grad.values());
    Matrix<Real> next;
    kernels::affine_backward_input(grad, weights_[l].value, next);
    grad = std::move(next);
  }
  return grad;
}

template <typename Real>
ParamRefs<Real> DenseNet<Real>::parameters() {
  ParamRefs<Real> out;
  for (size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  for (auto& norm : norms_) {
    for (auto* p : norm.parameters()) out.push_back(p);
  }
  return out;
}

template <typename Real>
TensorRefs<Real> DenseNet<Real>::tensors(const std::string& prefix) {
  TensorRefs<Real> out;
  for (size_t l = 0; l < weights_.size(); ++l) {
    out.emplace_back(prefix + "layer" + std::to_string(l) + ".weight", &weights_[l].value);
    out.emplace_back(prefix + "layer" + std::to_string(l) + ".bias", &biases_[l].value);
  }
  for (size_t l = 0; l < norms_.size(); ++l) {
    for (auto& t : norms_[l].tensors(prefix + "norm" + std::to_string(l) + ".")) out.push_back(t);
  }
  return out;
}

template void require_finite(const Matrix<float>&, const char*);
template void require_finite(const Matrix<double>&, const char*);
template class BatchNorm<float>;
template class BatchNorm<double>;
template class DenseNet<float>;
template class DenseNet<double>;

}  // namespace fairgraph
