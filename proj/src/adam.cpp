#include "fairgraph/adam.hpp"

#include <cmath>

namespace fairgraph {

template <typename Real>
Adam<Real>::Adam(ParamRefs<Real> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (auto* p : params_) {
    first_.emplace_back(p->value.rows(), p->value.cols());
    second_.emplace_back(p->value.rows(), p->value.cols());
  }
}

template <typename Real>
void Adam<Real>::step() {
  for (size_t i = 0; i < params_.size(); ++i) {
    const auto* p = params_[i];
    if (!p->grad.same_shape(p->value) || !first_[i].same_shape(p->value)) {
      fail(ErrorCode::kShape, "adam: shape mismatch for parameter '" + p->name + "'");
    }
  }
  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const Real b1 = static_cast<Real>(options_.beta1);
  const Real b2 = static_cast<Real>(options_.beta2);
  const Real correction1 = static_cast<Real>(1.0 - std::pow(options_.beta1, t));
  const Real correction2 = static_cast<Real>(1.0 - std::pow(options_.beta2, t));
  const Real lr = static_cast<Real>(options_.learning_rate);
  const Real eps = static_cast<Real>(options_.epsilon);

  for (size_t i = 0; i < params_.size(); ++i) {
    Real* value = params_[i]->value.data();
    const Real* grad = params_[i]->grad.data();
    Real* m = first_[i].data();
    Real* v = second_[i].data();
    const size_t n = params_[i]->value.size();
    for (size_t j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + (Real(1) - b1) * grad[j];
      v[j] = b2 * v[j] + (Real(1) - b2) * grad[j] * grad[j];
      const Real m_hat = m[j] / correction1;
      const Real v_hat = v[j] / correction2;
      value[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace fairgraph
