#include "fairgraph/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairgraph/error.hpp"

namespace fairgraph {

template <typename Real>
void softmax_row(std::span<const Real> logits, std::span<Real> out) {
  const Real top = *std::max_element(logits.begin(), logits.end());
  Real total = 0;
  for (size_t c = 0; c < logits.size(); ++c) {
    out[c] = std::exp(logits[c] - top);
    total += out[c];
  }
  for (size_t c = 0; c < logits.size(); ++c) out[c] /= total;
}

Classification classification_head(std::span<const double> logits, size_t label) {
  if (logits.size() < 2) fail(ErrorCode::kShape, "classification head needs at least 2 classes");
  if (label >= logits.size()) {
    fail(ErrorCode::kIndex, "class label " + std::to_string(label) + " out of range for " +
                                std::to_string(logits.size()) + " classes");
  }
  Classification result;
  result.probabilities.resize(logits.size());
  softmax_row<double>(logits, result.probabilities);
  const double top = *std::max_element(logits.begin(), logits.end());
  double log_total = 0.0;
  for (double l : logits) log_total += std::exp(l - top);
  result.loss = -(logits[label] - top - std::log(log_total));
  return result;
}

template <typename Real>
double softmax_cross_entropy(const Matrix<Real>& logits, std::span<const int32_t> labels,
                             double scale, Matrix<Real>* grad, Matrix<Real>* probs) {
  const size_t n = logits.rows();
  const size_t classes = logits.cols();
  if (labels.size() != n) fail(ErrorCode::kShape, "cross entropy: label count mismatch");
  if (classes < 2) fail(ErrorCode::kShape, "cross entropy needs at least 2 classes");
  if (grad) grad->resize(n, classes);
  if (probs) probs->resize(n, classes);
  std::vector<Real> p(classes);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const int32_t label = labels[i];
    if (label < 0 || static_cast<size_t>(label) >= classes) {
      fail(ErrorCode::kIndex, "cross entropy: label " + std::to_string(label) + " out of range");
    }
    auto row = logits.row(i);
    softmax_row<Real>(row, p);
    const Real top = *std::max_element(row.begin(), row.end());
    Real sum = 0;
    for (size_t c = 0; c < classes; ++c) sum += std::exp(row[c] - top);
    total += -static_cast<double>(row[label] - top - std::log(sum));
    if (grad) {
      for (size_t c = 0; c < classes; ++c) {
        const Real target = static_cast<size_t>(label) == c ? Real(1) : Real(0);
        (*grad)(i, c) = static_cast<Real>(scale) * (p[c] - target);
      }
    }
    if (probs) std::copy(p.begin(), p.end(), probs->row(i).begin());
  }
  return total;
}

double margin_loss(double positive, std::span<const double> negatives) {
  if (negatives.empty()) fail(ErrorCode::kUsage, "margin loss needs at least one negative");
  double total = 0.0;
  for (double s : negatives) total += std::max(0.0, 1.0 - positive + s);
  return total / static_cast<double>(negatives.size());
}

template void softmax_row<float>(std::span<const float>, std::span<float>);
template void softmax_row<double>(std::span<const double>, std::span<double>);
template double softmax_cross_entropy(const Matrix<float>&, std::span<const int32_t>, double,
                                      Matrix<float>*, Matrix<float>*);
template double softmax_cross_entropy(const Matrix<double>&, std::span<const int32_t>, double,
                                      Matrix<double>*, Matrix<double>*);

}  // namespace fairgraph
