#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fairgraph/matrix.hpp"

namespace fairgraph {

struct Classification {
  double loss = 0.0;  // -log p(label)
  std::vector<double> probabilities;
};

// Softmax over class logits with cross-entropy on the given label.
Classification classification_head(std::span<const double> logits, size_t label);

// Numerically stable softmax of one row, written into `out`.
template <typename Real>
void softmax_row(std::span<const Real> logits, std::span<Real> out);

// Sum over rows of -log softmax(logits[i])[labels[i]]. When `grad` is given
// it receives scale * d(sum)/d(logits); `probs`, when given, the softmax.
template <typename Real>
double softmax_cross_entropy(const Matrix<Real>& logits, std::span<const int32_t> labels,
                             double scale, Matrix<Real>* grad, Matrix<Real>* probs = nullptr);

// Mean over negatives of max(0, 1 - s_pos + s_neg).
double margin_loss(double positive, std::span<const double> negatives);

}  // namespace fairgraph
