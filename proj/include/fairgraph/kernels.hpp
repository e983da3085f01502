#pragma once

// Data-parallel inner loops. Every kernel exists twice: a serial reference
// and an OpenMP version that partitions independent output elements across
// threads. Each output element is accumulated by exactly one thread in the
// same order as the serial loop, so the two are bitwise identical.

#include <cstddef>
#include <cstdint>
#include <span>

#include "fairgraph/matrix.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fairgraph {

enum class Execution { kSerial, kParallel };

namespace kernels {

namespace detail {

template <typename Real>
inline Matrix<Real> transpose(const Matrix<Real>& w) {
  Matrix<Real> t(w.cols(), w.rows());
  for (size_t r = 0; r < w.rows(); ++r) {
    for (size_t c = 0; c < w.cols(); ++c) t(c, r) = w(r, c);
  }
  return t;
}

// y[n] = b + W x[n], with W given transposed (in x out) so the inner loop
// runs over contiguous outputs. Each y[o] still sums over i in order.
template <typename Real>
inline void affine_row(const Real* x, const Matrix<Real>& wt, std::span<const Real> b, Real* y) {
  const size_t in = wt.rows();
  const size_t out = wt.cols();
  for (size_t o = 0; o < out; ++o) y[o] = b.empty() ? Real(0) : b[o];
  for (size_t i = 0; i < in; ++i) {
    const Real xi = x[i];
    const Real* wr = wt.data() + i * out;
    for (size_t o = 0; o < out; ++o) y[o] += xi * wr[o];
  }
}

// dx[n] = W^T dy[n]
template <typename Real>
inline void affine_input_grad_row(const Real* dy, const Matrix<Real>& w, Real* dx) {
  const size_t out = w.rows();
  const size_t in = w.cols();
  for (size_t i = 0; i < in; ++i) dx[i] = Real(0);
  for (size_t o = 0; o < out; ++o) {
    const Real g = dy[o];
    const Real* wr = w.data() + o * in;
    for (size_t i = 0; i < in; ++i) dx[i] += g * wr[i];
  }
}

// dW[o] += sum_n dy[n][o] x[n];  db[o] += sum_n dy[n][o]
template <typename Real>
inline void affine_param_grad_row(size_t o, const Matrix<Real>& dy, const Matrix<Real>& x,
                                  Matrix<Real>& dw, std::span<Real> db) {
  const size_t in = x.cols();
  Real* dwr = dw.data() + o * in;
  Real bias_acc = Real(0);
  for (size_t n = 0; n < dy.rows(); ++n) {
    const Real g = dy(n, o);
    bias_acc += g;
    const Real* xr = x.data() + n * in;
    for (size_t i = 0; i < in; ++i) dwr[i] += g * xr[i];
  }
  if (!db.empty()) db[o] += bias_acc;
}

template <typename Real>
inline void check_affine(const Matrix<Real>& x, const Matrix<Real>& w, std::span<const Real> b) {
  if (x.cols() != w.cols()) {
    fail(ErrorCode::kShape, "affine: input width " + std::to_string(x.cols()) +
                                " does not match weight columns " + std::to_string(w.cols()));
  }
  if (!b.empty() && b.size() != w.rows()) fail(ErrorCode::kShape, "affine: bias length mismatch");
}

}  // namespace detail

namespace serial {

template <typename Body>
void for_each_index(size_t n, Body&& body) {
  for (size_t i = 0; i < n; ++i) body(i);
}

template <typename Real>
void affine_forward(const Matrix<Real>& x, const Matrix<Real>& w, std::span<const Real> b,
                    Matrix<Real>& y) {
  detail::check_affine(x, w, b);
  y.resize(x.rows(), w.rows());
  const Matrix<Real> wt = detail::transpose(w);
  for (size_t n = 0; n < x.rows(); ++n) detail::affine_row(x.data() + n * x.cols(), wt, b, y.data() + n * w.rows());
}

template <typename Real>
void affine_backward_input(const Matrix<Real>& dy, const Matrix<Real>& w, Matrix<Real>& dx) {
  dx.resize(dy.rows(), w.cols());
  for (size_t n = 0; n < dy.rows(); ++n) {
    detail::affine_input_grad_row(dy.data() + n * dy.cols(), w, dx.data() + n * w.cols());
  }
}

template <typename Real>
void affine_backward_params(const Matrix<Real>& dy, const Matrix<Real>& x, Matrix<Real>& dw,
                            std::span<Real> db) {
  for (size_t o = 0; o < dw.rows(); ++o) detail::affine_param_grad_row(o, dy, x, dw, db);
}

template <typename Real>
void row_dot(const Matrix<Real>& a, const Matrix<Real>& b, std::span<Real> out) {
  const size_t d = a.cols();
  for (size_t n = 0; n < a.rows(); ++n) {
    Real acc = Real(0);
    for (size_t j = 0; j < d; ++j) acc += a(n, j) * b(n, j);
    out[n] = acc;
  }
}

}  // namespace serial

namespace parallel {

template <typename Body>
void for_each_index(size_t n, Body&& body) {
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) body(static_cast<size_t>(i));
}

template <typename Real>
void affine_forward(const Matrix<Real>& x, const Matrix<Real>& w, std::span<const Real> b,
                    Matrix<Real>& y) {
  detail::check_affine(x, w, b);
  y.resize(x.rows(), w.rows());
  const size_t in = x.cols();
  const size_t out = w.rows();
  const Matrix<Real> wt = detail::transpose(w);
  for_each_index(x.rows(), [&](size_t n) {
    detail::affine_row(x.data() + n * in, wt, b, y.data() + n * out);
  });
}

template <typename Real>
void affine_backward_input(const Matrix<Real>& dy, const Matrix<Real>& w, Matrix<Real>& dx) {
  dx.resize(dy.rows(), w.cols());
  for_each_index(dy.rows(), [&](size_t n) {
    detail::affine_input_grad_row(dy.data() + n * dy.cols(), w, dx.data() + n * w.cols());
  });
}

template <typename Real>
void affine_backward_params(const Matrix<Real>& dy, const Matrix<Real>& x, Matrix<Real>& dw,
                            std::span<Real> db) {
  for_each_index(dw.rows(), [&](size_t o) { detail::affine_param_grad_row(o, dy, x, dw, db); });
}

template <typename Real>
void row_dot(const Matrix<Real>& a, const Matrix<Real>& b, std::span<Real> out) {
  const size_t d = a.cols();
  for_each_index(a.rows(), [&](size_t n) {
    Real acc = Real(0);
    for (size_t j = 0; j < d; ++j) acc += a(n, j) * b(n, j);
    out[n] = acc;
  });
}

}  // namespace parallel

// Work below this many multiply-adds stays serial; thread start-up dominates.
inline constexpr size_t kParallelThreshold = size_t{1} << 15;

inline bool use_parallel(size_t work) {
#ifdef _OPENMP
  return work >= kParallelThreshold && omp_get_max_threads() > 1;
#else
  (void)work;
  return false;
#endif
}

template <typename Body>
void for_each_index(size_t n, Body&& body, Execution exec = Execution::kParallel) {
  if (exec == Execution::kParallel) {
    parallel::for_each_index(n, body);
  } else {
    serial::for_each_index(n, body);
  }
}

template <typename Real>
void affine_forward(const Matrix<Real>& x, const Matrix<Real>& w, std::span<const Real> b,
                    Matrix<Real>& y) {
  if (use_parallel(x.rows() * w.size())) {
    parallel::affine_forward(x, w, b, y);
  } else {
    serial::affine_forward(x, w, b, y);
  }
}

template <typename Real>
void affine_backward_input(const Matrix<Real>& dy, const Matrix<Real>& w, Matrix<Real>& dx) {
  if (use_parallel(dy.rows() * w.size())) {
    parallel::affine_backward_input(dy, w, dx);
  } else {
    serial::affine_backward_input(dy, w, dx);
  }
}

template <typename Real>
void affine_backward_params(const Matrix<Real>& dy, const Matrix<Real>& x, Matrix<Real>& dw,
                            std::span<Real> db) {
  if (use_parallel(dy.rows() * dw.size())) {
    parallel::affine_backward_params(dy, x, dw, db);
  } else {
    serial::affine_backward_params(dy, x, dw, db);
  }
}

template <typename Real>
void row_dot(const Matrix<Real>& a, const Matrix<Real>& b, std::span<Real> out) {
  if (use_parallel(a.size())) {
    parallel::row_dot(a, b, out);
  } else {
    serial::row_dot(a, b, out);
  }
}

}  // namespace kernels
}  // namespace fairgraph
