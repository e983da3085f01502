#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "fairgraph/error.hpp"

namespace fairgraph {

// Dense row-major matrix. Batches are stored one sample per row.
template <typename Real>
class Matrix {
 public:
  using value_type = Real;

  Matrix() = default;
  Matrix(size_t rows, size_t cols, Real fill = Real(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<Real>> rows) {
    Matrix m;
    m.rows_ = rows.size();
    m.cols_ = rows.size() == 0 ? 0 : rows.begin()->size();
    m.data_.reserve(m.rows_ * m.cols_);
    for (const auto& row : rows) {
      if (row.size() != m.cols_) fail(ErrorCode::kShape, "ragged matrix literal");
      m.data_.insert(m.data_.end(), row.begin(), row.end());
    }
    return m;
  }

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  Real operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  std::span<Real> row(size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Real> row(size_t r) const { return {data_.data() + r * cols_, cols_}; }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }
  void resize(size_t rows, size_t cols) {
    rows_ = rows;
    cols_ = cols;
    data_.assign(rows * cols, Real(0));
  }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool operator==(const Matrix& other) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<Real> data_;
};

template <typename To, typename From>
Matrix<To> matrix_cast(const Matrix<From>& m) {
  Matrix<To> out(m.rows(), m.cols());
  for (size_t i = 0; i < m.size(); ++i) out.data()[i] = static_cast<To>(m.data()[i]);
  return out;
}

inline std::string shape_string(size_t rows, size_t cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

template <typename Real>
void require_shape(const Matrix<Real>& m, size_t rows, size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    fail(ErrorCode::kShape, std::string(what) + ": expected " + shape_string(rows, cols) +
                                ", got " + shape_string(m.rows(), m.cols()));
  }
}

}  // namespace fairgraph
