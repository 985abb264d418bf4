// Copyright 2026 The wcplace Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WCPLACE_NN_MATRIX_H_
#define WCPLACE_NN_MATRIX_H_

#include <stdexcept>
#include <string>
#include <vector>

namespace wcplace::nn {

// Dense row-major matrix of doubles. A scalar is 1x1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("negative matrix shape");
  }
  Matrix(int rows, int cols, std::vector<double> values) : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (rows < 0 || cols < 0 || data_.size() != static_cast<std::size_t>(rows) * cols) {
      throw std::invalid_argument("matrix values do not match shape " + shape_string(rows, cols));
    }
  }
  static Matrix scalar(double x) { return Matrix(1, 1, x); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape() const { return shape_string(rows_, cols_); }
  static std::string shape_string(int r, int c) { return std::to_string(r) + "x" + std::to_string(c); }

  Matrix& operator+=(const Matrix& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

}  // namespace wcplace::nn

#endif  // WCPLACE_NN_MATRIX_H_
