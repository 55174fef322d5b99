#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "error.hpp"

namespace lnadapt {

// Row-major f64 matrix. Also used for frame sequences (rows = frames).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// A sequence of frames: rows = frames, cols = feature dim.
using Sequence = Matrix;

// Named view of one trainable block inside a layer or adapter.
struct ParamBlock {
  std::string name;
  Matrix* tensor;
};

// Gradients accumulated by backward passes, keyed by block name.
using GradMap = std::map<std::string, Matrix>;

// Accumulate g into grads[name] (creating it zero-shaped on first use).
void grad_add(GradMap& grads, const std::string& name, const Matrix& g);

// c = a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// c = a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// c = a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);

void add_inplace(Matrix& a, const Matrix& b);
// Add row vector (1 x n) to every row of a.
void add_row_inplace(Matrix& a, const Matrix& row);
// 1 x n column sums.
Matrix col_sums(const Matrix& a);
void scale_inplace(Matrix& a, double s);
void tanh_inplace(Matrix& a);
void check_finite(const Matrix& a, const std::string& what);

double grad_sq_norm(const GradMap& grads);

}  // namespace lnadapt
