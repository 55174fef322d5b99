#include "matrix.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace lnadapt {

namespace {

using EMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ECMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

ECMap cmap(const Matrix& m) {
  return ECMap(m.data(), static_cast<Eigen::Index>(m.rows()),
               static_cast<Eigen::Index>(m.cols()));
}

EMap map(Matrix& m) {
  return EMap(m.data(), static_cast<Eigen::Index>(m.rows()),
              static_cast<Eigen::Index>(m.cols()));
}

}  // namespace

void grad_add(GradMap& grads, const std::string& name, const Matrix& g) {
  auto it = grads.find(name);
  if (it == grads.end()) {
    grads.emplace(name, g);
    return;
  }
  if (!it->second.same_shape(g)) {
    throw ShapeError("gradient shape mismatch for block " + name);
  }
  add_inplace(it->second, g);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()));
  }
  Matrix c(a.rows(), b.cols());
  if (!c.empty()) map(c).noalias() = cmap(a) * cmap(b);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.rows());
  if (!c.empty()) map(c).noalias() = cmap(a) * cmap(b).transpose();
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: " + std::to_string(a.rows()) + " vs " +
                     std::to_string(b.rows()));
  }
  Matrix c(a.cols(), b.cols());
  if (!c.empty()) map(c).noalias() = cmap(a).transpose() * cmap(b);
  return c;
}

void add_inplace(Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("add_inplace: shape mismatch");
  double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

void add_row_inplace(Matrix& a, const Matrix& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row_inplace: row is " + std::to_string(row.cols()) +
                     " wide, matrix is " + std::to_string(a.cols()));
  }
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double* pa = a.data() + r * a.cols();
    const double* pb = row.data();
    for (std::size_t c = 0; c < a.cols(); ++c) pa[c] += pb[c];
  }
}

Matrix col_sums(const Matrix& a) {
  Matrix s(1, a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* pa = a.data() + r * a.cols();
    for (std::size_t c = 0; c < a.cols(); ++c) s.data()[c] += pa[c];
  }
  return s;
}

void scale_inplace(Matrix& a, double s) {
  for (double& v : a.vec()) v *= s;
}

void tanh_inplace(Matrix& a) {
  for (double& v : a.vec()) v = std::tanh(v);
}

void check_finite(const Matrix& a, const std::string& what) {
  for (double v : a.vec()) {
    if (!std::isfinite(v)) throw NumericError("non-finite value in " + what);
  }
}

double grad_sq_norm(const GradMap& grads) {
  double s = 0.0;
  for (const auto& [name, g] : grads) {
    for (double v : g.vec()) s += v * v;
  }
  return s;
}

}  // namespace lnadapt
