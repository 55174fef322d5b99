#include "dense.hpp"

namespace lnadapt {

std::vector<ParamBlock> DenseLayer::param_blocks(const std::string& prefix) {
  return {{prefix + ".W", &W}, {prefix + ".b", &b}};
}

DenseLayer make_dense(std::size_t out, std::size_t in, Activation act, Rng& rng) {
  DenseLayer l;
  l.W = Matrix(out, in);
  l.b = Matrix(1, out);
  l.act = act;
  double s = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& v : l.W.vec()) v = rng.uniform(-s, s);
  return l;
}

Sequence dense_forward(const DenseLayer& l, const Sequence& x) {
  if (x.rows() == 0) return Sequence(0, l.out_dim());
  if (x.cols() != l.in_dim()) {
    throw ShapeError("dense_forward: input width " + std::to_string(x.cols()) +
                     " != layer input " + std::to_string(l.in_dim()));
  }
  Sequence y = matmul_nt(x, l.W);
  add_row_inplace(y, l.b);
  if (l.act == Activation::tanh_act) tanh_inplace(y);
  return y;
}

Sequence dense_backward(const DenseLayer& l, const Sequence& x, const Sequence& y,
                        const Sequence& gy, GradMap& grads, const std::string& prefix) {
  if (!gy.same_shape(y) || x.rows() != y.rows()) {
    throw ShapeError("dense_backward: upstream grad shape mismatch");
  }
  Sequence gpre = gy;
  if (l.act == Activation::tanh_act) {
    double* gp = gpre.data();
    const double* yp = y.data();
    for (std::size_t i = 0; i < gpre.size(); ++i) gp[i] *= 1.0 - yp[i] * yp[i];
  }
  grad_add(grads, prefix + ".W", matmul_tn(gpre, x));
  grad_add(grads, prefix + ".b", col_sums(gpre));
  return matmul(gpre, l.W);
}

}  // namespace lnadapt
