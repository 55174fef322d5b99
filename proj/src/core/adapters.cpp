#include "adapters.hpp"

#include <cmath>

namespace lnadapt {

std::vector<ParamBlock> FullLnAdapter::param_blocks(const std::string& prefix) {
  return {{prefix + ".W", &W}, {prefix + ".b", &b}};
}

std::vector<ParamBlock> LrpdAdapter::param_blocks(const std::string& prefix) {
  return {{prefix + ".U", &U}, {prefix + ".V", &V}, {prefix + ".b", &b}};
}

Sequence full_ln_forward(const FullLnAdapter& a, const Sequence& h) {
  if (h.rows() == 0) return Sequence(0, a.dim());
  if (h.cols() != a.dim()) {
    throw ShapeError("full_ln_forward: frame width " + std::to_string(h.cols()) +
                     " != adapter dim " + std::to_string(a.dim()));
  }
  Sequence y = matmul_nt(h, a.W);
  add_row_inplace(y, a.b);
  return y;
}

Sequence lrpd_forward(const LrpdAdapter& a, const Sequence& h) {
  if (h.rows() == 0) return Sequence(0, a.dim());
  if (h.cols() != a.dim()) {
    throw ShapeError("lrpd_forward: frame width " + std::to_string(h.cols()) +
                     " != adapter dim " + std::to_string(a.dim()));
  }
  Sequence t = matmul_nt(h, a.V);   // n x r
  Sequence y = matmul_nt(t, a.U);   // n x k
  add_inplace(y, h);                // implicit D = I
  add_row_inplace(y, a.b);
  return y;
}

Sequence adapter_forward(const Adapter& a, const Sequence& h) {
  if (auto* f = std::get_if<FullLnAdapter>(&a)) return full_ln_forward(*f, h);
  return lrpd_forward(std::get<LrpdAdapter>(a), h);
}

Sequence full_ln_backward(const FullLnAdapter& a, const Sequence& h, const Sequence& gy,
                          GradMap& grads, const std::string& prefix) {
  if (!gy.same_shape(h)) throw ShapeError("full_ln_backward: grad shape mismatch");
  grad_add(grads, prefix + ".W", matmul_tn(gy, h));
  grad_add(grads, prefix + ".b", col_sums(gy));
  return matmul(gy, a.W);
}

Sequence lrpd_backward(const LrpdAdapter& a, const Sequence& h, const Sequence& gy,
                       GradMap& grads, const std::string& prefix) {
  if (!gy.same_shape(h)) throw ShapeError("lrpd_backward: grad shape mismatch");
  Sequence t = matmul_nt(h, a.V);       // n x r
  Sequence pre = matmul(gy, a.U);       // n x r
  grad_add(grads, prefix + ".U", matmul_tn(gy, t));
  grad_add(grads, prefix + ".V", matmul_tn(pre, h));
  grad_add(grads, prefix + ".b", col_sums(gy));
  Sequence gh = matmul(pre, a.V);
  add_inplace(gh, gy);  // through the fixed identity diagonal
  return gh;
}

Sequence adapter_backward(const Adapter& a, const Sequence& h, const Sequence& gy,
                          GradMap& grads, const std::string& prefix) {
  if (std::holds_alternative<FullLnAdapter>(a)) {
    return full_ln_backward(std::get<FullLnAdapter>(a), h, gy, grads, prefix);
  }
  return lrpd_backward(std::get<LrpdAdapter>(a), h, gy, grads, prefix);
}

Adapter init_adapter(AdapterKind kind, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("init_adapter: k must be >= 1");
  if (kind.type == AdapterKind::full) {
    FullLnAdapter a;
    a.W = Matrix::identity(k);
    a.b = Matrix(1, k);
    return a;
  }
  if (kind.rank < 1) throw ConfigError("init_adapter: lrpd rank must be >= 1");
  if (kind.rank >= k) {
    throw ConfigError("init_adapter: lrpd rank " + std::to_string(kind.rank) +
                      " must be < k = " + std::to_string(k));
  }
  LrpdAdapter a;
  a.U = Matrix(k, kind.rank);
  a.V = Matrix(kind.rank, k);
  a.b = Matrix(1, k);
  // U starts at zero so insertion is an exact no-op (U V = 0); V starts at
  // a healthy scale so the bilinear gradients do not vanish. A symmetric
  // near-zero init for both factors trains orders of magnitude slower.
  Rng rng(seed);
  double bound = 1.0 / std::sqrt(static_cast<double>(k));
  for (double& v : a.V.vec()) v = rng.uniform(-bound, bound);
  return a;
}

std::vector<ParamBlock> adapter_param_blocks(Adapter& a, const std::string& prefix) {
  if (auto* f = std::get_if<FullLnAdapter>(&a)) return f->param_blocks(prefix);
  return std::get<LrpdAdapter>(a).param_blocks(prefix);
}

std::size_t adapter_dim(const Adapter& a) {
  if (auto* f = std::get_if<FullLnAdapter>(&a)) return f->dim();
  return std::get<LrpdAdapter>(a).dim();
}

std::size_t param_count(AdapterKind kind, std::size_t k) {
  if (kind.type == AdapterKind::full) return k * k;
  return k * (2 * kind.rank + 1);
}

std::size_t trainable_count(AdapterKind kind, std::size_t k) {
  if (kind.type == AdapterKind::full) return k * k + k;
  return k * (2 * kind.rank + 1);
}

}  // namespace lnadapt
