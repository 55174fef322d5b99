#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace lnadapt {

// Speaker-specific linear network with an unconstrained k x k transform.
// Fresh insertion is an exact no-op: W = I, b = 0.
struct FullLnAdapter {
  Matrix W;  // k x k
  Matrix b;  // 1 x k

  std::size_t dim() const { return W.rows(); }
  std::vector<ParamBlock> param_blocks(const std::string& prefix);
};

// Low-rank plus diagonal decomposition of the transform: W ~ U V + D with D
// fixed to identity. D is never stored or trained; the forward adds the
// input straight through, so identity cannot drift.
struct LrpdAdapter {
  Matrix U;  // k x r
  Matrix V;  // r x k
  Matrix b;  // 1 x k

  std::size_t dim() const { return U.rows(); }
  std::size_t rank() const { return U.cols(); }
  std::vector<ParamBlock> param_blocks(const std::string& prefix);
};

using Adapter = std::variant<FullLnAdapter, LrpdAdapter>;

struct AdapterKind {
  enum Type { full, lrpd } type = full;
  std::size_t rank = 0;  // lrpd only

  static AdapterKind full_kind() { return {full, 0}; }
  static AdapterKind lrpd_kind(std::size_t r) { return {lrpd, r}; }
};

Sequence full_ln_forward(const FullLnAdapter& a, const Sequence& h);
// h_out = U (V h) + h + b, computed via the two small products.
Sequence lrpd_forward(const LrpdAdapter& a, const Sequence& h);
Sequence adapter_forward(const Adapter& a, const Sequence& h);

Sequence full_ln_backward(const FullLnAdapter& a, const Sequence& h, const Sequence& gy,
                          GradMap& grads, const std::string& prefix);
Sequence lrpd_backward(const LrpdAdapter& a, const Sequence& h, const Sequence& gy,
                       GradMap& grads, const std::string& prefix);
Sequence adapter_backward(const Adapter& a, const Sequence& h, const Sequence& gy,
                          GradMap& grads, const std::string& prefix);

Adapter init_adapter(AdapterKind kind, std::size_t k, std::uint64_t seed);

std::vector<ParamBlock> adapter_param_blocks(Adapter& a, const std::string& prefix);
std::size_t adapter_dim(const Adapter& a);

// Parameter accounting: full = k^2, lrpd = k(2r+1), bias included.
std::size_t param_count(AdapterKind kind, std::size_t k);
// True trainable totals (full also carries its bias).
std::size_t trainable_count(AdapterKind kind, std::size_t k);

}  // namespace lnadapt
