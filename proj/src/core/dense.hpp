#pragma once

#include <string>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace lnadapt {

enum class Activation { tanh_act, linear };

struct DenseLayer {
  Matrix W;  // out x in
  Matrix b;  // 1 x out
  Activation act = Activation::linear;

  std::size_t in_dim() const { return W.cols(); }
  std::size_t out_dim() const { return W.rows(); }

  std::vector<ParamBlock> param_blocks(const std::string& prefix);
};

DenseLayer make_dense(std::size_t out, std::size_t in, Activation act, Rng& rng);

// Per frame: act(W x + b). Sequence length preserved.
Sequence dense_forward(const DenseLayer& l, const Sequence& x);

// y is the cached forward output (needed for the tanh derivative).
// Returns the input gradient; parameter grads are accumulated into `grads`
// under `prefix` + {".W", ".b"}.
Sequence dense_backward(const DenseLayer& l, const Sequence& x, const Sequence& y,
                        const Sequence& gy, GradMap& grads, const std::string& prefix);

}  // namespace lnadapt
