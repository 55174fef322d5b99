#pragma once

#include <string>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace lnadapt {

// One direction of an LSTM. Gate convention: sigmoid input/forget/output
// gates, tanh candidate, tanh cell squashing, zero initial state.
struct LstmCell {
  // Input weights, h x in.
  Matrix Wi, Wf, Wo, Wg;
  // Recurrent weights, h x h.
  Matrix Ri, Rf, Ro, Rg;
  // Biases, 1 x h.
  Matrix bi, bf, bo, bg;

  std::size_t in_dim() const { return Wi.cols(); }
  std::size_t hidden() const { return Wi.rows(); }

  std::vector<ParamBlock> param_blocks(const std::string& prefix);
};

// Per-frame values cached during forward for backprop through time.
struct LstmCache {
  Sequence i, f, o, g;       // gate activations, n x h
  Sequence c, tanh_c, h;     // cell state, squashed cell state, output
};

struct BlstmLayer {
  LstmCell fwd;
  LstmCell bwd;

  std::size_t in_dim() const { return fwd.in_dim(); }
  std::size_t out_dim() const { return 2 * fwd.hidden(); }

  std::vector<ParamBlock> param_blocks(const std::string& prefix);
};

struct BlstmCache {
  LstmCache fwd;
  LstmCache bwd;  // indexed over the reversed sequence
};

LstmCell make_lstm_cell(std::size_t hidden, std::size_t in, Rng& rng);
BlstmLayer make_blstm(std::size_t out_dim, std::size_t in, Rng& rng);

Sequence lstm_forward(const LstmCell& cell, const Sequence& x, LstmCache* cache);
// Returns input grads; parameter grads accumulated under prefix + ".Wi" etc.
Sequence lstm_backward(const LstmCell& cell, const Sequence& x, const LstmCache& cache,
                       const Sequence& gh, GradMap& grads, const std::string& prefix);

// Output frame t is [fwd_h_t ; bwd_h_t].
Sequence blstm_forward(const BlstmLayer& l, const Sequence& x, BlstmCache* cache);
Sequence blstm_backward(const BlstmLayer& l, const Sequence& x, const BlstmCache& cache,
                        const Sequence& gy, GradMap& grads, const std::string& prefix);

}  // namespace lnadapt
