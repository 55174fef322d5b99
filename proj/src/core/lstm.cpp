#include "lstm.hpp"

#include <cmath>

namespace lnadapt {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Sequence reversed(const Sequence& x) {
  Sequence r(x.rows(), x.cols());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const double* src = x.data() + (x.rows() - 1 - t) * x.cols();
    double* dst = r.data() + t * x.cols();
    for (std::size_t c = 0; c < x.cols(); ++c) dst[c] = src[c];
  }
  return r;
}

}  // namespace

std::vector<ParamBlock> LstmCell::param_blocks(const std::string& prefix) {
  return {{prefix + ".Wi", &Wi}, {prefix + ".Wf", &Wf}, {prefix + ".Wo", &Wo},
          {prefix + ".Wg", &Wg}, {prefix + ".Ri", &Ri}, {prefix + ".Rf", &Rf},
          {prefix + ".Ro", &Ro}, {prefix + ".Rg", &Rg}, {prefix + ".bi", &bi},
          {prefix + ".bf", &bf}, {prefix + ".bo", &bo}, {prefix + ".bg", &bg}};
}

std::vector<ParamBlock> BlstmLayer::param_blocks(const std::string& prefix) {
  auto blocks = fwd.param_blocks(prefix + ".fwd");
  auto bb = bwd.param_blocks(prefix + ".bwd");
  blocks.insert(blocks.end(), bb.begin(), bb.end());
  return blocks;
}

LstmCell make_lstm_cell(std::size_t hidden, std::size_t in, Rng& rng) {
  LstmCell c;
  auto init = [&](Matrix& m, std::size_t r, std::size_t cols) {
    m = Matrix(r, cols);
    double s = 1.0 / std::sqrt(static_cast<double>(cols));
    for (double& v : m.vec()) v = rng.uniform(-s, s);
  };
  init(c.Wi, hidden, in);
  init(c.Wf, hidden, in);
  init(c.Wo, hidden, in);
  init(c.Wg, hidden, in);
  init(c.Ri, hidden, hidden);
  init(c.Rf, hidden, hidden);
  init(c.Ro, hidden, hidden);
  init(c.Rg, hidden, hidden);
  c.bi = Matrix(1, hidden);
  c.bf = Matrix(1, hidden);
  c.bo = Matrix(1, hidden);
  c.bg = Matrix(1, hidden);
  return c;
}

BlstmLayer make_blstm(std::size_t out_dim, std::size_t in, Rng& rng) {
  if (out_dim % 2 != 0) {
    throw ConfigError("BLSTM output width must be even, got " + std::to_string(out_dim));
  }
  BlstmLayer l;
  l.fwd = make_lstm_cell(out_dim / 2, in, rng);
  l.bwd = make_lstm_cell(out_dim / 2, in, rng);
  return l;
}

Sequence lstm_forward(const LstmCell& cell, const Sequence& x, LstmCache* cache) {
  const std::size_t n = x.rows();
  const std::size_t h = cell.hidden();
  if (n == 0) {
    if (cache) *cache = LstmCache{};
    return Sequence(0, h);
  }
  if (x.cols() != cell.in_dim()) {
    throw ShapeError("lstm_forward: input width " + std::to_string(x.cols()) +
                     " != cell input " + std::to_string(cell.in_dim()));
  }
  // Batched input contributions for all frames, then a sequential scan for
  // the recurrent part.
  Sequence pi = matmul_nt(x, cell.Wi);
  Sequence pf = matmul_nt(x, cell.Wf);
  Sequence po = matmul_nt(x, cell.Wo);
  Sequence pg = matmul_nt(x, cell.Wg);
  add_row_inplace(pi, cell.bi);
  add_row_inplace(pf, cell.bf);
  add_row_inplace(po, cell.bo);
  add_row_inplace(pg, cell.bg);

  LstmCache local;
  LstmCache& cc = cache ? *cache : local;
  cc.i = Sequence(n, h);
  cc.f = Sequence(n, h);
  cc.o = Sequence(n, h);
  cc.g = Sequence(n, h);
  cc.c = Sequence(n, h);
  cc.tanh_c = Sequence(n, h);
  cc.h = Sequence(n, h);

  Matrix h_prev(1, h);
  Matrix c_prev(1, h);
  for (std::size_t t = 0; t < n; ++t) {
    Matrix ri = matmul_nt(h_prev, cell.Ri);
    Matrix rf = matmul_nt(h_prev, cell.Rf);
    Matrix ro = matmul_nt(h_prev, cell.Ro);
    Matrix rg = matmul_nt(h_prev, cell.Rg);
    for (std::size_t k = 0; k < h; ++k) {
      double zi = pi(t, k) + ri(0, k);
      double zf = pf(t, k) + rf(0, k);
      double zo = po(t, k) + ro(0, k);
      double zg = pg(t, k) + rg(0, k);
      double iv = sigmoid(zi);
      double fv = sigmoid(zf);
      double ov = sigmoid(zo);
      double gv = std::tanh(zg);
      double cv = fv * c_prev(0, k) + iv * gv;
      double tc = std::tanh(cv);
      double hv = ov * tc;
      cc.i(t, k) = iv;
      cc.f(t, k) = fv;
      cc.o(t, k) = ov;
      cc.g(t, k) = gv;
      cc.c(t, k) = cv;
      cc.tanh_c(t, k) = tc;
      cc.h(t, k) = hv;
      h_prev(0, k) = hv;
      c_prev(0, k) = cv;
    }
  }
  return cc.h;
}

Sequence lstm_backward(const LstmCell& cell, const Sequence& x, const LstmCache& cache,
                       const Sequence& gh, GradMap& grads, const std::string& prefix) {
  const std::size_t n = x.rows();
  const std::size_t h = cell.hidden();
  if (gh.rows() != n || (n > 0 && gh.cols() != h)) {
    throw ShapeError("lstm_backward: upstream grad shape mismatch");
  }
  if (n == 0) return Sequence(0, cell.in_dim());
  // Pre-activation gradients per gate for all frames.
  Sequence dzi(n, h), dzf(n, h), dzo(n, h), dzg(n, h);

  Matrix dh_rec(1, h);
  Matrix dc_next(1, h);
  Matrix dz_row_i(1, h), dz_row_f(1, h), dz_row_o(1, h), dz_row_g(1, h);
  for (std::size_t t = n; t-- > 0;) {
    for (std::size_t k = 0; k < h; ++k) {
      double dh = gh(t, k) + dh_rec(0, k);
      double ov = cache.o(t, k);
      double tc = cache.tanh_c(t, k);
      double dv_o = dh * tc;
      double dc = dh * ov * (1.0 - tc * tc) + dc_next(0, k);
      double iv = cache.i(t, k);
      double fv = cache.f(t, k);
      double gv = cache.g(t, k);
      double c_prev = t > 0 ? cache.c(t - 1, k) : 0.0;
      double dzi_v = dc * gv * iv * (1.0 - iv);
      double dzf_v = dc * c_prev * fv * (1.0 - fv);
      double dzo_v = dv_o * ov * (1.0 - ov);
      double dzg_v = dc * iv * (1.0 - gv * gv);
      dzi(t, k) = dzi_v;
      dzf(t, k) = dzf_v;
      dzo(t, k) = dzo_v;
      dzg(t, k) = dzg_v;
      dc_next(0, k) = dc * fv;
      dz_row_i(0, k) = dzi_v;
      dz_row_f(0, k) = dzf_v;
      dz_row_o(0, k) = dzo_v;
      dz_row_g(0, k) = dzg_v;
    }
    if (t > 0) {
      Matrix r = matmul(dz_row_i, cell.Ri);
      add_inplace(r, matmul(dz_row_f, cell.Rf));
      add_inplace(r, matmul(dz_row_o, cell.Ro));
      add_inplace(r, matmul(dz_row_g, cell.Rg));
      dh_rec = r;
    }
  }

  // h_{t-1} rows: zero row followed by h_0 .. h_{n-2}.
  Sequence h_prev(n, h);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t k = 0; k < h; ++k) h_prev(t, k) = cache.h(t - 1, k);
  }

  grad_add(grads, prefix + ".Wi", matmul_tn(dzi, x));
  grad_add(grads, prefix + ".Wf", matmul_tn(dzf, x));
  grad_add(grads, prefix + ".Wo", matmul_tn(dzo, x));
  grad_add(grads, prefix + ".Wg", matmul_tn(dzg, x));
  grad_add(grads, prefix + ".Ri", matmul_tn(dzi, h_prev));
  grad_add(grads, prefix + ".Rf", matmul_tn(dzf, h_prev));
  grad_add(grads, prefix + ".Ro", matmul_tn(dzo, h_prev));
  grad_add(grads, prefix + ".Rg", matmul_tn(dzg, h_prev));
  grad_add(grads, prefix + ".bi", col_sums(dzi));
  grad_add(grads, prefix + ".bf", col_sums(dzf));
  grad_add(grads, prefix + ".bo", col_sums(dzo));
  grad_add(grads, prefix + ".bg", col_sums(dzg));

  Sequence gx = matmul(dzi, cell.Wi);
  add_inplace(gx, matmul(dzf, cell.Wf));
  add_inplace(gx, matmul(dzo, cell.Wo));
  add_inplace(gx, matmul(dzg, cell.Wg));
  return gx;
}

Sequence blstm_forward(const BlstmLayer& l, const Sequence& x, BlstmCache* cache) {
  const std::size_t n = x.rows();
  const std::size_t h = l.fwd.hidden();
  BlstmCache local;
  BlstmCache& cc = cache ? *cache : local;
  Sequence hf = lstm_forward(l.fwd, x, &cc.fwd);
  Sequence hb = lstm_forward(l.bwd, reversed(x), &cc.bwd);
  Sequence y(n, 2 * h);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < h; ++k) {
      y(t, k) = hf(t, k);
      y(t, h + k) = hb(n - 1 - t, k);
    }
  }
  return y;
}

Sequence blstm_backward(const BlstmLayer& l, const Sequence& x, const BlstmCache& cache,
                        const Sequence& gy, GradMap& grads, const std::string& prefix) {
  const std::size_t n = x.rows();
  const std::size_t h = l.fwd.hidden();
  if (gy.rows() != n || (n > 0 && gy.cols() != 2 * h)) {
    throw ShapeError("blstm_backward: upstream grad shape mismatch");
  }
  Sequence gf(n, h), gb(n, h);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < h; ++k) {
      gf(t, k) = gy(t, k);
      gb(n - 1 - t, k) = gy(t, h + k);
    }
  }
  Sequence xr = reversed(x);
  Sequence gx = lstm_backward(l.fwd, x, cache.fwd, gf, grads, prefix + ".fwd");
  Sequence gxr = lstm_backward(l.bwd, xr, cache.bwd, gb, grads, prefix + ".bwd");
  Sequence gxb = reversed(gxr);
  add_inplace(gx, gxb);
  return gx;
}

}  // namespace lnadapt
