#include "gradcheck.hpp"

#include <cmath>

#include "error.hpp"

namespace lnadapt {

namespace {

double probe_loss(const Sequence& y) {
  double s = 0.0;
  for (double v : y.vec()) s += v * v;
  if (!std::isfinite(s)) throw NumericError("grad_check: non-finite probe loss");
  return s;
}

Sequence loss_grad(const Sequence& y) {
  Sequence g = y;
  scale_inplace(g, 2.0);
  return g;
}

}  // namespace

GradCheckReport grad_check(const ProbeTarget& target, double eps) {
  if (!(eps > 0.0)) throw ConfigError("grad_check: eps must be > 0");
  GradMap analytic = target.backward(loss_grad(target.forward()));
  GradCheckReport report;
  for (const ParamBlock& block : target.params) {
    double block_err = 0.0;
    Matrix& t = *block.tensor;
    const Matrix* ga = nullptr;
    auto it = analytic.find(block.name);
    if (it != analytic.end()) ga = &it->second;
    for (std::size_t i = 0; i < t.size(); ++i) {
      double saved = t.data()[i];
      t.data()[i] = saved + eps;
      double lp = probe_loss(target.forward());
      t.data()[i] = saved - eps;
      double lm = probe_loss(target.forward());
      t.data()[i] = saved;
      double numeric = (lp - lm) / (2.0 * eps);
      double a = ga ? ga->data()[i] : 0.0;
      double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      double rel = std::fabs(a - numeric) / denom;
      // Treat tiny absolute disagreement as noise regardless of scale.
      if (std::fabs(a - numeric) < 1e-10) rel = 0.0;
      block_err = std::max(block_err, rel);
    }
    if (report.worst_block.empty() || block_err > report.max_rel_err) {
      report.max_rel_err = block_err;
      report.worst_block = block.name;
    }
  }
  return report;
}

ProbeTarget make_probe(DenseLayer& l, const Sequence& x) {
  ProbeTarget t;
  t.params = l.param_blocks("dense");
  t.forward = [&l, x]() { return dense_forward(l, x); };
  t.backward = [&l, x](const Sequence& gy) {
    GradMap g;
    Sequence y = dense_forward(l, x);
    dense_backward(l, x, y, gy, g, "dense");
    return g;
  };
  return t;
}

ProbeTarget make_probe(LstmCell& c, const Sequence& x) {
  ProbeTarget t;
  t.params = c.param_blocks("cell");
  t.forward = [&c, x]() { return lstm_forward(c, x, nullptr); };
  t.backward = [&c, x](const Sequence& gy) {
    GradMap g;
    LstmCache cache;
    lstm_forward(c, x, &cache);
    lstm_backward(c, x, cache, gy, g, "cell");
    return g;
  };
  return t;
}

ProbeTarget make_probe(BlstmLayer& l, const Sequence& x) {
  ProbeTarget t;
  t.params = l.param_blocks("blstm");
  t.forward = [&l, x]() { return blstm_forward(l, x, nullptr); };
  t.backward = [&l, x](const Sequence& gy) {
    GradMap g;
    BlstmCache cache;
    blstm_forward(l, x, &cache);
    blstm_backward(l, x, cache, gy, g, "blstm");
    return g;
  };
  return t;
}

ProbeTarget make_probe(Adapter& a, const Sequence& x) {
  ProbeTarget t;
  t.params = adapter_param_blocks(a, "adapter");
  t.forward = [&a, x]() { return adapter_forward(a, x); };
  t.backward = [&a, x](const Sequence& gy) {
    GradMap g;
    adapter_backward(a, x, gy, g, "adapter");
    return g;
  };
  return t;
}

}  // namespace lnadapt
