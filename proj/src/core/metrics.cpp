#include "metrics.hpp"

#include <cmath>

#include "textio.hpp"

namespace lnadapt {

std::string MetricsReport::csv_header() {
  return "system,n_adapt,mcd,f0_rmse,uv_err,mse,n_frames";
}

std::string MetricsReport::csv_row(const std::string& system, int n_adapt) const {
  return system + "," + std::to_string(n_adapt) + "," + fmt_g9(mcd) + "," +
         fmt_g9(f0_rmse) + "," + fmt_g9(uv_error) + "," + fmt_g9(overall_mse) + "," +
         std::to_string(n_frames);
}

double mcd(const Sequence& ref_mcep, const Sequence& hyp_mcep) {
  if (!ref_mcep.same_shape(hyp_mcep)) {
    throw ShapeError("mcd: ref " + std::to_string(ref_mcep.rows()) + "x" +
                     std::to_string(ref_mcep.cols()) + " vs hyp " +
                     std::to_string(hyp_mcep.rows()) + "x" +
                     std::to_string(hyp_mcep.cols()));
  }
  if (ref_mcep.rows() == 0) return 0.0;
  const double k = 10.0 / std::log(10.0);
  double acc = 0.0;
  for (std::size_t t = 0; t < ref_mcep.rows(); ++t) {
    double ss = 0.0;
    for (std::size_t d = 1; d < ref_mcep.cols(); ++d) {
      double diff = ref_mcep(t, d) - hyp_mcep(t, d);
      ss += diff * diff;
    }
    acc += k * std::sqrt(2.0 * ss);
  }
  return acc / static_cast<double>(ref_mcep.rows());
}

double f0_rmse(const Sequence& ref_lf0, const Sequence& hyp_lf0,
               const std::vector<int>& ref_uv, const std::vector<int>& hyp_uv,
               bool* defined) {
  if (ref_lf0.rows() != hyp_lf0.rows() || ref_lf0.rows() != ref_uv.size() ||
      ref_uv.size() != hyp_uv.size()) {
    throw ShapeError("f0_rmse: sequence lengths differ");
  }
  double ss = 0.0;
  long n = 0;
  for (std::size_t t = 0; t < ref_uv.size(); ++t) {
    if (!ref_uv[t] || !hyp_uv[t]) continue;
    double diff = std::exp(ref_lf0(t, 0)) - std::exp(hyp_lf0(t, 0));
    ss += diff * diff;
    ++n;
  }
  if (defined) *defined = n > 0;
  if (n == 0) return 0.0;
  return std::sqrt(ss / static_cast<double>(n));
}

double uv_error(const std::vector<int>& ref_uv, const Sequence& hyp_uv_regressed) {
  if (ref_uv.size() != hyp_uv_regressed.rows()) {
    throw ShapeError("uv_error: sequence lengths differ");
  }
  if (ref_uv.empty()) return 0.0;
  long wrong = 0;
  for (std::size_t t = 0; t < ref_uv.size(); ++t) {
    int hyp_voiced = hyp_uv_regressed(t, 0) > 0.5 ? 1 : 0;
    if (hyp_voiced != (ref_uv[t] ? 1 : 0)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(ref_uv.size());
}

double overall_mse(const StreamSeqs& preds, const StreamSeqs& targets) {
  double total = 0.0;
  for (Stream s : kAllStreams) {
    const Sequence& p = preds[sidx(s)];
    const Sequence& t = targets[sidx(s)];
    if (!p.same_shape(t)) {
      throw ShapeError("overall_mse: shape mismatch in stream " + stream_name(s));
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double d = p.data()[i] - t.data()[i];
      ss += d * d;
    }
    total += p.size() > 0 ? ss / static_cast<double>(p.size()) : 0.0;
  }
  return total / static_cast<double>(kNumStreams);
}

}  // namespace lnadapt
