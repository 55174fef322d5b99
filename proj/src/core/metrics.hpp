#pragma once

#include <string>
#include <vector>

#include "streams.hpp"

namespace lnadapt {

struct MetricsReport {
  double mcd = 0.0;          // dB
  double f0_rmse = 0.0;      // Hz
  double uv_error = 0.0;     // fraction
  double overall_mse = 0.0;  // normalized space
  long n_frames = 0;
  bool f0_defined = true;    // false when no frame is voiced in both ref and hyp

  std::string csv_row(const std::string& system, int n_adapt) const;
  static std::string csv_header();
};

// Mean over frames of (10/ln 10) * sqrt(2 * sum_{d>=1} (c_d - c^_d)^2);
// dim 0 (energy) excluded per the Kubichek convention.
double mcd(const Sequence& ref_mcep, const Sequence& hyp_mcep);

// RMSE in Hz of exp(lf0) over frames voiced in BOTH ref and hyp; 0 when no
// such frame exists (flag via defined out-param if given). Only column 0
// (the static value) of the lf0 sequences is used.
double f0_rmse(const Sequence& ref_lf0, const Sequence& hyp_lf0,
               const std::vector<int>& ref_uv, const std::vector<int>& hyp_uv,
               bool* defined = nullptr);

// Fraction of frames where (hyp > 0.5) disagrees with the reference flag.
// hyp == 0.5 exactly classifies as unvoiced (strict greater-than).
double uv_error(const std::vector<int>& ref_uv, const Sequence& hyp_uv_regressed);

// Identical definition to the training criterion: mean over streams of the
// per-stream MSE over all frames and dims.
double overall_mse(const StreamSeqs& preds, const StreamSeqs& targets);

}  // namespace lnadapt
