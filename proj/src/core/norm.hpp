#pragma once

#include <array>
#include <vector>

#include "streams.hpp"

namespace lnadapt {

// Per-dimension mean and standard deviation.
struct DimStats {
  std::vector<double> mean;
  std::vector<double> stdv;

  bool operator==(const DimStats&) const = default;
};

// 0-mean / unit-variance statistics for inputs and each target stream,
// computed from the training split only.
struct NormStats {
  DimStats input;
  std::array<DimStats, kNumStreams> streams;

  bool operator==(const NormStats&) const = default;
};

Sequence apply_norm(const Sequence& x, const DimStats& s);
Sequence apply_denorm(const Sequence& x, const DimStats& s);

}  // namespace lnadapt
