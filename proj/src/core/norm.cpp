#include "norm.hpp"

namespace lnadapt {

Sequence apply_norm(const Sequence& x, const DimStats& s) {
  if (x.rows() > 0 && x.cols() != s.mean.size()) {
    throw ShapeError("apply_norm: width " + std::to_string(x.cols()) + " != stats width " +
                     std::to_string(s.mean.size()));
  }
  Sequence y = x;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    for (std::size_t c = 0; c < y.cols(); ++c) {
      y(r, c) = (y(r, c) - s.mean[c]) / s.stdv[c];
    }
  }
  return y;
}

Sequence apply_denorm(const Sequence& x, const DimStats& s) {
  if (x.rows() > 0 && x.cols() != s.mean.size()) {
    throw ShapeError("apply_denorm: width " + std::to_string(x.cols()) +
                     " != stats width " + std::to_string(s.mean.size()));
  }
  Sequence y = x;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    for (std::size_t c = 0; c < y.cols(); ++c) {
      y(r, c) = y(r, c) * s.stdv[c] + s.mean[c];
    }
  }
  return y;
}

}  // namespace lnadapt
