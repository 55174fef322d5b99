#pragma once

#include <functional>
#include <string>
#include <vector>

#include "adapters.hpp"
#include "dense.hpp"
#include "lstm.hpp"
#include "matrix.hpp"

namespace lnadapt {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_block;
};

// A parameterized map under test: forward() evaluates with the current
// parameter values (probed in place), backward(gy) returns analytic
// parameter gradients for the given upstream gradient.
struct ProbeTarget {
  std::vector<ParamBlock> params;
  std::function<Sequence()> forward;
  std::function<GradMap(const Sequence& gy)> backward;
};

// Compares analytic gradients of the probe loss sum(y^2) against central
// finite differences for every parameter element.
GradCheckReport grad_check(const ProbeTarget& target, double eps);

ProbeTarget make_probe(DenseLayer& l, const Sequence& x);
ProbeTarget make_probe(LstmCell& c, const Sequence& x);
ProbeTarget make_probe(BlstmLayer& l, const Sequence& x);
ProbeTarget make_probe(Adapter& a, const Sequence& x);

}  // namespace lnadapt
