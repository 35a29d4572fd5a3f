#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "scorelab/tensor.hpp"

namespace testutil {

using scorelab::numcore::NoGradGuard;
using scorelab::numcore::Tensor;

// Central finite difference of a scalar function of one coordinate.
inline double central_diff(const std::function<double()>& eval, double* slot,
                           double h = 1e-6) {
  const double saved = *slot;
  *slot = saved + h;
  const double up = eval();
  *slot = saved - h;
  const double down = eval();
  *slot = saved;
  return (up - down) / (2.0 * h);
}

inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::fabs(a - b) / std::max({floor, std::fabs(a), std::fabs(b)});
}

// Compares every analytic gradient entry of `params` against central finite
// differences of `loss_eval` (which must be deterministic) and returns the
// worst relative error. `atol` absorbs the round-off noise floor of the
// difference quotient itself (~eps * |loss| / h). Gradients must already be
// populated.
inline double max_grad_rel_err(const std::function<double()>& loss_eval,
                               std::vector<Tensor>& params, double h = 1e-6,
                               double atol = 1e-6) {
  double worst = 0.0;
  NoGradGuard ng;
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double fd = central_diff(loss_eval, p.data() + i, h);
      const double an = p.has_grad() ? p.grad()[i] : 0.0;
      const double excess = std::fabs(fd - an) - atol;
      if (excess <= 0.0) continue;
      worst = std::max(
          worst, excess / std::max({1e-6, std::fabs(fd), std::fabs(an)}));
    }
  }
  return worst;
}

}  // namespace testutil
