#pragma once

#include "ppodice/autodiff.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ppodice {

struct GradReport {
  double max_relative_error = 0.0;
  /// One entry per scalar parameter, in tensor order then column-major.
  std::vector<double> errors;
  bool ok = true;  // false if a loss evaluation was non-finite
  std::string failure;
};

/// Builds a scalar loss on `tape` from the given parameter nodes. Must be a
/// deterministic function of the parameter values (freeze any sampling).
using LossBuilder = std::function<ad::Var(ad::Tape& tape, const std::vector<ad::Var>& params)>;

/// Compares reverse-mode gradients with central finite differences of step
/// `eps` (in [1e-7, 1e-3]). Relative error per entry is
/// |analytic - numeric| / max(1, |analytic|, |numeric|).
GradReport grad_check(const LossBuilder& loss, const std::vector<Matrix>& params, double eps = 1e-5);

}  // namespace ppodice
