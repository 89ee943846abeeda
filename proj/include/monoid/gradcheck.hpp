#pragma once

#include <vector>

#include "monoid/adjoint.hpp"

namespace monoid {

struct GradCheckReport {
  /// Relative error of each layer block (A and b together).
  std::vector<double> layer_errors;
  double worst = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Tolerance for the activation: 1e-7 for tanh/identity, 1e-5 for smoothed ReLU.
double default_gradcheck_tolerance(const ActivationSpec& act);

/// Adjoint gradient against central differences of eval_objective (step h,
/// every weight coordinate). Layer error is |g_l - fd_l| / max(|fd_l|, 1e-3 |fd|)
/// in Euclidean norms. FD coordinates are spread over OpenMP threads.
/// Exact ReLU is refused with UsageError.
GradCheckReport gradient_check(const WeightStack& weights, const Dataset& dataset,
                               const OdeModelConfig& model, const ActivationSpec& act,
                               const Objective& obj, double tolerance, double h = 1e-5,
                               AdjointMode mode = AdjointMode::discrete,
                               const NewtonSettings& newton = {},
                               Execution exec = Execution::parallel);

}  // namespace monoid
