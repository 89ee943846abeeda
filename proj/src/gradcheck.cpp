#include "monoid/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace monoid {

double default_gradcheck_tolerance(const ActivationSpec& act) {
  return act.kind() == ActivationKind::smoothed_relu ? 1e-5 : 1e-7;
}

GradCheckReport gradient_check(const WeightStack& weights, const Dataset& dataset,
                               const OdeModelConfig& model, const ActivationSpec& act,
                               const Objective& obj, double tolerance, double h,
                               AdjointMode mode, const NewtonSettings& newton,
                               Execution exec) {
  act.require_c1("gradcheck");
  const NetworkArchitecture arch = weights.architecture();
  const Eigen::VectorXd adjoint =
      objective_and_gradient(weights, dataset, model, act, obj, mode, newton, exec).gradient.flat();

  const Eigen::VectorXd x = weights.flat();
  Eigen::VectorXd fd(x.size());
  for_each_index(static_cast<int>(x.size()), exec, [&](int i) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fp =
        eval_objective(WeightStack::from_flat(arch, xp), dataset, model, act, obj, newton,
                       Execution::serial).value;
    const double fm =
        eval_objective(WeightStack::from_flat(arch, xm), dataset, model, act, obj, newton,
                       Execution::serial).value;
    fd[i] = (fp - fm) / (2.0 * h);
  });

  GradCheckReport report;
  report.tolerance = tolerance;
  const double floor = 1e-3 * fd.norm();
  Eigen::Index pos = 0;
  for (const Layer& layer : weights.layers()) {
    const Eigen::Index n = layer.A.size() + layer.b.size();
    const double diff = (adjoint.segment(pos, n) - fd.segment(pos, n)).norm();
    const double scale = std::max({fd.segment(pos, n).norm(), floor, 1e-300});
    report.layer_errors.push_back(diff / scale);
    pos += n;
  }
  report.worst = *std::max_element(report.layer_errors.begin(), report.layer_errors.end());
  report.passed = report.worst <= tolerance;
  return report;
}

}  // namespace monoid
