#include "monoid/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace monoid {

BbVariant parse_bb_variant(std::string_view name) {
  if (name == "BB1" || name == "bb1") return BbVariant::bb1;
  if (name == "BB2" || name == "bb2") return BbVariant::bb2;
  throw FormatError("unknown Barzilai-Borwein variant '" + std::string(name) + "'");
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::converged: return "converged";
    case StopReason::max_iters: return "max_iters";
    case StopReason::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  if (!(objective.alpha >= 0.0)) throw DomainError("alpha must be >= 0");
  if (!(objective.terminal_weight >= 0.0)) throw DomainError("terminal_weight must be >= 0");
  if (ball_C && !(*ball_C > 0.0)) throw DomainError("ball_C must be positive");
  if (max_iters <= 0) throw DomainError("max_iters must be positive");
  if (!(grad_tol > 0.0)) throw DomainError("grad_tol must be positive");
  if (!(armijo.c1 > 0.0 && armijo.c1 < 1.0)) throw DomainError("armijo c1 must lie in (0, 1)");
  if (!(armijo.backtrack > 0.0 && armijo.backtrack < 1.0)) {
    throw DomainError("armijo backtrack must lie in (0, 1)");
  }
  if (armijo.max_backtracks < 0) throw DomainError("max_backtracks must be >= 0");
  if (!(bb.step_min > 0.0 && bb.step_min <= bb.initial_step && bb.initial_step <= bb.step_max)) {
    throw DomainError("need 0 < step_min <= initial_step <= step_max");
  }
  if (!(init_scale >= 0.0)) throw DomainError("init_scale must be >= 0");
  if (!(newton.tol > 0.0) || newton.max_iter <= 0) throw DomainError("invalid Newton settings");
}

WeightStack init_weights(const NetworkArchitecture& arch, std::uint64_t seed, double init_scale) {
  std::mt19937_64 rng(seed);
  Eigen::VectorXd flat(static_cast<Eigen::Index>(arch.parameter_count()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    flat[i] = init_scale * (2.0 * unit - 1.0);
  }
  return WeightStack::from_flat(arch, flat);
}

double bb_step(const Eigen::VectorXd& dW, const Eigen::VectorXd& dG, const BbSettings& bb) {
  const double sy = dW.dot(dG);
  const double ratio = bb.variant == BbVariant::bb1 ? dW.squaredNorm() / sy : sy / dG.squaredNorm();
  if (!std::isfinite(ratio) || !(ratio > 0.0)) return bb.initial_step;
  return std::clamp(ratio, bb.step_min, bb.step_max);
}

ArmijoResult armijo_search(const Eigen::VectorXd& x, const Eigen::VectorXd& gradient,
                           double value, double step0, const ScalarObjective& objective,
                           const ArmijoSettings& settings, const Projection& project,
                           int iteration) {
  double step = step0;
  for (int n = 0; n <= settings.max_backtracks; ++n) {
    Eigen::VectorXd trial = x - step * gradient;
    if (project) trial = project(trial);
    const double decrease = project ? (trial - x).squaredNorm() / step
                                    : step * gradient.squaredNorm();
    const double trial_value = objective(trial);
    if (trial_value <= value - settings.c1 * decrease) {
      return {std::move(trial), step, n, trial_value};
    }
    step *= settings.backtrack;
  }
  throw LineSearchError("Armijo backtracking exhausted after " +
                            std::to_string(settings.max_backtracks) + " reductions",
                        iteration);
}

namespace {
bool on_boundary(const WeightStack& weights, std::optional<double> ball_C) {
  return ball_C && weight_norm_sq(weights) >= *ball_C * (1.0 - 1e-10);
}
}  // namespace

double stationarity_norm(const WeightStack& weights, const WeightGradient& gradient,
                         std::optional<double> ball_C) {
  if (on_boundary(weights, ball_C)) {
    const double lambda = least_squares_multiplier(weights, gradient);
    return (gradient.flat() + 2.0 * lambda * weights.flat()).norm();
  }
  return gradient.flat().norm();
}

TrainReport train(const Dataset& dataset, const NetworkArchitecture& arch,
                  const ActivationSpec& act, const OdeModelConfig& model,
                  const TrainConfig& cfg, std::optional<WeightStack> initial,
                  const IterationCallback& on_iteration) {
  cfg.validate();
  act.require_c1("train");

  WeightStack weights = initial ? *initial : init_weights(arch, cfg.seed, cfg.init_scale);
  if (!(weights.architecture() == arch)) throw ShapeError("initial weights do not match architecture");
  if (cfg.ball_C) weights = project_ball(weights, *cfg.ball_C);

  auto evaluate = [&](const WeightStack& w) {
    return objective_and_gradient(w, dataset, model, act, cfg.objective, cfg.adjoint,
                                  cfg.newton, cfg.exec);
  };

  // Trial points are evaluated with their gradient; an accepted trial is
  // reused instead of being solved twice.
  std::optional<ObjectiveGradient> last_trial;
  Eigen::VectorXd last_trial_point;
  const ScalarObjective objective = [&](const Eigen::VectorXd& x) {
    try {
      last_trial = evaluate(WeightStack::from_flat(arch, x));
      last_trial_point = x;
      return last_trial->objective.value;
    } catch (const SolverError&) {
      last_trial.reset();
      return std::numeric_limits<double>::infinity();
    }
  };
  Projection projection;
  if (cfg.ball_C) {
    projection = [&](const Eigen::VectorXd& x) {
      return project_ball(WeightStack::from_flat(arch, x), *cfg.ball_C).flat();
    };
  }

  ObjectiveGradient current = evaluate(weights);
  Eigen::VectorXd x = weights.flat();
  Eigen::VectorXd g = current.gradient.flat();
  double grad_norm = stationarity_norm(weights, current.gradient, cfg.ball_C);

  TrainReport report{{}, weights, {}, StopReason::max_iters, {}};
  auto record = [&](int iter, double step, int backtracks) {
    IterationRecord rec{iter, current.objective.value, grad_norm, step, backtracks,
                        current.objective.per_traj};
    if (on_iteration) on_iteration(rec);
    report.history.push_back(std::move(rec));
  };
  record(0, 0.0, 0);

  double step0 = cfg.bb.initial_step;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    if (grad_norm <= cfg.grad_tol) {
      report.reason = StopReason::converged;
      break;
    }
    ArmijoResult accepted;
    try {
      accepted = armijo_search(x, g, current.objective.value, step0, objective, cfg.armijo,
                               projection, iter);
    } catch (const LineSearchError& e) {
      report.reason = StopReason::line_search_failed;
      report.message = e.what();
      break;
    }
    if (last_trial && last_trial_point == accepted.point) {
      current = std::move(*last_trial);
    } else {
      current = evaluate(WeightStack::from_flat(arch, accepted.point));
    }
    last_trial.reset();

    const Eigen::VectorXd g_new = current.gradient.flat();
    step0 = bb_step(accepted.point - x, g_new - g, cfg.bb);
    x = std::move(accepted.point);
    g = g_new;
    weights = WeightStack::from_flat(arch, x);
    grad_norm = stationarity_norm(weights, current.gradient, cfg.ball_C);
    record(iter, accepted.step, accepted.backtracks);
  }
  if (report.reason == StopReason::max_iters && grad_norm <= cfg.grad_tol) {
    report.reason = StopReason::converged;
  }

  const double lambda =
      on_boundary(weights, cfg.ball_C) ? least_squares_multiplier(weights, current.gradient) : 0.0;
  report.kkt = kkt_residual(weights, current.gradient, cfg.ball_C, lambda);
  report.weights = std::move(weights);
  return report;
}

}  // namespace monoid
