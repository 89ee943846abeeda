#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "monoid/adjoint.hpp"

namespace monoid {

enum class BbVariant { bb1, bb2 };

BbVariant parse_bb_variant(std::string_view name);

struct ArmijoSettings {
  double c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 30;
};

struct BbSettings {
  BbVariant variant = BbVariant::bb1;
  double step_min = 1e-8;
  double step_max = 1e2;
  double initial_step = 1e-2;
};

struct TrainConfig {
  Objective objective;
  std::optional<double> ball_C;
  int max_iters = 2000;
  double grad_tol = 1e-8;
  ArmijoSettings armijo;
  BbSettings bb;
  std::uint64_t seed = 0;
  double init_scale = 0.5;
  AdjointMode adjoint = AdjointMode::discrete;
  NewtonSettings newton;
  Execution exec = Execution::parallel;

  /// Throws DomainError on inconsistent settings.
  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  int backtracks = 0;
  std::vector<double> per_traj;
};

enum class StopReason { converged, max_iters, line_search_failed };

std::string_view to_string(StopReason reason);

struct TrainReport {
  std::vector<IterationRecord> history;
  WeightStack weights;
  KktReport kkt;
  StopReason reason = StopReason::max_iters;
  /// Diagnostic when the run ended on a line-search failure.
  std::string message;
};

/// Entries drawn uniformly from [-init_scale, init_scale] by a seeded
/// 64-bit Mersenne Twister (53-bit mantissa mapping, platform independent).
WeightStack init_weights(const NetworkArchitecture& arch, std::uint64_t seed, double init_scale);

/// BB1 = <s,s>/<s,y>, BB2 = <s,y>/<y,y>, clamped to [step_min, step_max];
/// non-positive or non-finite ratios fall back to initial_step.
double bb_step(const Eigen::VectorXd& dW, const Eigen::VectorXd& dG, const BbSettings& bb);

struct ArmijoResult {
  Eigen::VectorXd point;
  double step = 0.0;
  int backtracks = 0;
  double value = 0.0;
};

using ScalarObjective = std::function<double(const Eigen::VectorXd&)>;
using Projection = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Backtracks step = step0 * backtrack^n until
///   J(P(x - step g)) <= J(x) - c1 / step * |P(x - step g) - x|^2,
/// which is J(x - step g) <= J(x) - c1 step |g|^2 when there is no projection.
/// Throws LineSearchError when max_backtracks is exhausted.
ArmijoResult armijo_search(const Eigen::VectorXd& x, const Eigen::VectorXd& gradient,
                           double value, double step0, const ScalarObjective& objective,
                           const ArmijoSettings& settings, const Projection& project = {},
                           int iteration = 0);

using IterationCallback = std::function<void(const IterationRecord&)>;

/// Projected Barzilai-Borwein descent with Armijo backtracking.
/// `initial` overrides the seeded initialization. An exhausted line search
/// ends the run with StopReason::line_search_failed; solver failures at the
/// current iterate propagate as SolverError.
TrainReport train(const Dataset& dataset, const NetworkArchitecture& arch,
                  const ActivationSpec& act, const OdeModelConfig& model,
                  const TrainConfig& cfg, std::optional<WeightStack> initial = std::nullopt,
                  const IterationCallback& on_iteration = {});

/// Norm used for the stopping test: |g| without a ball; on the ball boundary
/// the component of g not balanced by a nonnegative multiplier.
double stationarity_norm(const WeightStack& weights, const WeightGradient& gradient,
                         std::optional<double> ball_C);

}  // namespace monoid
