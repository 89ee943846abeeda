#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "monoid/forward.hpp"

namespace monoid {

/// J(W) = 1/2 sum_k int_0^T |z_k - z_data,k|^2 dt
///        + terminal_weight * 1/2 sum_k |z_k(T) - z_data,k(T)|^2 + alpha |W|^2.
struct Objective {
  double alpha = 0.01;
  double terminal_weight = 0.0;
};

enum class AdjointMode {
  /// Implicit Euler on the continuous adjoint equation (first order in dt).
  paper,
  /// Exact transpose of the Crank-Nicolson step; gradients of the discrete
  /// objective to solver tolerance.
  discrete,
};

AdjointMode parse_adjoint_mode(std::string_view name);
std::string_view to_string(AdjointMode mode);

/// Costates p_k at every time node and mu_k = (d Phi / dz (z_k))^T p_k.
///
/// In both modes the gradient is assembled with the same trapezoidal rule,
///   dJ/dW = sum_k w_k (dPhi/dW (z_k))^T p_k + 2 alpha W,
/// so the discrete mode stores the node costates that make that sum exact.
struct AdjointTrajectory {
  TimeGrid grid{1.0, 1};
  std::vector<Vec2> costates;
  std::vector<Vec2> mu;
};

struct ObjectiveValue {
  double value = 0.0;
  double regularization = 0.0;
  /// Tracking (+ terminal) misfit per dataset entry.
  std::vector<double> per_traj;

  double tracking() const noexcept { return value - regularization; }
};

/// Tracking plus terminal misfit of one trajectory against its data.
double trajectory_misfit(const Trajectory& trajectory, const Trajectory& data,
                         const Objective& obj);

ObjectiveValue eval_objective(const WeightStack& weights, const Dataset& dataset,
                              const OdeModelConfig& model, const ActivationSpec& act,
                              const Objective& obj, const NewtonSettings& newton = {},
                              Execution exec = Execution::parallel);

AdjointTrajectory adjoint_solve_paper(const Trajectory& trajectory, const Trajectory& data,
                                      const WeightStack& weights, const ActivationSpec& act,
                                      const OdeModelConfig& model, const Objective& obj);

AdjointTrajectory adjoint_solve_discrete(const Trajectory& trajectory, const Trajectory& data,
                                         const WeightStack& weights, const ActivationSpec& act,
                                         const OdeModelConfig& model, const Objective& obj);

AdjointTrajectory adjoint_solve(AdjointMode mode, const Trajectory& trajectory,
                                const Trajectory& data, const WeightStack& weights,
                                const ActivationSpec& act, const OdeModelConfig& model,
                                const Objective& obj);

/// Weight sensitivity sum of one trajectory, without the regularization term.
WeightGradient trajectory_gradient(const WeightStack& weights, const ActivationSpec& act,
                                   const Trajectory& trajectory,
                                   const AdjointTrajectory& adjoint);

WeightGradient assemble_gradient(const WeightStack& weights, const ActivationSpec& act,
                                 const std::vector<Trajectory>& trajectories,
                                 const std::vector<AdjointTrajectory>& adjoints,
                                 const Objective& obj);

struct ObjectiveGradient {
  ObjectiveValue objective;
  WeightGradient gradient;
  std::vector<Trajectory> trajectories;
  std::vector<AdjointTrajectory> adjoints;
};

/// Forward solves, adjoint solves and gradient assembly over the whole dataset.
/// The parallel path distributes dataset entries over OpenMP threads and sums
/// per-entry contributions in entry order, so both paths agree bit for bit.
ObjectiveGradient objective_and_gradient(const WeightStack& weights, const Dataset& dataset,
                                         const OdeModelConfig& model,
                                         const ActivationSpec& act, const Objective& obj,
                                         AdjointMode mode = AdjointMode::discrete,
                                         const NewtonSettings& newton = {},
                                         Execution exec = Execution::parallel);

/// First-order optimality residuals for  min J  s.t.  |W|^2 <= C.
struct KktReport {
  double stationarity = 0.0;
  double complementarity = 0.0;
  double feasibility = 0.0;
  double lambda = 0.0;
  double weight_norm_sq = 0.0;
  std::optional<double> ball_C;
};

/// stationarity = |g + 2 lambda W| with a ball, |g| without;
/// complementarity = |lambda (|W|^2 - C)|; feasibility = max(0, |W|^2 - C).
KktReport kkt_residual(const WeightStack& weights, const WeightGradient& gradient,
                       std::optional<double> ball_C, double lambda);

/// lambda >= 0 minimizing |g + 2 lambda W|.
double least_squares_multiplier(const WeightStack& weights, const WeightGradient& gradient);

}  // namespace monoid
