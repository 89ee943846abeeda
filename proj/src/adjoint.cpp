#include "monoid/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace monoid {

AdjointMode parse_adjoint_mode(std::string_view name) {
  if (name == "paper") return AdjointMode::paper;
  if (name == "discrete") return AdjointMode::discrete;
  throw FormatError("unknown adjoint mode '" + std::string(name) + "' (expected paper|discrete)");
}

std::string_view to_string(AdjointMode mode) {
  return mode == AdjointMode::paper ? "paper" : "discrete";
}

namespace {

void check_aligned(const Trajectory& trajectory, const Trajectory& data) {
  if (trajectory.states.size() != data.states.size() ||
      static_cast<int>(trajectory.states.size()) != trajectory.grid.size()) {
    throw ShapeError("trajectory and data are not sampled on the same grid");
  }
}

/// State Jacobians d Phi / dz at every node.
std::vector<Mat2> node_jacobians(const Trajectory& trajectory, const WeightStack& weights,
                                 const ActivationSpec& act) {
  act.require_c1("adjoint solve");
  ForwardCache cache;
  std::vector<Mat2> out;
  out.reserve(trajectory.states.size());
  for (const Vec2& z : trajectory.states) {
    nn_forward(z, weights, act, cache);
    out.push_back(nn_jacobian_z(cache, weights, act));
  }
  return out;
}

/// -(d Phi/dz + diag(0, delta)): Jacobian of the ODE right-hand side.
Mat2 rhs_jacobian(const Mat2& phi_jacobian, double delta) {
  Mat2 k = -phi_jacobian;
  k(1, 1) -= delta;
  return k;
}

void fill_mu(AdjointTrajectory& adj, const std::vector<Mat2>& phi_jacobians) {
  adj.mu.resize(adj.costates.size());
  for (std::size_t n = 0; n < adj.costates.size(); ++n) {
    adj.mu[n] = phi_jacobians[n].transpose() * adj.costates[n];
  }
}

}  // namespace

double trajectory_misfit(const Trajectory& trajectory, const Trajectory& data,
                         const Objective& obj) {
  check_aligned(trajectory, data);
  const TimeGrid& grid = trajectory.grid;
  double sum = 0.0;
  for (int n = 0; n < grid.size(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    sum += grid.trapezoid_weight(n) * (trajectory.states[i] - data.states[i]).squaredNorm();
  }
  double misfit = 0.5 * sum;
  if (obj.terminal_weight > 0.0) {
    misfit += obj.terminal_weight * 0.5 * (trajectory.states.back() - data.states.back()).squaredNorm();
  }
  return misfit;
}

ObjectiveValue eval_objective(const WeightStack& weights, const Dataset& dataset,
                              const OdeModelConfig& model, const ActivationSpec& act,
                              const Objective& obj, const NewtonSettings& newton,
                              Execution exec) {
  ObjectiveValue out;
  out.per_traj.assign(dataset.entries.size(), 0.0);
  for_each_index(dataset.size(), exec, [&](int k) {
    const DatasetEntry& entry = dataset.entries[static_cast<std::size_t>(k)];
    const NetworkDynamics dynamics(weights, act, model);
    const Trajectory traj = simulate_cn(dynamics, entry.z0, dataset.grid, newton);
    out.per_traj[static_cast<std::size_t>(k)] = trajectory_misfit(traj, entry.trajectory, obj);
  });
  out.regularization = obj.alpha * weight_norm_sq(weights);
  out.value = out.regularization;
  for (const double m : out.per_traj) out.value += m;
  return out;
}

AdjointTrajectory adjoint_solve_paper(const Trajectory& trajectory, const Trajectory& data,
                                      const WeightStack& weights, const ActivationSpec& act,
                                      const OdeModelConfig& model, const Objective& obj) {
  check_aligned(trajectory, data);
  const std::vector<Mat2> jac = node_jacobians(trajectory, weights, act);
  const TimeGrid& grid = trajectory.grid;
  const int N = grid.n_steps();
  const double dt = grid.dt();

  AdjointTrajectory adj;
  adj.grid = grid;
  adj.costates.resize(static_cast<std::size_t>(N) + 1);
  const auto last = static_cast<std::size_t>(N);
  adj.costates[last] = -obj.terminal_weight * (trajectory.states[last] - data.states[last]);
  // Backward implicit Euler on  -p' - K^T p = -(z - z_data),  K = dF/dz.
  for (int n = N - 1; n >= 0; --n) {
    const auto i = static_cast<std::size_t>(n);
    const Mat2 k = rhs_jacobian(jac[i], model.delta);
    const Mat2 m = Mat2::Identity() - dt * k.transpose();
    const Vec2 rhs = adj.costates[i + 1] - dt * (trajectory.states[i] - data.states[i]);
    adj.costates[i] = detail::solve2(m, rhs, n);
  }
  fill_mu(adj, jac);
  return adj;
}

AdjointTrajectory adjoint_solve_discrete(const Trajectory& trajectory, const Trajectory& data,
                                         const WeightStack& weights, const ActivationSpec& act,
                                         const OdeModelConfig& model, const Objective& obj) {
  check_aligned(trajectory, data);
  const std::vector<Mat2> jac = node_jacobians(trajectory, weights, act);
  const TimeGrid& grid = trajectory.grid;
  const int N = grid.n_steps();
  const double half_dt = 0.5 * grid.dt();

  // Multipliers lambda_n of the step equations
  //   G_{n-1} = z_n - z_{n-1} - dt/2 (F(z_{n-1}) + F(z_n)) = 0,  n = 1..N,
  // from  (I - dt/2 K_n^T) lambda_n = dJ/dz_n + (I + dt/2 K_n^T) lambda_{n+1}.
  std::vector<Vec2> lambda(static_cast<std::size_t>(N) + 2, Vec2::Zero());
  for (int n = N; n >= 1; --n) {
    const auto i = static_cast<std::size_t>(n);
    const Mat2 kt = rhs_jacobian(jac[i], model.delta).transpose();
    Vec2 source = grid.trapezoid_weight(n) * (trajectory.states[i] - data.states[i]);
    if (n == N) source += obj.terminal_weight * (trajectory.states[i] - data.states[i]);
    const Vec2 rhs = source + lambda[i + 1] + half_dt * (kt * lambda[i + 1]);
    lambda[i] = detail::solve2(Mat2::Identity() - half_dt * kt, rhs, n);
  }

  // Node costates for which the trapezoidal sum sum_n w_n (dPhi/dW)^T p_n
  // equals  -sum_n lambda_{n+1}^T dG_n/dW  exactly.
  AdjointTrajectory adj;
  adj.grid = grid;
  adj.costates.resize(static_cast<std::size_t>(N) + 1);
  adj.costates[0] = -lambda[1];
  for (int n = 1; n < N; ++n) {
    const auto i = static_cast<std::size_t>(n);
    adj.costates[i] = -0.5 * (lambda[i] + lambda[i + 1]);
  }
  adj.costates[static_cast<std::size_t>(N)] = -lambda[static_cast<std::size_t>(N)];
  fill_mu(adj, jac);
  return adj;
}

AdjointTrajectory adjoint_solve(AdjointMode mode, const Trajectory& trajectory,
                                const Trajectory& data, const WeightStack& weights,
                                const ActivationSpec& act, const OdeModelConfig& model,
                                const Objective& obj) {
  return mode == AdjointMode::paper
             ? adjoint_solve_paper(trajectory, data, weights, act, model, obj)
             : adjoint_solve_discrete(trajectory, data, weights, act, model, obj);
}

WeightGradient trajectory_gradient(const WeightStack& weights, const ActivationSpec& act,
                                   const Trajectory& trajectory,
                                   const AdjointTrajectory& adjoint) {
  if (adjoint.costates.size() != trajectory.states.size()) {
    throw ShapeError("adjoint and state trajectories have different lengths");
  }
  WeightGradient grad = WeightGradient::zeros(weights.architecture());
  ForwardCache cache;
  for (int n = 0; n < trajectory.grid.size(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    nn_forward(trajectory.states[i], weights, act, cache);
    accumulate_weight_grad(cache, weights, act, adjoint.costates[i],
                           trajectory.grid.trapezoid_weight(n), grad);
  }
  return grad;
}

namespace {
WeightGradient add_regularization(WeightGradient grad, const WeightStack& weights,
                                  const Objective& obj) {
  if (obj.alpha != 0.0) grad.add_scaled(weights, 2.0 * obj.alpha);
  return grad;
}
}  // namespace

WeightGradient assemble_gradient(const WeightStack& weights, const ActivationSpec& act,
                                 const std::vector<Trajectory>& trajectories,
                                 const std::vector<AdjointTrajectory>& adjoints,
                                 const Objective& obj) {
  if (trajectories.size() != adjoints.size()) {
    throw ShapeError("assemble_gradient: trajectory and adjoint counts differ");
  }
  WeightGradient grad = WeightGradient::zeros(weights.architecture());
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    grad.add_scaled(trajectory_gradient(weights, act, trajectories[k], adjoints[k]), 1.0);
  }
  return add_regularization(std::move(grad), weights, obj);
}

ObjectiveGradient objective_and_gradient(const WeightStack& weights, const Dataset& dataset,
                                         const OdeModelConfig& model,
                                         const ActivationSpec& act, const Objective& obj,
                                         AdjointMode mode, const NewtonSettings& newton,
                                         Execution exec) {
  act.require_c1("objective_and_gradient");
  const auto K = dataset.entries.size();
  std::vector<Trajectory> trajectories(K);
  std::vector<AdjointTrajectory> adjoints(K);
  std::vector<WeightGradient> partials(K, WeightGradient::zeros(weights.architecture()));
  std::vector<double> misfits(K, 0.0);

  for_each_index(static_cast<int>(K), exec, [&](int k) {
    const auto i = static_cast<std::size_t>(k);
    const DatasetEntry& entry = dataset.entries[i];
    const NetworkDynamics dynamics(weights, act, model);
    trajectories[i] = simulate_cn(dynamics, entry.z0, dataset.grid, newton);
    misfits[i] = trajectory_misfit(trajectories[i], entry.trajectory, obj);
    adjoints[i] = adjoint_solve(mode, trajectories[i], entry.trajectory, weights, act, model, obj);
    partials[i] = trajectory_gradient(weights, act, trajectories[i], adjoints[i]);
  });

  // Ordered reduction k = 1..K.
  WeightGradient grad = WeightGradient::zeros(weights.architecture());
  for (const WeightGradient& partial : partials) grad.add_scaled(partial, 1.0);

  ObjectiveValue value;
  value.per_traj = std::move(misfits);
  value.regularization = obj.alpha * weight_norm_sq(weights);
  value.value = value.regularization;
  for (const double m : value.per_traj) value.value += m;

  return {std::move(value), add_regularization(std::move(grad), weights, obj),
          std::move(trajectories), std::move(adjoints)};
}

KktReport kkt_residual(const WeightStack& weights, const WeightGradient& gradient,
                       std::optional<double> ball_C, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("KKT multiplier must be nonnegative");
  KktReport report;
  report.lambda = lambda;
  report.ball_C = ball_C;
  report.weight_norm_sq = weight_norm_sq(weights);
  const Eigen::VectorXd g = gradient.flat();
  if (ball_C) {
    report.stationarity = (g + 2.0 * lambda * weights.flat()).norm();
    report.complementarity = std::abs(lambda * (report.weight_norm_sq - *ball_C));
    report.feasibility = std::max(0.0, report.weight_norm_sq - *ball_C);
  } else {
    report.stationarity = g.norm();
  }
  return report;
}

double least_squares_multiplier(const WeightStack& weights, const WeightGradient& gradient) {
  const double norm_sq = weight_norm_sq(weights);
  if (norm_sq == 0.0) return 0.0;
  const double lambda = -gradient.flat().dot(weights.flat()) / (2.0 * norm_sq);
  return std::max(0.0, lambda);
}

}  // namespace monoid
