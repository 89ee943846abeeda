#pragma once

#include <cmath>
#include <vector>

#include "monoid/activations.hpp"
#include "monoid/error.hpp"
#include "monoid/nn.hpp"
#include "monoid/parallel.hpp"

namespace monoid {

/// Uniform grid t_k = k dt, k = 0..n_steps on [0, T].
class TimeGrid {
 public:
  TimeGrid(double T, int n_steps);

  /// Grid with the step closest to `dt` that divides T evenly.
  static TimeGrid with_step(double T, double dt);

  double final_time() const noexcept { return T_; }
  int n_steps() const noexcept { return n_steps_; }
  int size() const noexcept { return n_steps_ + 1; }
  double dt() const noexcept { return T_ / n_steps_; }
  double time(int k) const noexcept { return k * dt(); }

  /// Trapezoidal quadrature weight of node k.
  double trapezoid_weight(int k) const noexcept {
    return (k == 0 || k == n_steps_) ? 0.5 * dt() : dt();
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double T_;
  int n_steps_;
};

struct Forcing {
  double v = 0.5;
  double w = 0.056;
};

/// Parameters of the ODE model  v' = f_v - phi_v,  w' = f_w - delta w - phi_w.
struct OdeModelConfig {
  double delta = 0.064;
  Forcing forcing;
};

/// Cubic FitzHugh-Nagumo reaction:
///   v' = f_v - (a v^3 + b v^2 + c v + d w),   w' = f_w - (eta w + gamma v).
struct FhParams {
  double a = 1.0 / 3.0;
  double b = 0.0;
  double c = -1.0;
  double d = 1.0;
  double eta = 0.064;
  double gamma = -0.08;

  /// Classic oscillatory FitzHugh-Nagumo written in the form above. Default.
  static FhParams classic() { return {}; }

  /// The printed values a=-1/3, c=1, d=-1, gamma=0.08 read literally in the
  /// form above. The cubic then has the wrong sign and trajectories leaving
  /// the basin of the stable point blow up in finite time.
  static FhParams paper_literal() { return {-1.0 / 3.0, 0.0, 1.0, -1.0, 0.064, 0.08}; }
};

Vec2 fh_rhs(const Vec2& z, const FhParams& params, const Forcing& forcing);
Mat2 fh_jacobian(const Vec2& z, const FhParams& params);

struct NewtonSettings {
  double tol = 1e-10;
  int max_iter = 25;
};

struct StepInfo {
  int iterations = 0;
  double residual = 0.0;
};

/// Time-sampled state z_k = (v_k, w_k); steps[k] describes the solve of z_{k+1}.
struct Trajectory {
  TimeGrid grid{1.0, 1};
  std::vector<Vec2> states;
  std::vector<StepInfo> steps;
};

/// FitzHugh-Nagumo right-hand side as a dynamics descriptor.
struct FhDynamics {
  FhParams params;
  Forcing forcing;

  void evaluate(const Vec2& z, Vec2& value, Mat2& jacobian) const {
    value = fh_rhs(z, params, forcing);
    jacobian = fh_jacobian(z, params);
  }
};

/// z' = f - Phi(z, W) - (0, delta w).
class NetworkDynamics {
 public:
  NetworkDynamics(const WeightStack& weights, const ActivationSpec& act,
                  const OdeModelConfig& model);

  void evaluate(const Vec2& z, Vec2& value, Mat2& jacobian) const;

 private:
  const WeightStack* weights_;
  ActivationSpec act_;
  OdeModelConfig model_;
  mutable ForwardCache cache_;
};

template <typename D>
concept Dynamics = requires(const D& d, const Vec2& z, Vec2& f, Mat2& j) {
  d.evaluate(z, f, j);
};

namespace detail {
Vec2 solve2(const Mat2& m, const Vec2& rhs, int step);
}

/// Crank-Nicolson with Newton on each step:
///   z_{k+1} - z_k = dt/2 (F(z_k) + F(z_{k+1})).
/// Newton starts from z_k and iterates until the max-norm residual is <= tol,
/// then takes one more update so the stored state sits at round-off.
template <Dynamics D>
Trajectory simulate_cn(const D& dynamics, const Vec2& z0, const TimeGrid& grid,
                       const NewtonSettings& newton = {}) {
  Trajectory traj;
  traj.grid = grid;
  traj.states.reserve(static_cast<std::size_t>(grid.size()));
  traj.steps.reserve(static_cast<std::size_t>(grid.n_steps()));
  traj.states.push_back(z0);

  const double half_dt = 0.5 * grid.dt();
  Vec2 f_prev;
  Mat2 j_prev;
  dynamics.evaluate(z0, f_prev, j_prev);
  if (!f_prev.allFinite()) throw SolverError("non-finite right-hand side", 0, f_prev.norm());

  Vec2 f;
  Mat2 jac;
  for (int k = 0; k < grid.n_steps(); ++k) {
    const Vec2& z_prev = traj.states.back();
    const Vec2 base = z_prev + half_dt * f_prev;
    Vec2 z = z_prev;
    StepInfo info;
    dynamics.evaluate(z, f, jac);
    Vec2 residual = z - base - half_dt * f;
    double rnorm = residual.lpNorm<Eigen::Infinity>();
    bool polished = false;
    while (true) {
      if (!std::isfinite(rnorm)) throw SolverError("Newton diverged", k, rnorm);
      if (rnorm <= newton.tol) {
        if (polished || rnorm == 0.0) break;
        polished = true;
      } else if (info.iterations >= newton.max_iter) {
        throw SolverError("Newton did not converge", k, rnorm);
      }
      const Mat2 step_matrix = Mat2::Identity() - half_dt * jac;
      z -= detail::solve2(step_matrix, residual, k);
      ++info.iterations;
      dynamics.evaluate(z, f, jac);
      residual = z - base - half_dt * f;
      rnorm = residual.lpNorm<Eigen::Infinity>();
    }
    info.residual = rnorm;
    traj.states.push_back(z);
    traj.steps.push_back(info);
    f_prev = f;
  }
  return traj;
}

struct DatasetEntry {
  Vec2 z0;
  Trajectory trajectory;
};

/// K trajectories on one shared TimeGrid.
struct Dataset {
  TimeGrid grid{1.0, 1};
  std::vector<DatasetEntry> entries;

  int size() const noexcept { return static_cast<int>(entries.size()); }
};

/// (0,0), (1,1), (-1,-1), (1,0), (0,1), (-1,1), (1,-1).
std::vector<Vec2> fh_initial_conditions();

/// FitzHugh-Nagumo trajectories from the seven standard initial conditions.
Dataset generate_dataset(const FhParams& params, const Forcing& forcing, const TimeGrid& grid,
                         const NewtonSettings& newton = {},
                         Execution exec = Execution::parallel);

/// Same, from an arbitrary list of initial states.
Dataset generate_dataset(const FhParams& params, const Forcing& forcing, const TimeGrid& grid,
                         const std::vector<Vec2>& initial_states,
                         const NewtonSettings& newton = {},
                         Execution exec = Execution::parallel);

/// Dataset produced by a known network (planted-model experiments).
Dataset generate_network_dataset(const WeightStack& weights, const ActivationSpec& act,
                                 const OdeModelConfig& model, const TimeGrid& grid,
                                 const std::vector<Vec2>& initial_states,
                                 const NewtonSettings& newton = {});

/// Linear interpolation of samples (times, states) onto `grid`.
Trajectory resample_linear(const std::vector<double>& times, const std::vector<Vec2>& states,
                           const TimeGrid& grid);

/// 1/2 (v^2 + w^2) for a point state.
double energy_functional(const Vec2& z);

/// Energy bound E(t) <= exp(C t) (E(0) + a^2 t / 2) for z' = f - Phi(z) - (0, delta w),
/// with C = 1 + 2 Lip(Phi) and a = |f| + |Phi(0)|.
struct EnergyBound {
  double rate;
  double source;

  double at(double t, double initial_energy) const;
};
EnergyBound energy_bound(const WeightStack& weights, const ActivationSpec& act,
                         const OdeModelConfig& model);

/// Relative L2(0,T) misfit of the v components, |v - v_ref| / |v_ref|.
double relative_v_misfit(const Trajectory& trajectory, const Trajectory& reference);

}  // namespace monoid
