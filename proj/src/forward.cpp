#include "monoid/forward.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace monoid {

TimeGrid::TimeGrid(double T, int n_steps) : T_(T), n_steps_(n_steps) {
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("final time T must be positive");
  if (n_steps <= 0) throw DomainError("n_steps must be positive");
}

TimeGrid TimeGrid::with_step(double T, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
  const double n = std::round(T / dt);
  return TimeGrid(T, static_cast<int>(std::max(1.0, n)));
}

Vec2 fh_rhs(const Vec2& z, const FhParams& p, const Forcing& f) {
  const double v = z[0];
  const double w = z[1];
  return {f.v - (((p.a * v + p.b) * v + p.c) * v + p.d * w), f.w - (p.eta * w + p.gamma * v)};
}

Mat2 fh_jacobian(const Vec2& z, const FhParams& p) {
  const double v = z[0];
  Mat2 j;
  j << -(3.0 * p.a * v * v + 2.0 * p.b * v + p.c), -p.d,
       -p.gamma, -p.eta;
  return j;
}

NetworkDynamics::NetworkDynamics(const WeightStack& weights, const ActivationSpec& act,
                                 const OdeModelConfig& model)
    : weights_(&weights), act_(act), model_(model) {
  act_.require_c1("network dynamics");
}

void NetworkDynamics::evaluate(const Vec2& z, Vec2& value, Mat2& jacobian) const {
  nn_forward(z, *weights_, act_, cache_);
  value[0] = model_.forcing.v - cache_.output[0];
  value[1] = model_.forcing.w - model_.delta * z[1] - cache_.output[1];
  jacobian = -nn_jacobian_z(cache_, *weights_, act_);
  jacobian(1, 1) -= model_.delta;
}

namespace detail {
Vec2 solve2(const Mat2& m, const Vec2& rhs, int step) {
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double scale = m.cwiseAbs().maxCoeff();
  if (!std::isfinite(det) || std::abs(det) <= 1e-14 * scale * scale) {
    throw SolverError("singular 2x2 step matrix", step, det);
  }
  return Vec2(m(1, 1) * rhs[0] - m(0, 1) * rhs[1], m(0, 0) * rhs[1] - m(1, 0) * rhs[0]) / det;
}
}  // namespace detail

std::vector<Vec2> fh_initial_conditions() {
  return {{0.0, 0.0}, {1.0, 1.0}, {-1.0, -1.0}, {1.0, 0.0},
          {0.0, 1.0}, {-1.0, 1.0}, {1.0, -1.0}};
}

Dataset generate_dataset(const FhParams& params, const Forcing& forcing, const TimeGrid& grid,
                         const NewtonSettings& newton, Execution exec) {
  return generate_dataset(params, forcing, grid, fh_initial_conditions(), newton, exec);
}

Dataset generate_dataset(const FhParams& params, const Forcing& forcing, const TimeGrid& grid,
                         const std::vector<Vec2>& initial_states, const NewtonSettings& newton,
                         Execution exec) {
  Dataset data;
  data.grid = grid;
  data.entries.resize(initial_states.size());
  const FhDynamics dynamics{params, forcing};
  for_each_index(static_cast<int>(initial_states.size()), exec, [&](int k) {
    const auto idx = static_cast<std::size_t>(k);
    data.entries[idx].z0 = initial_states[idx];
    data.entries[idx].trajectory = simulate_cn(dynamics, initial_states[idx], grid, newton);
  });
  return data;
}

Dataset generate_network_dataset(const WeightStack& weights, const ActivationSpec& act,
                                 const OdeModelConfig& model, const TimeGrid& grid,
                                 const std::vector<Vec2>& initial_states,
                                 const NewtonSettings& newton) {
  Dataset data;
  data.grid = grid;
  for (const Vec2& z0 : initial_states) {
    const NetworkDynamics dynamics(weights, act, model);
    data.entries.push_back({z0, simulate_cn(dynamics, z0, grid, newton)});
  }
  return data;
}

Trajectory resample_linear(const std::vector<double>& times, const std::vector<Vec2>& states,
                           const TimeGrid& grid) {
  if (times.size() != states.size() || times.empty()) {
    throw ShapeError("resample: times and states must be non-empty and of equal length");
  }
  if (!std::is_sorted(times.begin(), times.end())) {
    throw FormatError("resample: sample times must be increasing");
  }
  const double span_tol = 1e-9 * std::max(1.0, grid.final_time());
  if (times.front() > span_tol || times.back() < grid.final_time() - span_tol) {
    throw FormatError("resample: samples do not cover [0, T]");
  }
  Trajectory traj;
  traj.grid = grid;
  traj.states.reserve(static_cast<std::size_t>(grid.size()));
  std::size_t seg = 0;
  for (int k = 0; k < grid.size(); ++k) {
    const double t = grid.time(k);
    while (seg + 2 < times.size() && times[seg + 1] < t) ++seg;
    if (times.size() == 1) {
      traj.states.push_back(states[0]);
      continue;
    }
    const double t0 = times[seg];
    const double t1 = times[seg + 1];
    const double theta = t1 > t0 ? std::clamp((t - t0) / (t1 - t0), 0.0, 1.0) : 0.0;
    traj.states.push_back((1.0 - theta) * states[seg] + theta * states[seg + 1]);
  }
  return traj;
}

double energy_functional(const Vec2& z) { return 0.5 * z.squaredNorm(); }

double EnergyBound::at(double t, double initial_energy) const {
  return std::exp(rate * t) * (initial_energy + 0.5 * source * source * t);
}

EnergyBound energy_bound(const WeightStack& weights, const ActivationSpec& act,
                         const OdeModelConfig& model) {
  const double lip = lipschitz_bound(weights, act);
  const Vec2 f(model.forcing.v, model.forcing.w);
  const double source = f.norm() + nn_forward(Vec2::Zero(), weights, act).norm();
  return {1.0 + 2.0 * lip, source};
}

double relative_v_misfit(const Trajectory& trajectory, const Trajectory& reference) {
  if (!(trajectory.grid == reference.grid) || trajectory.states.size() != reference.states.size()) {
    throw ShapeError("relative_v_misfit: trajectories are on different grids");
  }
  double diff = 0.0;
  double ref = 0.0;
  for (int k = 0; k < trajectory.grid.size(); ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const double w = trajectory.grid.trapezoid_weight(k);
    const double e = trajectory.states[idx][0] - reference.states[idx][0];
    diff += w * e * e;
    ref += w * reference.states[idx][0] * reference.states[idx][0];
  }
  return std::sqrt(diff / ref);
}

}  // namespace monoid
