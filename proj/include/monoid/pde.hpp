#pragma once

#include <span>
#include <vector>

#include "monoid/forward.hpp"

namespace monoid {

/// Uniform vertex-centred grid on [0, (nx-1)h] (x [0, (ny-1)h] in 2D).
/// Homogeneous Neumann conditions are imposed by ghost-node reflection.
struct SpaceGrid {
  int dim = 1;
  int nx = 32;
  int ny = 1;
  double h = 1.0 / 31.0;

  static SpaceGrid line(int nx, double h) { return {1, nx, 1, h}; }
  static SpaceGrid square(int n, double h) { return {2, n, n, h}; }

  int size() const noexcept { return nx * (dim == 2 ? ny : 1); }
  int index(int i, int j) const noexcept { return j * nx + i; }

  /// Trapezoidal quadrature weight of node `index` (integrates the
  /// piecewise-linear interpolant exactly).
  double quadrature_weight(int index) const noexcept;

  /// Throws DomainError on invalid sizes.
  void validate() const;
};

struct PdeModelConfig {
  double nu = 1.0;
  double delta = 0.064;
  Forcing forcing;
  SpaceGrid grid;
};

/// Snapshots of (v, w) on a SpaceGrid at every time node.
struct FieldTrajectory {
  TimeGrid grid{1.0, 1};
  SpaceGrid space;
  std::vector<std::vector<double>> v_fields;
  std::vector<std::vector<double>> w_fields;
  std::vector<StepInfo> steps;
};

/// out = Laplacian(in) with reflected ghost nodes.
void apply_laplacian(const SpaceGrid& grid, std::span<const double> in, std::span<double> out,
                     Execution exec = Execution::parallel);

/// Pointwise reaction part of the semi-discrete right-hand side:
///   rv = f_v - phi_v(v, w),  rw = f_w - delta w - phi_w(v, w)
/// together with the 2x2 Jacobian blocks of (rv, rw) at every node.
void reaction_terms(const WeightStack& weights, const ActivationSpec& act,
                    const PdeModelConfig& cfg, std::span<const double> v,
                    std::span<const double> w, std::span<double> rv, std::span<double> rw,
                    std::vector<Mat2>* blocks, Execution exec = Execution::parallel);

/// Integral of a nodal field divided by the domain measure.
double spatial_mean(const SpaceGrid& grid, std::span<const double> field);

/// 1/2 (|v|^2 + |w|^2) in discrete L2 (trapezoidal quadrature).
double energy_functional(const SpaceGrid& grid, std::span<const double> v,
                         std::span<const double> w);

/// Method of lines + Crank-Nicolson in diffusion and reaction; each step is
/// solved by Newton with a sparse LU on the coupled (v, w) system.
FieldTrajectory simulate_pde(const WeightStack& weights, const ActivationSpec& act,
                             const PdeModelConfig& cfg, std::vector<double> v0,
                             std::vector<double> w0, const TimeGrid& grid,
                             const NewtonSettings& newton = {},
                             Execution exec = Execution::parallel);

}  // namespace monoid
