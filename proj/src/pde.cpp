#include "monoid/pde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace monoid {

double SpaceGrid::quadrature_weight(int index) const noexcept {
  const int i = index % nx;
  const int j = index / nx;
  auto edge = [](int k, int n) { return (n > 1 && (k == 0 || k == n - 1)) ? 0.5 : 1.0; };
  double w = edge(i, nx) * (nx > 1 ? h : 1.0);
  if (dim == 2) w *= edge(j, ny) * (ny > 1 ? h : 1.0);
  return w;
}

void SpaceGrid::validate() const {
  if (dim != 1 && dim != 2) throw DomainError("space grid dim must be 1 or 2");
  if (nx < 1 || (dim == 2 && ny < 1)) throw DomainError("space grid needs at least one node per axis");
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("space grid spacing h must be positive");
}

namespace {

// Rows are independent; chunk them so each OpenMP iteration does real work.
constexpr int kChunk = 64;

int chunk_count(int n) { return (n + kChunk - 1) / kChunk; }

double axis_second_difference(std::span<const double> in, int idx, int k, int n, int stride) {
  if (n == 1) return 0.0;
  const int lo = k == 0 ? 1 : k - 1;
  const int hi = k == n - 1 ? n - 2 : k + 1;
  const double c = in[static_cast<std::size_t>(idx)];
  return (in[static_cast<std::size_t>(idx + (lo - k) * stride)] +
          in[static_cast<std::size_t>(idx + (hi - k) * stride)]) - (c + c);
}

}  // namespace

void apply_laplacian(const SpaceGrid& grid, std::span<const double> in, std::span<double> out,
                     Execution exec) {
  const int n = grid.size();
  if (static_cast<int>(in.size()) != n || static_cast<int>(out.size()) != n) {
    throw ShapeError("apply_laplacian: field size does not match grid");
  }
  const double inv_h2 = 1.0 / (grid.h * grid.h);
  for_each_index(chunk_count(n), exec, [&](int chunk) {
    const int end = std::min(n, (chunk + 1) * kChunk);
    for (int idx = chunk * kChunk; idx < end; ++idx) {
      const int i = idx % grid.nx;
      double sum = axis_second_difference(in, idx, i, grid.nx, 1);
      if (grid.dim == 2) sum += axis_second_difference(in, idx, idx / grid.nx, grid.ny, grid.nx);
      out[static_cast<std::size_t>(idx)] = sum * inv_h2;
    }
  });
}

void reaction_terms(const WeightStack& weights, const ActivationSpec& act,
                    const PdeModelConfig& cfg, std::span<const double> v,
                    std::span<const double> w, std::span<double> rv, std::span<double> rw,
                    std::vector<Mat2>* blocks, Execution exec) {
  const int n = static_cast<int>(v.size());
  if (blocks != nullptr) {
    act.require_c1("reaction_terms");
    blocks->resize(static_cast<std::size_t>(n));
  }
  for_each_index(chunk_count(n), exec, [&](int chunk) {
    ForwardCache cache;
    const int end = std::min(n, (chunk + 1) * kChunk);
    for (int idx = chunk * kChunk; idx < end; ++idx) {
      const auto i = static_cast<std::size_t>(idx);
      nn_forward(Vec2(v[i], w[i]), weights, act, cache);
      rv[i] = cfg.forcing.v - cache.output[0];
      rw[i] = cfg.forcing.w - cfg.delta * w[i] - cache.output[1];
      if (blocks != nullptr) {
        Mat2 j = -nn_jacobian_z(cache, weights, act);
        j(1, 1) -= cfg.delta;
        (*blocks)[i] = j;
      }
    }
  });
}

double spatial_mean(const SpaceGrid& grid, std::span<const double> field) {
  double integral = 0.0;
  double measure = 0.0;
  for (int idx = 0; idx < grid.size(); ++idx) {
    const double q = grid.quadrature_weight(idx);
    integral += q * field[static_cast<std::size_t>(idx)];
    measure += q;
  }
  return integral / measure;
}

double energy_functional(const SpaceGrid& grid, std::span<const double> v,
                         std::span<const double> w) {
  double sum = 0.0;
  for (int idx = 0; idx < grid.size(); ++idx) {
    const auto i = static_cast<std::size_t>(idx);
    sum += grid.quadrature_weight(idx) * (v[i] * v[i] + w[i] * w[i]);
  }
  return 0.5 * sum;
}

namespace {

/// Semi-discrete right-hand side F(v, w) = (nu Lap v + rv, rw) and its blocks.
struct PdeRhs {
  const WeightStack& weights;
  const ActivationSpec& act;
  const PdeModelConfig& cfg;
  Execution exec;

  void operator()(std::span<const double> v, std::span<const double> w, std::vector<double>& fv,
                  std::vector<double>& fw, std::vector<Mat2>* blocks) const {
    const std::size_t n = v.size();
    std::vector<double> lap(n);
    fv.resize(n);
    fw.resize(n);
    apply_laplacian(cfg.grid, v, lap, exec);
    reaction_terms(weights, act, cfg, v, w, fv, fw, blocks, exec);
    for (std::size_t i = 0; i < n; ++i) fv[i] += cfg.nu * lap[i];
  }
};

/// Sparse step matrix I - dt/2 dF/dy in interleaved (v_i, w_i) ordering.
Eigen::SparseMatrix<double> step_matrix(const SpaceGrid& grid, double nu, double half_dt,
                                        const std::vector<Mat2>& blocks) {
  const int n = grid.size();
  const double inv_h2 = 1.0 / (grid.h * grid.h);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * 9);
  auto diffusion_axis = [&](int idx, int k, int count, int stride) {
    if (count == 1) return;
    const int lo = k == 0 ? 1 : k - 1;
    const int hi = k == count - 1 ? count - 2 : k + 1;
    const double c = -half_dt * nu * inv_h2;
    trips.emplace_back(2 * idx, 2 * (idx + (lo - k) * stride), c);
    trips.emplace_back(2 * idx, 2 * (idx + (hi - k) * stride), c);
    trips.emplace_back(2 * idx, 2 * idx, -2.0 * c);
  };
  for (int idx = 0; idx < n; ++idx) {
    const Mat2& b = blocks[static_cast<std::size_t>(idx)];
    trips.emplace_back(2 * idx, 2 * idx, 1.0 - half_dt * b(0, 0));
    trips.emplace_back(2 * idx, 2 * idx + 1, -half_dt * b(0, 1));
    trips.emplace_back(2 * idx + 1, 2 * idx, -half_dt * b(1, 0));
    trips.emplace_back(2 * idx + 1, 2 * idx + 1, 1.0 - half_dt * b(1, 1));
    diffusion_axis(idx, idx % grid.nx, grid.nx, 1);
    if (grid.dim == 2) diffusion_axis(idx, idx / grid.nx, grid.ny, grid.nx);
  }
  Eigen::SparseMatrix<double> m(2 * n, 2 * n);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

}  // namespace

FieldTrajectory simulate_pde(const WeightStack& weights, const ActivationSpec& act,
                             const PdeModelConfig& cfg, std::vector<double> v0,
                             std::vector<double> w0, const TimeGrid& grid,
                             const NewtonSettings& newton, Execution exec) {
  cfg.grid.validate();
  act.require_c1("simulate_pde");
  if (!(cfg.nu > 0.0)) throw DomainError("diffusivity nu must be positive");
  const int n = cfg.grid.size();
  if (static_cast<int>(v0.size()) != n || static_cast<int>(w0.size()) != n) {
    throw ShapeError("initial fields do not match the space grid (" + std::to_string(n) + " nodes)");
  }

  FieldTrajectory out;
  out.grid = grid;
  out.space = cfg.grid;
  out.v_fields.reserve(static_cast<std::size_t>(grid.size()));
  out.w_fields.reserve(static_cast<std::size_t>(grid.size()));
  out.v_fields.push_back(std::move(v0));
  out.w_fields.push_back(std::move(w0));

  const PdeRhs rhs{weights, act, cfg, exec};
  const double half_dt = 0.5 * grid.dt();
  const auto un = static_cast<std::size_t>(n);

  std::vector<double> fv_prev;
  std::vector<double> fw_prev;
  rhs(out.v_fields.back(), out.w_fields.back(), fv_prev, fw_prev, nullptr);

  std::vector<double> fv;
  std::vector<double> fw;
  std::vector<Mat2> blocks;
  Eigen::VectorXd residual(2 * n);
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;

  for (int k = 0; k < grid.n_steps(); ++k) {
    const std::vector<double>& v_prev = out.v_fields.back();
    const std::vector<double>& w_prev = out.w_fields.back();
    std::vector<double> base_v(un);
    std::vector<double> base_w(un);
    for (std::size_t i = 0; i < un; ++i) {
      base_v[i] = v_prev[i] + half_dt * fv_prev[i];
      base_w[i] = w_prev[i] + half_dt * fw_prev[i];
    }
    std::vector<double> v = v_prev;
    std::vector<double> w = w_prev;

    auto evaluate = [&]() {
      rhs(v, w, fv, fw, &blocks);
      double rnorm = 0.0;
      for (std::size_t i = 0; i < un; ++i) {
        residual[static_cast<Eigen::Index>(2 * i)] = v[i] - base_v[i] - half_dt * fv[i];
        residual[static_cast<Eigen::Index>(2 * i + 1)] = w[i] - base_w[i] - half_dt * fw[i];
      }
      rnorm = residual.lpNorm<Eigen::Infinity>();
      return rnorm;
    };

    StepInfo info;
    double rnorm = evaluate();
    bool polished = false;
    while (true) {
      if (!std::isfinite(rnorm)) throw SolverError("PDE Newton diverged", k, rnorm);
      if (rnorm <= newton.tol) {
        if (polished || rnorm == 0.0) break;
        polished = true;
      } else if (info.iterations >= newton.max_iter) {
        throw SolverError("PDE Newton did not converge", k, rnorm);
      }
      const Eigen::SparseMatrix<double> jac = step_matrix(cfg.grid, cfg.nu, half_dt, blocks);
      if (!analyzed) {
        lu.analyzePattern(jac);
        analyzed = true;
      }
      lu.factorize(jac);
      if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorization failed", k, rnorm);
      const Eigen::VectorXd delta = lu.solve(residual);
      for (std::size_t i = 0; i < un; ++i) {
        v[i] -= delta[static_cast<Eigen::Index>(2 * i)];
        w[i] -= delta[static_cast<Eigen::Index>(2 * i + 1)];
      }
      ++info.iterations;
      rnorm = evaluate();
    }
    info.residual = rnorm;
    out.steps.push_back(info);
    out.v_fields.push_back(std::move(v));
    out.w_fields.push_back(std::move(w));
    fv_prev = fv;
    fw_prev = fw;
  }
  return out;
}

}  // namespace monoid
