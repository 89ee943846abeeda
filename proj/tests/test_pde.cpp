#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "monoid/pde.hpp"
#include "oracles.hpp"

using monoid::ActivationSpec;
using monoid::NetworkArchitecture;
using monoid::PdeModelConfig;
using monoid::SpaceGrid;
using monoid::TimeGrid;
using monoid::WeightStack;

namespace {

PdeModelConfig pure_diffusion(const SpaceGrid& grid) {
  PdeModelConfig cfg;
  cfg.grid = grid;
  cfg.forcing = {0.0, 0.0};
  cfg.delta = 0.0;
  return cfg;
}

std::vector<double> random_field(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> f(static_cast<std::size_t>(n));
  for (double& x : f) x = u(rng);
  return f;
}

}  // namespace

TEST_CASE("space grid validation and quadrature") {
  CHECK_THROWS_AS(SpaceGrid({3, 4, 4, 0.1}).validate(), monoid::DomainError);
  CHECK_THROWS_AS(SpaceGrid::line(4, 0.0).validate(), monoid::DomainError);
  const auto sq = SpaceGrid::square(5, 0.25);
  double total = 0.0;
  for (int i = 0; i < sq.size(); ++i) total += sq.quadrature_weight(i);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sq.quadrature_weight(0) == 0.25 * 0.25 * 0.25);
}

TEST_CASE("laplacian: constants, quadratics and discrete Green identity") {
  const auto line = SpaceGrid::line(9, 0.5);
  std::vector<double> c(9, 3.7);
  std::vector<double> out(9);
  monoid::apply_laplacian(line, c, out);
  for (const double x : out) CHECK(x == 0.0);

  std::vector<double> quad(9);
  for (int i = 0; i < 9; ++i) quad[static_cast<std::size_t>(i)] = 0.25 * i * i;  // (x)^2 with x = i h
  monoid::apply_laplacian(line, quad, out);
  for (int i = 1; i < 8; ++i) CHECK(out[static_cast<std::size_t>(i)] == doctest::Approx(2.0));

  for (const auto& grid : {SpaceGrid::line(17, 0.1), SpaceGrid::square(12, 0.2), SpaceGrid{2, 7, 4, 0.3}}) {
    const auto u = random_field(grid.size(), 3);
    std::vector<double> lap(u.size());
    monoid::apply_laplacian(grid, u, lap);
    double integral = 0.0;
    for (int i = 0; i < grid.size(); ++i) integral += grid.quadrature_weight(i) * lap[static_cast<std::size_t>(i)];
    CHECK(std::abs(integral) <= 1e-12);
  }
  std::vector<double> wrong(3);
  CHECK_THROWS_AS(monoid::apply_laplacian(line, wrong, out), monoid::ShapeError);
}

TEST_CASE("laplacian: serial and parallel paths agree bit for bit") {
  const auto grid = SpaceGrid::square(40, 0.05);
  const auto u = random_field(grid.size(), 8);
  std::vector<double> a(u.size());
  std::vector<double> b(u.size());
  monoid::apply_laplacian(grid, u, a, monoid::Execution::serial);
  monoid::apply_laplacian(grid, u, b, monoid::Execution::parallel);
  CHECK(a == b);
}

TEST_CASE("mean and energy on a unit domain") {
  const auto grid = SpaceGrid::line(11, 0.1);
  std::vector<double> ones(11, 1.0);
  std::vector<double> zeros(11, 0.0);
  CHECK(monoid::energy_functional(grid, ones, ones) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(monoid::energy_functional(grid, zeros, zeros) == 0.0);
  CHECK(monoid::spatial_mean(grid, ones) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("constant field is a steady state of pure diffusion") {
  const auto grid = SpaceGrid::square(8, 0.1);
  const auto w = WeightStack::zeros(NetworkArchitecture::uniform(2, 2));
  const std::vector<double> v0(static_cast<std::size_t>(grid.size()), 0.75);
  const std::vector<double> w0(static_cast<std::size_t>(grid.size()), 0.0);
  const auto out = monoid::simulate_pde(w, ActivationSpec::smoothed_relu(2.0), pure_diffusion(grid), v0, w0,
                                        TimeGrid(1.0, 20));
  for (const auto& v : out.v_fields) CHECK(v == v0);
}

TEST_CASE("pure Neumann diffusion conserves the mean (32 x 32)") {
  const auto grid = SpaceGrid::square(32, 1.0 / 31.0);
  const auto w = WeightStack::zeros(NetworkArchitecture::uniform(2, 2));
  const auto v0 = random_field(grid.size(), 1);
  const std::vector<double> w0(v0.size(), 0.0);
  const auto out = monoid::simulate_pde(w, ActivationSpec::tanh(), pure_diffusion(grid), v0, w0,
                                        TimeGrid(0.05, 25));
  for (std::size_t k = 1; k < out.v_fields.size(); ++k) {
    const double before = monoid::spatial_mean(grid, out.v_fields[k - 1]);
    const double after = monoid::spatial_mean(grid, out.v_fields[k]);
    CHECK(std::abs(after - before) <= 1e-10 * std::max(std::abs(before), 1e-3));
  }
}

TEST_CASE("cosine mode decays at the Crank-Nicolson rate of the discrete operator") {
  const int n = 21;
  const double h = 0.05;
  const auto grid = SpaceGrid::line(n, h);
  const auto w = WeightStack::zeros(NetworkArchitecture::uniform(2, 2));
  std::vector<double> v0(n);
  const double theta = std::numbers::pi / (n - 1);
  for (int i = 0; i < n; ++i) v0[static_cast<std::size_t>(i)] = std::cos(theta * i);
  const double lambda = (2.0 * std::cos(theta) - 2.0) / (h * h);
  const TimeGrid time(0.2, 40);
  auto cfg = pure_diffusion(grid);
  cfg.nu = 0.7;
  const double gain = (1.0 + 0.5 * time.dt() * cfg.nu * lambda) / (1.0 - 0.5 * time.dt() * cfg.nu * lambda);
  const auto out = monoid::simulate_pde(w, ActivationSpec::tanh(), cfg, v0, std::vector<double>(n, 0.0), time);
  const double amp = std::pow(gain, time.n_steps());
  for (int i = 0; i < n; ++i) {
    CHECK(std::abs(out.v_fields.back()[static_cast<std::size_t>(i)] - amp * v0[static_cast<std::size_t>(i)]) <= 1e-12);
  }
}

TEST_CASE("uniform fields follow the ODE model") {
  const TimeGrid time(10.0, 200);
  for (unsigned seed = 0; seed < 3; ++seed) {
    const auto w = oracle::random_stack(NetworkArchitecture::uniform(7, 2), seed, 0.8);
    const auto act = ActivationSpec::smoothed_relu(2.0);
    for (const auto& grid : {SpaceGrid::line(16, 0.1), SpaceGrid::square(6, 0.2)}) {
      PdeModelConfig cfg;
      cfg.grid = grid;
      const monoid::Vec2 z0(0.4 * seed - 0.3, 0.2);
      const std::vector<double> v0(static_cast<std::size_t>(grid.size()), z0[0]);
      const std::vector<double> w0(static_cast<std::size_t>(grid.size()), z0[1]);
      const auto field = monoid::simulate_pde(w, act, cfg, v0, w0, time);
      const auto ode = monoid::simulate_cn(monoid::NetworkDynamics(w, act, {cfg.delta, cfg.forcing}), z0, time);
      double worst = 0.0;
      for (int k = 0; k < time.size(); ++k) {
        const auto uk = static_cast<std::size_t>(k);
        for (int i = 0; i < grid.size(); ++i) {
          const auto ui = static_cast<std::size_t>(i);
          worst = std::max(worst, std::abs(field.v_fields[uk][ui] - ode.states[uk][0]));
          worst = std::max(worst, std::abs(field.w_fields[uk][ui] - ode.states[uk][1]));
        }
      }
      CHECK(worst <= 1e-9);
    }
  }
}

TEST_CASE("reaction blocks match the ODE jacobian") {
  const auto w = oracle::random_stack(NetworkArchitecture::uniform(3, 3), 4, 1.0);
  const auto act = ActivationSpec::tanh();
  PdeModelConfig cfg;
  const std::vector<double> v{0.1, -0.4};
  const std::vector<double> ww{0.7, 0.0};
  std::vector<double> rv(2);
  std::vector<double> rw(2);
  std::vector<monoid::Mat2> blocks;
  monoid::reaction_terms(w, act, cfg, v, ww, rv, rw, &blocks);
  const monoid::NetworkDynamics dyn(w, act, {cfg.delta, cfg.forcing});
  for (std::size_t i = 0; i < 2; ++i) {
    monoid::Vec2 f;
    monoid::Mat2 j;
    dyn.evaluate(monoid::Vec2(v[i], ww[i]), f, j);
    CHECK(rv[i] == f[0]);
    CHECK(rw[i] == f[1]);
    CHECK(blocks[i] == j);
  }
}

TEST_CASE("simulate_pde rejects mismatched fields and exact relu") {
  const auto grid = SpaceGrid::line(5, 0.1);
  PdeModelConfig cfg;
  cfg.grid = grid;
  const auto w = WeightStack::zeros(NetworkArchitecture::uniform(2, 2));
  CHECK_THROWS_AS(monoid::simulate_pde(w, ActivationSpec::tanh(), cfg, std::vector<double>(4),
                                       std::vector<double>(5), TimeGrid(1.0, 2)),
                  monoid::ShapeError);
  CHECK_THROWS_AS(monoid::simulate_pde(w, ActivationSpec::relu(), cfg, std::vector<double>(5),
                                       std::vector<double>(5), TimeGrid(1.0, 2)),
                  monoid::UsageError);
}
