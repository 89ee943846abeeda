#include <cmath>
#include <random>

#include "doctest.h"
#include "monoid/error.hpp"
#include "monoid/nn.hpp"
#include "oracles.hpp"

using monoid::ActivationSpec;
using monoid::Layer;
using monoid::Mat2;
using monoid::NetworkArchitecture;
using monoid::Vec2;
using monoid::WeightStack;

namespace {

WeightStack identity_stack(int depth) {
  std::vector<Layer> layers;
  for (int l = 0; l < depth; ++l) layers.push_back({Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)});
  return WeightStack(std::move(layers));
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace

TEST_CASE("architecture invariants") {
  const NetworkArchitecture arch({2, 3, 4, 2});
  CHECK(arch.depth() == 3);
  CHECK(arch.hidden_width_sum() == 7);
  CHECK(arch.parameter_count() == 3 * 3 + 4 * 4 + 2 * 5);
  CHECK_THROWS_AS(NetworkArchitecture({2, 2}), monoid::ShapeError);
  CHECK_THROWS_AS(NetworkArchitecture({3, 2, 2}), monoid::ShapeError);
  CHECK_THROWS_AS(NetworkArchitecture({2, 0, 2}), monoid::ShapeError);
  CHECK(NetworkArchitecture::uniform(7, 2).parameter_count() == 42);
}

TEST_CASE("weight stack validates shapes and entries") {
  std::vector<Layer> bad{{Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3)},
                         {Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2)}};
  CHECK_THROWS_AS(WeightStack{bad}, monoid::ShapeError);
  std::vector<Layer> nan{{Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2)},
                         {Eigen::MatrixXd::Constant(2, 2, NAN), Eigen::VectorXd::Zero(2)}};
  CHECK_THROWS_AS(WeightStack{nan}, monoid::DomainError);
}

TEST_CASE("flat layout round trip") {
  const auto w = oracle::random_stack(NetworkArchitecture({2, 3, 2}), 4, 1.0);
  const Eigen::VectorXd flat = w.flat();
  CHECK(flat[0] == w.layer(0).A(0, 0));
  CHECK(flat[1] == w.layer(0).A(0, 1));
  CHECK(flat[6] == w.layer(0).b[0]);
  const auto back = WeightStack::from_flat(w.architecture(), flat);
  CHECK(back.flat() == flat);
  CHECK_THROWS_AS(WeightStack::from_flat(w.architecture(), flat.head(3)), monoid::ShapeError);
}

TEST_CASE("forward: identity weights reduce to the activation") {
  const Vec2 y = monoid::nn_forward(Vec2(1.0, -1.0), identity_stack(2), ActivationSpec::relu());
  CHECK(y == Vec2(1.0, 0.0));
}

TEST_CASE("forward: zero matrices leave only the last bias") {
  auto layers = monoid::WeightStack::zeros(NetworkArchitecture::uniform(4, 3)).layers();
  layers.back().b = Eigen::Vector2d(3.0, 4.0);
  const WeightStack w(layers);
  for (const Vec2& z : {Vec2(0.0, 0.0), Vec2(5.0, -7.0), Vec2(-1e3, 2.0)}) {
    CHECK(monoid::nn_forward(z, w, ActivationSpec::smoothed_relu(0.5)) == Vec2(3.0, 4.0));
  }
}

TEST_CASE("forward matches the layer-by-layer oracle") {
  for (const auto& act : {ActivationSpec::relu(), ActivationSpec::smoothed_relu(2.0),
                          ActivationSpec::tanh()}) {
    for (unsigned seed = 0; seed < 5; ++seed) {
      const auto w = oracle::random_stack(NetworkArchitecture({2, 2, 2, 2}), seed, 1.5);
      const Vec2 z(0.3, -0.7);
      const Vec2 expected = oracle::forward2(z, w, act);
      CHECK((monoid::nn_forward(z, w, act) - expected).norm() <= 1e-14 * (1.0 + expected.norm()));
    }
  }
  const auto wide = oracle::random_stack(NetworkArchitecture({2, 5, 3, 4, 2}), 9, 1.0);
  const Vec2 z(-1.2, 0.4);
  CHECK((monoid::nn_forward(z, wide, ActivationSpec::tanh()) -
         oracle::forward2(z, wide, ActivationSpec::tanh()))
            .norm() <= 1e-14);
}

TEST_CASE("jacobian: identity activation gives the matrix product") {
  const auto w = oracle::random_stack(NetworkArchitecture({2, 3, 4, 2}), 2, 1.0);
  Eigen::MatrixXd product = w.layer(0).A;
  for (int l = 1; l < w.depth(); ++l) product = w.layer(l).A * product;
  const Mat2 j = monoid::nn_jacobian_z(Vec2(0.7, 0.1), w, ActivationSpec::identity());
  CHECK(rel_err(j, product) <= 1e-14);
}

TEST_CASE("jacobian: identity weights, smoothed relu at the origin") {
  const Mat2 j = monoid::nn_jacobian_z(Vec2(0.0, 0.0), identity_stack(2), ActivationSpec::smoothed_relu(2.0));
  CHECK(j == Mat2(Eigen::Vector2d(0.5, 0.5).asDiagonal()));
}

TEST_CASE("jacobian: exact relu is refused") {
  CHECK_THROWS_AS(monoid::nn_jacobian_z(Vec2(0.0, 0.0), identity_stack(2), ActivationSpec::relu()),
                  monoid::UsageError);
  CHECK_THROWS_AS(monoid::nn_weight_grad(Vec2(0.0, 0.0), identity_stack(2), ActivationSpec::relu(),
                                         Vec2(1.0, 0.0)),
                  monoid::UsageError);
}

TEST_CASE("jacobian matches central differences (tanh, L = 7)") {
  const auto arch = NetworkArchitecture::uniform(7, 2);
  for (unsigned seed = 0; seed < 10; ++seed) {
    const auto w = oracle::random_stack(arch, seed, 1.0);
    const Vec2 z(0.1, 0.2);
    const Mat2 j = monoid::nn_jacobian_z(z, w, ActivationSpec::tanh());
    const Mat2 fd = oracle::fd_jacobian(z, w, ActivationSpec::tanh(), 1e-5);
    CHECK(rel_err(j, fd) <= 1e-7);
  }
}

TEST_CASE("jacobian matches central differences (smoothed relu, away from the kinks)") {
  const auto act = ActivationSpec::smoothed_relu(0.5);
  const auto arch = NetworkArchitecture({2, 4, 3, 2});
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  int checked = 0;
  for (unsigned seed = 0; seed < 40; ++seed) {
    const auto w = oracle::random_stack(arch, seed, 1.0);
    const Vec2 z(u(rng), u(rng));
    monoid::ForwardCache cache;
    monoid::nn_forward(z, w, act, cache);
    bool near_kink = false;
    for (int l = 1; l < w.depth(); ++l) {
      for (Eigen::Index i = 0; i < cache.pre[static_cast<std::size_t>(l)].size(); ++i) {
        const double x = cache.pre[static_cast<std::size_t>(l)][i];
        near_kink = near_kink || std::abs(std::abs(x) - act.epsilon()) < 1e-3;
      }
    }
    if (near_kink) continue;
    const Mat2 fd = oracle::fd_jacobian(z, w, act, 1e-6);
    CHECK(rel_err(monoid::nn_jacobian_z(cache, w, act), fd) <= 1e-5);
    ++checked;
  }
  CHECK(checked >= 30);
}

TEST_CASE("weight gradient: all-zero matrices") {
  const auto w = WeightStack::zeros(NetworkArchitecture::uniform(3, 2));
  const Vec2 cot(0.25, -4.0);
  const auto g = monoid::nn_weight_grad(Vec2(1.0, 2.0), w, ActivationSpec::tanh(), cot);
  CHECK(Eigen::VectorXd(g.layer(2).b) == Eigen::VectorXd(cot));
  CHECK(g.layer(2).A.isZero(0.0));
  CHECK(g.layer(0).A.isZero(0.0));
  CHECK(g.layer(0).b.isZero(0.0));
  CHECK(g.layer(1).A.isZero(0.0));
  CHECK(g.layer(1).b.isZero(0.0));
}

TEST_CASE("weight gradient: identity network, hand-computed blocks") {
  const auto g = monoid::nn_weight_grad(Vec2(1.0, 2.0), identity_stack(2), ActivationSpec::identity(),
                                        Vec2(1.0, 0.0));
  Eigen::MatrixXd expected_A(2, 2);
  expected_A << 1.0, 2.0, 0.0, 0.0;
  CHECK(g.layer(1).A == expected_A);
  CHECK(g.layer(0).A == expected_A);
  CHECK(Eigen::VectorXd(g.layer(1).b) == Eigen::Vector2d(1.0, 0.0));
  CHECK(Eigen::VectorXd(g.layer(0).b) == Eigen::Vector2d(1.0, 0.0));

  // Same result from central differences of cot . Phi.
  const auto w = identity_stack(2);
  const auto f = [&](const Eigen::VectorXd& x) {
    return oracle::forward2(Vec2(1.0, 2.0), WeightStack::from_flat(w.architecture(), x),
                            ActivationSpec::identity())[0];
  };
  const Eigen::VectorXd fd = oracle::fd_gradient(f, w.flat(), 1e-6);
  CHECK((g.flat() - fd).norm() <= 1e-9);
}

TEST_CASE("weight gradient matches finite differences (L = 7)") {
  const auto arch = NetworkArchitecture::uniform(7, 2);
  for (const auto& [act, tol] : {std::pair{ActivationSpec::smoothed_relu(2.0), 1e-5},
                                 std::pair{ActivationSpec::tanh(), 1e-7}}) {
    for (unsigned seed = 0; seed < 5; ++seed) {
      const auto w = oracle::random_stack(arch, seed + 100, 1.0);
      const Vec2 z(0.4, -0.9);
      const Vec2 cot(0.6, 1.3);
      const auto grad = monoid::nn_weight_grad(z, w, act, cot);
      const auto f = [&](const Eigen::VectorXd& x) {
        return cot.dot(oracle::forward2(z, WeightStack::from_flat(arch, x), act));
      };
      const Eigen::VectorXd fd = oracle::fd_gradient(f, w.flat(), 1e-5);
      // Blockwise comparison; a block with a vanishing gradient is judged
      // against the scale of the whole vector.
      const auto fd_stack = monoid::WeightGradient::from_flat(arch, fd);
      for (int l = 0; l < arch.depth(); ++l) {
        const double err = std::sqrt((grad.layer(l).A - fd_stack.layer(l).A).squaredNorm() +
                                     (grad.layer(l).b - fd_stack.layer(l).b).squaredNorm());
        const double scale = std::max(std::sqrt(fd_stack.layer(l).A.squaredNorm() +
                                                fd_stack.layer(l).b.squaredNorm()),
                                      1e-3 * fd.norm());
        CHECK(err / scale <= tol);
      }
    }
  }
}

TEST_CASE("weight gradient is linear in the cotangent") {
  const auto arch = NetworkArchitecture({2, 3, 3, 2});
  const auto w = oracle::random_stack(arch, 21, 1.0);
  const auto act = ActivationSpec::smoothed_relu(1.0);
  const Vec2 z(0.2, 0.5);
  const Vec2 u(1.5, -0.5);
  const Vec2 v(-0.25, 2.0);
  const auto gu = monoid::nn_weight_grad(z, w, act, u);
  const auto gv = monoid::nn_weight_grad(z, w, act, v);
  const auto guv = monoid::nn_weight_grad(z, w, act, u + v);
  CHECK((guv.flat() - gu.flat() - gv.flat()).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("chain consistency: J^T cot equals the z-gradient of cot . Phi") {
  const auto w = oracle::random_stack(NetworkArchitecture::uniform(5, 2), 5, 1.0);
  const auto act = ActivationSpec::tanh();
  const Vec2 z(-0.3, 0.8);
  const Vec2 cot(2.0, -1.0);
  const auto f = [&](const Eigen::VectorXd& x) { return cot.dot(oracle::forward2(Vec2(x[0], x[1]), w, act)); };
  const Eigen::VectorXd fd = oracle::fd_gradient(f, Eigen::Vector2d(z), 1e-5);
  const Vec2 jt = monoid::nn_jacobian_z(z, w, act).transpose() * cot;
  CHECK(rel_err(jt, fd) <= 1e-8);
}

TEST_CASE("lipschitz bound: examples") {
  // |I_2|_F = sqrt(2) per layer.
  CHECK(monoid::lipschitz_bound(identity_stack(2), ActivationSpec::relu()) == doctest::Approx(2.0));
  auto w = oracle::random_stack(NetworkArchitecture::uniform(3, 2), 3, 1.0);
  const double base = monoid::lipschitz_bound(w, ActivationSpec::smoothed_relu(1.0));
  auto layers = w.layers();
  for (auto& layer : layers) layer.A *= 2.0;
  CHECK(monoid::lipschitz_bound(WeightStack(layers), ActivationSpec::smoothed_relu(1.0)) ==
        doctest::Approx(8.0 * base).epsilon(1e-14));
}

TEST_CASE("lipschitz bound holds on sampled pairs") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (unsigned seed = 0; seed < 20; ++seed) {
    const auto w = oracle::random_stack(NetworkArchitecture::uniform(2 + seed % 4, 3), seed, 1.0);
    for (const auto& act : {ActivationSpec::smoothed_relu(0.3), ActivationSpec::tanh()}) {
      const double bound = monoid::lipschitz_bound(w, act);
      for (int i = 0; i < 1000; ++i) {
        const Vec2 a(u(rng), u(rng));
        const Vec2 b(u(rng), u(rng));
        CHECK((oracle::forward2(a, w, act) - oracle::forward2(b, w, act)).norm() <=
              bound * (a - b).norm() * (1.0 + 1e-12));
      }
    }
  }
}

TEST_CASE("enclosure: identity weights and identity activation") {
  const auto box = monoid::jacobian_enclosure(identity_stack(2), ActivationSpec::relu());
  CHECK(box.lo == Mat2::Zero());
  CHECK(box.hi == Mat2::Identity());

  const auto w = oracle::random_stack(NetworkArchitecture({2, 3, 2, 2}), 8, 1.0);
  const auto exact = monoid::jacobian_enclosure(w, ActivationSpec::identity());
  Eigen::MatrixXd product = w.layer(0).A;
  for (int l = 1; l < w.depth(); ++l) product = w.layer(l).A * product;
  CHECK(rel_err(exact.lo, product) <= 1e-14);
  CHECK(rel_err(exact.hi, product) <= 1e-14);
}

TEST_CASE("enclosure equals exhaustive path enumeration") {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const auto w = oracle::random_stack(NetworkArchitecture({2, 2, 3, 2, 2}), seed, 1.0);
    const auto act = ActivationSpec::smoothed_relu(1.0);
    Mat2 lo;
    Mat2 hi;
    const double hidden = w.depth() - 1;
    oracle::enclosure_by_paths(w, std::pow(act.rho_prime_min(), hidden), std::pow(act.rho_prime_max(), hidden),
                               lo, hi);
    const auto box = monoid::jacobian_enclosure(w, act);
    CHECK((box.lo - lo).lpNorm<Eigen::Infinity>() <= 1e-13);
    CHECK((box.hi - hi).lpNorm<Eigen::Infinity>() <= 1e-13);
  }
}

TEST_CASE("sampled jacobians lie in the enclosure") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (const double eps : {2.0, 0.5, 0.01}) {
    const auto act = ActivationSpec::smoothed_relu(eps);
    const auto w = oracle::random_stack(NetworkArchitecture::uniform(4, 2), 17, 1.0);
    const auto box = monoid::jacobian_enclosure(w, act);
    for (int i = 0; i < 1000; ++i) {
      CHECK(box.contains(monoid::nn_jacobian_z(Vec2(u(rng), u(rng)), w, act), 1e-14));
    }
  }
}

TEST_CASE("weight norm") {
  CHECK(monoid::weight_norm_sq(WeightStack::zeros(NetworkArchitecture::uniform(3, 4))) == 0.0);
  CHECK(monoid::weight_norm_sq(identity_stack(2)) == 4.0);
  const auto w = oracle::random_stack(NetworkArchitecture({2, 5, 2}), 1, 2.0);
  double sum = 0.0;
  for (int l = 0; l < w.depth(); ++l) {
    for (Eigen::Index i = 0; i < w.layer(l).A.size(); ++i) sum += w.layer(l).A.data()[i] * w.layer(l).A.data()[i];
    for (Eigen::Index i = 0; i < w.layer(l).b.size(); ++i) sum += w.layer(l).b[i] * w.layer(l).b[i];
  }
  CHECK(monoid::weight_norm_sq(w) == doctest::Approx(sum).epsilon(1e-15));
}

TEST_CASE("ball projection") {
  const auto inside = oracle::random_stack(NetworkArchitecture::uniform(2, 2), 1, 0.1);
  CHECK(monoid::project_ball(inside, 10.0).flat() == inside.flat());

  // Four unit entries: norm^2 = 4, so C = 1 halves everything.
  auto layers = WeightStack::zeros(NetworkArchitecture::uniform(2, 2)).layers();
  layers[0].A(0, 0) = 1.0;
  layers[0].A(1, 1) = -1.0;
  layers[0].b[0] = 1.0;
  layers[1].b[1] = -1.0;
  const WeightStack w(layers);
  REQUIRE(monoid::weight_norm_sq(w) == 4.0);
  CHECK(monoid::project_ball(w, 1.0).flat() == 0.5 * w.flat());

  for (unsigned seed = 0; seed < 50; ++seed) {
    const auto big = oracle::random_stack(NetworkArchitecture({2, 3, 3, 2}), seed, 3.0);
    const double C = 0.1 + 0.37 * seed;
    const auto once = monoid::project_ball(big, C);
    CHECK(monoid::weight_norm_sq(once) <= C);
    CHECK(monoid::project_ball(once, C).flat() == once.flat());
  }
  CHECK_THROWS_AS(monoid::project_ball(w, 0.0), monoid::DomainError);
}
