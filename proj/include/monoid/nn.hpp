#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "monoid/activations.hpp"

namespace monoid {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Layer widths n_0, ..., n_L of a feedforward network R^2 -> R^2.
class NetworkArchitecture {
 public:
  explicit NetworkArchitecture(std::vector<int> layer_dims);

  /// L layers, every width equal to `width` (input and output stay 2).
  static NetworkArchitecture uniform(int depth, int width = 2);

  int depth() const noexcept { return static_cast<int>(dims_.size()) - 1; }
  int dim(int layer) const { return dims_.at(static_cast<std::size_t>(layer)); }
  const std::vector<int>& layer_dims() const noexcept { return dims_; }

  /// Sum of the hidden widths n_1 + ... + n_{L-1}.
  int hidden_width_sum() const noexcept { return hidden_width_sum_; }

  std::size_t parameter_count() const noexcept;

  friend bool operator==(const NetworkArchitecture&, const NetworkArchitecture&) = default;

 private:
  std::vector<int> dims_;
  int hidden_width_sum_ = 0;
};

/// Affine map x -> A x + b of one layer.
struct Layer {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

/// Ordered list of layers with the shape bookkeeping shared by weights and
/// their gradients. Flattening order is layer by layer, A row-major then b.
class LayerStack {
 public:
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const Layer& layer(int index) const { return layers_.at(static_cast<std::size_t>(index)); }
  int depth() const noexcept { return static_cast<int>(layers_.size()); }
  NetworkArchitecture architecture() const;
  std::size_t size() const noexcept;

  Eigen::VectorXd flat() const;

  /// Sum of squares of every entry.
  double squared_norm() const;

 protected:
  LayerStack() = default;
  explicit LayerStack(std::vector<Layer> layers) : layers_(std::move(layers)) {}

  static std::vector<Layer> zero_layers(const NetworkArchitecture& arch);
  static std::vector<Layer> layers_from_flat(const NetworkArchitecture& arch,
                                             const Eigen::VectorXd& flat);
  void check_shapes() const;

  std::vector<Layer> layers_;
};

/// The control variable: per-layer affine maps (A_l, b_l), l = 1..L.
class WeightStack : public LayerStack {
 public:
  /// Validates n_0 = n_L = 2, L >= 2, chained dimensions and finite entries.
  explicit WeightStack(std::vector<Layer> layers);

  static WeightStack zeros(const NetworkArchitecture& arch);
  static WeightStack from_flat(const NetworkArchitecture& arch, const Eigen::VectorXd& flat);
};

/// Same shape as a WeightStack; holds d(objective)/d(A_l, b_l).
class WeightGradient : public LayerStack {
 public:
  explicit WeightGradient(std::vector<Layer> layers);

  static WeightGradient zeros(const NetworkArchitecture& arch);
  static WeightGradient from_flat(const NetworkArchitecture& arch, const Eigen::VectorXd& flat);

  /// this += scale * other, blockwise.
  void add_scaled(const LayerStack& other, double scale);

  std::vector<Layer>& mutable_layers() noexcept { return layers_; }
};

/// Entrywise interval [lo, hi] of 2x2 matrices.
struct IntervalMatrix2x2 {
  Mat2 lo = Mat2::Zero();
  Mat2 hi = Mat2::Zero();

  bool contains(const Mat2& m, double slack = 0.0) const;
};

/// Pre-activations and activations of one forward pass.
/// post[0] = z, pre[l] = A_l post[l-1] + b_l, post[l] = rho(pre[l]) and
/// slope[l] = rho'(pre[l]) for l < L.
struct ForwardCache {
  std::vector<Eigen::VectorXd> pre;
  std::vector<Eigen::VectorXd> post;
  std::vector<Eigen::VectorXd> slope;
  Vec2 output = Vec2::Zero();

  // Reused buffers for the backward sweeps.
  mutable Eigen::MatrixXd work_m[2];
  mutable Eigen::VectorXd work_v[2];
};

void nn_forward(const Vec2& z, const WeightStack& weights, const ActivationSpec& act,
                ForwardCache& cache);
Vec2 nn_forward(const Vec2& z, const WeightStack& weights, const ActivationSpec& act);

/// d(Phi)/dz from a filled cache: A_L diag(rho'(pre_{L-1})) A_{L-1} ... diag(rho'(pre_1)) A_1.
Mat2 nn_jacobian_z(const ForwardCache& cache, const WeightStack& weights,
                   const ActivationSpec& act);
Mat2 nn_jacobian_z(const Vec2& z, const WeightStack& weights, const ActivationSpec& act);

/// out += scale * d(cotangent . Phi(z))/dW using a filled cache.
void accumulate_weight_grad(const ForwardCache& cache, const WeightStack& weights,
                            const ActivationSpec& act, const Vec2& cotangent, double scale,
                            WeightGradient& out);
WeightGradient nn_weight_grad(const Vec2& z, const WeightStack& weights,
                              const ActivationSpec& act, const Vec2& cotangent);

/// prod_l |A_l|_F * Lip(rho)^(n_1 + ... + n_{L-1}).
double lipschitz_bound(const WeightStack& weights, const ActivationSpec& act);

/// Interval hull of every Jacobian the network can produce when each
/// activation slope ranges over [rho'_min, rho'_max].
IntervalMatrix2x2 jacobian_enclosure(const WeightStack& weights, const ActivationSpec& act);

double weight_norm_sq(const LayerStack& weights);

/// Radial projection onto { W : |W|^2 <= C }.
WeightStack project_ball(const WeightStack& weights, double C);

}  // namespace monoid
