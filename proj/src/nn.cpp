#include "monoid/nn.hpp"

#include <cmath>
#include <string>

#include "monoid/error.hpp"

namespace monoid {

NetworkArchitecture::NetworkArchitecture(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
  if (dims_.size() < 3) throw ShapeError("a network needs at least two layers (L >= 2)");
  if (dims_.front() != 2 || dims_.back() != 2) {
    throw ShapeError("input and output widths must both be 2");
  }
  for (const int n : dims_) {
    if (n <= 0) throw ShapeError("layer widths must be positive");
  }
  for (std::size_t l = 1; l + 1 < dims_.size(); ++l) hidden_width_sum_ += dims_[l];
}

NetworkArchitecture NetworkArchitecture::uniform(int depth, int width) {
  if (depth < 2) throw ShapeError("a network needs at least two layers (L >= 2)");
  std::vector<int> dims(static_cast<std::size_t>(depth) + 1, width);
  dims.front() = 2;
  dims.back() = 2;
  return NetworkArchitecture(std::move(dims));
}

std::size_t NetworkArchitecture::parameter_count() const noexcept {
  std::size_t count = 0;
  for (std::size_t l = 1; l < dims_.size(); ++l) {
    count += static_cast<std::size_t>(dims_[l]) * static_cast<std::size_t>(dims_[l - 1] + 1);
  }
  return count;
}

// --- LayerStack -------------------------------------------------------------

NetworkArchitecture LayerStack::architecture() const {
  std::vector<int> dims;
  dims.reserve(layers_.size() + 1);
  dims.push_back(static_cast<int>(layers_.front().A.cols()));
  for (const Layer& layer : layers_) dims.push_back(static_cast<int>(layer.A.rows()));
  return NetworkArchitecture(std::move(dims));
}

std::size_t LayerStack::size() const noexcept {
  std::size_t n = 0;
  for (const Layer& layer : layers_) n += static_cast<std::size_t>(layer.A.size() + layer.b.size());
  return n;
}

Eigen::VectorXd LayerStack::flat() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  Eigen::Index pos = 0;
  for (const Layer& layer : layers_) {
    for (Eigen::Index i = 0; i < layer.A.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.A.cols(); ++j) out[pos++] = layer.A(i, j);
    }
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) out[pos++] = layer.b[i];
  }
  return out;
}

double LayerStack::squared_norm() const {
  double sum = 0.0;
  for (const Layer& layer : layers_) sum += layer.A.squaredNorm() + layer.b.squaredNorm();
  return sum;
}

std::vector<Layer> LayerStack::zero_layers(const NetworkArchitecture& arch) {
  std::vector<Layer> layers;
  for (int l = 1; l <= arch.depth(); ++l) {
    layers.push_back({Eigen::MatrixXd::Zero(arch.dim(l), arch.dim(l - 1)),
                      Eigen::VectorXd::Zero(arch.dim(l))});
  }
  return layers;
}

std::vector<Layer> LayerStack::layers_from_flat(const NetworkArchitecture& arch,
                                                const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != arch.parameter_count()) {
    throw ShapeError("flat parameter vector has " + std::to_string(flat.size()) +
                     " entries, architecture needs " + std::to_string(arch.parameter_count()));
  }
  std::vector<Layer> layers = zero_layers(arch);
  Eigen::Index pos = 0;
  for (Layer& layer : layers) {
    for (Eigen::Index i = 0; i < layer.A.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.A.cols(); ++j) layer.A(i, j) = flat[pos++];
    }
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) layer.b[i] = flat[pos++];
  }
  return layers;
}

void LayerStack::check_shapes() const {
  if (layers_.size() < 2) throw ShapeError("a network needs at least two layers (L >= 2)");
  if (layers_.front().A.cols() != 2) throw ShapeError("first layer must take a 2-vector");
  if (layers_.back().A.rows() != 2) throw ShapeError("last layer must produce a 2-vector");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    if (layer.A.rows() != layer.b.size()) {
      throw ShapeError("layer " + std::to_string(l + 1) + ": A rows and b length differ");
    }
    if (l > 0 && layer.A.cols() != layers_[l - 1].A.rows()) {
      throw ShapeError("layer " + std::to_string(l + 1) + ": input width does not chain");
    }
    if (!layer.A.allFinite() || !layer.b.allFinite()) {
      throw DomainError("layer " + std::to_string(l + 1) + " has non-finite entries");
    }
  }
}

WeightStack::WeightStack(std::vector<Layer> layers) : LayerStack(std::move(layers)) {
  check_shapes();
}

WeightStack WeightStack::zeros(const NetworkArchitecture& arch) {
  return WeightStack(zero_layers(arch));
}

WeightStack WeightStack::from_flat(const NetworkArchitecture& arch, const Eigen::VectorXd& flat) {
  return WeightStack(layers_from_flat(arch, flat));
}

WeightGradient::WeightGradient(std::vector<Layer> layers) : LayerStack(std::move(layers)) {
  check_shapes();
}

WeightGradient WeightGradient::zeros(const NetworkArchitecture& arch) {
  return WeightGradient(zero_layers(arch));
}

WeightGradient WeightGradient::from_flat(const NetworkArchitecture& arch,
                                         const Eigen::VectorXd& flat) {
  return WeightGradient(layers_from_flat(arch, flat));
}

void WeightGradient::add_scaled(const LayerStack& other, double scale) {
  if (other.depth() != depth()) throw ShapeError("gradient depth mismatch");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& o = other.layers()[l];
    if (o.A.rows() != layers_[l].A.rows() || o.A.cols() != layers_[l].A.cols()) {
      throw ShapeError("gradient layer shape mismatch");
    }
    layers_[l].A += scale * o.A;
    layers_[l].b += scale * o.b;
  }
}

bool IntervalMatrix2x2::contains(const Mat2& m, double slack) const {
  return ((m.array() >= lo.array() - slack) && (m.array() <= hi.array() + slack)).all();
}

// --- network evaluation -----------------------------------------------------

// The layers are narrow, so the products below are plain loops; Eigen's
// dynamic-size kernels cost more in dispatch than in arithmetic here.

void nn_forward(const Vec2& z, const WeightStack& weights, const ActivationSpec& act,
                ForwardCache& cache) {
  const int L = weights.depth();
  cache.pre.resize(static_cast<std::size_t>(L) + 1);
  cache.post.resize(static_cast<std::size_t>(L));
  cache.slope.resize(static_cast<std::size_t>(L));
  cache.post[0] = z;
  for (int l = 1; l <= L; ++l) {
    const auto i = static_cast<std::size_t>(l);
    const Layer& layer = weights.layers()[i - 1];
    const Eigen::VectorXd& x = cache.post[i - 1];
    Eigen::VectorXd& pre = cache.pre[i];
    const Eigen::Index rows = layer.A.rows();
    const Eigen::Index cols = layer.A.cols();
    pre.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) pre[r] = layer.b[r];
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double xc = x[c];
      for (Eigen::Index r = 0; r < rows; ++r) pre[r] += layer.A(r, c) * xc;
    }
    if (l < L) {
      Eigen::VectorXd& post = cache.post[i];
      Eigen::VectorXd& slope = cache.slope[i];
      post.resize(rows);
      slope.resize(rows);
      for (Eigen::Index k = 0; k < rows; ++k) {
        post[k] = act_value(act, pre[k]);
        slope[k] = act_deriv(act, pre[k]);
      }
    }
  }
  cache.output = cache.pre[static_cast<std::size_t>(L)];
}

Vec2 nn_forward(const Vec2& z, const WeightStack& weights, const ActivationSpec& act) {
  ForwardCache cache;
  nn_forward(z, weights, act, cache);
  return cache.output;
}

Mat2 nn_jacobian_z(const ForwardCache& cache, const WeightStack& weights,
                   const ActivationSpec& act) {
  act.require_c1("nn_jacobian_z");
  const int L = weights.depth();
  Eigen::MatrixXd* m = &cache.work_m[0];
  Eigen::MatrixXd* next = &cache.work_m[1];
  *m = weights.layers()[0].A;
  for (int l = 1; l < L; ++l) {
    const auto i = static_cast<std::size_t>(l);
    const Eigen::VectorXd& slope = cache.slope[i];
    const Eigen::MatrixXd& A = weights.layers()[i].A;
    next->setZero(A.rows(), 2);
    for (Eigen::Index k = 0; k < A.cols(); ++k) {
      const double m0 = slope[k] * (*m)(k, 0);
      const double m1 = slope[k] * (*m)(k, 1);
      for (Eigen::Index r = 0; r < A.rows(); ++r) {
        (*next)(r, 0) += A(r, k) * m0;
        (*next)(r, 1) += A(r, k) * m1;
      }
    }
    std::swap(m, next);
  }
  return *m;
}

Mat2 nn_jacobian_z(const Vec2& z, const WeightStack& weights, const ActivationSpec& act) {
  act.require_c1("nn_jacobian_z");
  ForwardCache cache;
  nn_forward(z, weights, act, cache);
  return nn_jacobian_z(cache, weights, act);
}

void accumulate_weight_grad(const ForwardCache& cache, const WeightStack& weights,
                            const ActivationSpec& act, const Vec2& cotangent, double scale,
                            WeightGradient& out) {
  act.require_c1("nn_weight_grad");
  const int L = weights.depth();
  std::vector<Layer>& grads = out.mutable_layers();
  Eigen::VectorXd* g = &cache.work_v[0];
  Eigen::VectorXd* back = &cache.work_v[1];
  *g = scale * cotangent;
  for (int l = L; l >= 1; --l) {
    const auto idx = static_cast<std::size_t>(l - 1);
    const Eigen::VectorXd& x = cache.post[idx];
    Layer& grad = grads[idx];
    const Eigen::Index rows = grad.A.rows();
    const Eigen::Index cols = grad.A.cols();
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) grad.A(r, c) += (*g)[r] * x[c];
    }
    for (Eigen::Index r = 0; r < rows; ++r) grad.b[r] += (*g)[r];
    if (l > 1) {
      const Eigen::MatrixXd& A = weights.layers()[idx].A;
      const Eigen::VectorXd& slope = cache.slope[idx];
      back->resize(cols);
      for (Eigen::Index c = 0; c < cols; ++c) {
        double s = 0.0;
        for (Eigen::Index r = 0; r < rows; ++r) s += A(r, c) * (*g)[r];
        (*back)[c] = s * slope[c];
      }
      std::swap(g, back);
    }
  }
}

WeightGradient nn_weight_grad(const Vec2& z, const WeightStack& weights,
                              const ActivationSpec& act, const Vec2& cotangent) {
  act.require_c1("nn_weight_grad");
  ForwardCache cache;
  nn_forward(z, weights, act, cache);
  WeightGradient grad = WeightGradient::zeros(weights.architecture());
  accumulate_weight_grad(cache, weights, act, cotangent, 1.0, grad);
  return grad;
}

double lipschitz_bound(const WeightStack& weights, const ActivationSpec& act) {
  double bound = 1.0;
  for (const Layer& layer : weights.layers()) bound *= layer.A.norm();
  const int exponent = weights.architecture().hidden_width_sum();
  return bound * std::pow(act.lipschitz_constant(), exponent);
}

IntervalMatrix2x2 jacobian_enclosure(const WeightStack& weights, const ActivationSpec& act) {
  // Path sums split by sign: pos accumulates the positive monomials
  // (A_l)_{k_l k_{l-1}} ... (A_1)_{k_1 j}, neg the negative ones.
  const auto& layers = weights.layers();
  Eigen::MatrixXd pos = layers[0].A.cwiseMax(0.0);
  Eigen::MatrixXd neg = layers[0].A.cwiseMin(0.0);
  for (std::size_t l = 1; l < layers.size(); ++l) {
    const Eigen::MatrixXd a_pos = layers[l].A.cwiseMax(0.0);
    const Eigen::MatrixXd a_neg = layers[l].A.cwiseMin(0.0);
    Eigen::MatrixXd next_pos = a_pos * pos + a_neg * neg;
    Eigen::MatrixXd next_neg = a_pos * neg + a_neg * pos;
    pos = std::move(next_pos);
    neg = std::move(next_neg);
  }
  const int hidden = weights.depth() - 1;
  const double lo_factor = std::pow(act.rho_prime_min(), hidden);
  const double hi_factor = std::pow(act.rho_prime_max(), hidden);
  IntervalMatrix2x2 box;
  box.lo = pos * lo_factor + neg * hi_factor;
  box.hi = pos * hi_factor + neg * lo_factor;
  return box;
}

double weight_norm_sq(const LayerStack& weights) { return weights.squared_norm(); }

WeightStack project_ball(const WeightStack& weights, double C) {
  if (!(C > 0.0) || !std::isfinite(C)) throw DomainError("ball radius C must be positive");
  const double norm_sq = weights.squared_norm();
  if (norm_sq <= C) return weights;
  // Shrink the factor ulp by ulp until the rounded result is inside the
  // ball, so a projected stack is a fixed point of the projection.
  double scale = std::sqrt(C / norm_sq);
  for (;;) {
    std::vector<Layer> layers = weights.layers();
    for (Layer& layer : layers) {
      layer.A *= scale;
      layer.b *= scale;
    }
    WeightStack projected(std::move(layers));
    if (projected.squared_norm() <= C) return projected;
    scale = std::nextafter(scale, 0.0);
  }
}

}  // namespace monoid
