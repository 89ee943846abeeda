#pragma once

#include <string>
#include <string_view>

namespace monoid {

enum class ActivationKind { relu, smoothed_relu, tanh, identity };

/// Scalar activation and its regularization parameter.
///
/// The smoothed ReLU is the C^1 quadratic blend
///   0                    for x <= -eps
///   (x + eps)^2 / (4eps) for -eps <= x <= eps
///   x                    for x >= eps
/// which converges uniformly to max(0, x) with gap eps/4.
class ActivationSpec {
 public:
  static ActivationSpec relu() { return ActivationSpec(ActivationKind::relu, 0.0); }
  static ActivationSpec smoothed_relu(double epsilon);
  static ActivationSpec tanh() { return ActivationSpec(ActivationKind::tanh, 0.0); }
  static ActivationSpec identity() { return ActivationSpec(ActivationKind::identity, 0.0); }

  ActivationKind kind() const noexcept { return kind_; }
  double epsilon() const noexcept { return epsilon_; }

  /// True for the kinds whose derivative is continuous.
  bool is_c1() const noexcept { return kind_ != ActivationKind::relu; }

  double rho_prime_min() const noexcept;
  double rho_prime_max() const noexcept;
  double lipschitz_constant() const noexcept { return rho_prime_max(); }

  /// Throws UsageError unless the activation is C^1.
  void require_c1(std::string_view context) const;

  std::string name() const;

  friend bool operator==(const ActivationSpec&, const ActivationSpec&) = default;

 private:
  ActivationSpec(ActivationKind kind, double epsilon) : kind_(kind), epsilon_(epsilon) {}

  ActivationKind kind_;
  double epsilon_;
};

double act_value(const ActivationSpec& spec, double x);

/// Derivative; for exact ReLU the convention rho'(0) = 0 applies.
double act_deriv(const ActivationSpec& spec, double x);

/// sup_x |rho_eps(x) - max(0, x)| = eps / 4. Only defined for smoothed_relu.
double regularization_gap(const ActivationSpec& spec);

/// Parses "relu", "smoothed_relu", "tanh", "identity".
ActivationSpec parse_activation(std::string_view kind, double epsilon);

}  // namespace monoid
