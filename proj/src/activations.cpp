#include "monoid/activations.hpp"

#include <cmath>
#include <string>

#include "monoid/error.hpp"

namespace monoid {

ActivationSpec ActivationSpec::smoothed_relu(double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("smoothed_relu needs a finite epsilon > 0, got " + std::to_string(epsilon));
  }
  return ActivationSpec(ActivationKind::smoothed_relu, epsilon);
}

double ActivationSpec::rho_prime_min() const noexcept {
  return kind_ == ActivationKind::identity ? 1.0 : 0.0;
}

double ActivationSpec::rho_prime_max() const noexcept { return 1.0; }

void ActivationSpec::require_c1(std::string_view context) const {
  if (!is_c1()) {
    throw UsageError(std::string(context) +
                     ": exact relu is not differentiable, regularize first (smoothed_relu)");
  }
}

std::string ActivationSpec::name() const {
  switch (kind_) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::smoothed_relu: return "smoothed_relu";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::identity: return "identity";
  }
  return "unknown";
}

namespace {
void check_finite(double x) {
  if (!std::isfinite(x)) throw DomainError("activation evaluated at a non-finite point");
}
}  // namespace

double act_value(const ActivationSpec& spec, double x) {
  check_finite(x);
  switch (spec.kind()) {
    case ActivationKind::relu:
      return x > 0.0 ? x : 0.0;
    case ActivationKind::smoothed_relu: {
      const double eps = spec.epsilon();
      if (x <= -eps) return 0.0;
      if (x >= eps) return x;
      const double s = x + eps;
      return s * s / (4.0 * eps);
    }
    case ActivationKind::tanh:
      return std::tanh(x);
    case ActivationKind::identity:
      return x;
  }
  return x;
}

double act_deriv(const ActivationSpec& spec, double x) {
  check_finite(x);
  switch (spec.kind()) {
    case ActivationKind::relu:
      return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::smoothed_relu: {
      const double eps = spec.epsilon();
      if (x <= -eps) return 0.0;
      if (x >= eps) return 1.0;
      return (x + eps) / (2.0 * eps);
    }
    case ActivationKind::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::identity:
      return 1.0;
  }
  return 1.0;
}

double regularization_gap(const ActivationSpec& spec) {
  if (spec.kind() != ActivationKind::smoothed_relu) {
    throw UsageError("regularization_gap is only defined for smoothed_relu");
  }
  return spec.epsilon() / 4.0;
}

ActivationSpec parse_activation(std::string_view kind, double epsilon) {
  if (kind == "relu") return ActivationSpec::relu();
  if (kind == "smoothed_relu") return ActivationSpec::smoothed_relu(epsilon);
  if (kind == "tanh") return ActivationSpec::tanh();
  if (kind == "identity") return ActivationSpec::identity();
  throw FormatError("unknown activation kind '" + std::string(kind) + "'");
}

}  // namespace monoid
