#pragma once

#include <string>

namespace rlab {

enum class ActKind {
  Sigmoid,
  Tanh,
  Softplus,
  Rbf,
  Gelu,
  Silu,
  Swish,
  Mish,
  Sin,
  Cos,
  Erf,
  Relu,
  Identity,
};

/// Scalar activation with value and closed-form derivative. beta parameterizes
/// Rbf and Swish (default 1). All catalog entries are analytic except ReLU.
struct Activation {
  ActKind kind = ActKind::Tanh;
  double beta = 1.0;

  double value(double x) const;
  double derivative(double x) const;  // ReLU uses the convention sigma'(0) := 0
  bool analytic() const { return kind != ActKind::Relu; }

  std::string name() const;
  static Activation parse(const std::string& name, double beta = 1.0);
};

}  // namespace rlab
