#include "rlab/activations.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rlab/numkit.hpp"

namespace rlab {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// Stable branch form, no overflow for large |x|.
double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

double Activation::value(double x) const {
  switch (kind) {
    case ActKind::Sigmoid: return sigmoid(x);
    case ActKind::Tanh: return std::tanh(x);
    case ActKind::Softplus: return softplus(x);
    case ActKind::Rbf: return std::exp(-beta * x * x);
    case ActKind::Gelu: return x * normal_cdf(x);
    case ActKind::Silu: return x * sigmoid(x);
    case ActKind::Swish: return x * sigmoid(beta * x);
    case ActKind::Mish: return x * std::tanh(softplus(x));
    case ActKind::Sin: return std::sin(x);
    case ActKind::Cos: return std::cos(x);
    case ActKind::Erf: return erf_accurate(x);
    case ActKind::Relu: return x > 0.0 ? x : 0.0;
    case ActKind::Identity: return x;
  }
  throw std::logic_error("Activation::value: bad kind");
}

double Activation::derivative(double x) const {
  switch (kind) {
    case ActKind::Sigmoid: {
      double s = sigmoid(x);
      return s * (1.0 - s);
    }
    case ActKind::Tanh: {
      double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActKind::Softplus: return sigmoid(x);
    case ActKind::Rbf: return -2.0 * beta * x * std::exp(-beta * x * x);
    case ActKind::Gelu: return normal_cdf(x) + x * normal_pdf(x);
    case ActKind::Silu: {
      double s = sigmoid(x);
      return s + x * s * (1.0 - s);
    }
    case ActKind::Swish: {
      double s = sigmoid(beta * x);
      return s + beta * x * s * (1.0 - s);
    }
    case ActKind::Mish: {
      double sp = softplus(x);
      double t = std::tanh(sp);
      return t + x * (1.0 - t * t) * sigmoid(x);
    }
    case ActKind::Sin: return std::cos(x);
    case ActKind::Cos: return -std::sin(x);
    case ActKind::Erf: return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
    case ActKind::Relu: return x > 0.0 ? 1.0 : 0.0;
    case ActKind::Identity: return 1.0;
  }
  throw std::logic_error("Activation::derivative: bad kind");
}

std::string Activation::name() const {
  switch (kind) {
    case ActKind::Sigmoid: return "sigmoid";
    case ActKind::Tanh: return "tanh";
    case ActKind::Softplus: return "softplus";
    case ActKind::Rbf: return "rbf";
    case ActKind::Gelu: return "gelu";
    case ActKind::Silu: return "silu";
    case ActKind::Swish: return "swish";
    case ActKind::Mish: return "mish";
    case ActKind::Sin: return "sin";
    case ActKind::Cos: return "cos";
    case ActKind::Erf: return "erf";
    case ActKind::Relu: return "relu";
    case ActKind::Identity: return "identity";
  }
  return "?";
}

Activation Activation::parse(const std::string& name, double beta) {
  for (ActKind k :
       {ActKind::Sigmoid, ActKind::Tanh, ActKind::Softplus, ActKind::Rbf,
        ActKind::Gelu, ActKind::Silu, ActKind::Swish, ActKind::Mish, ActKind::Sin,
        ActKind::Cos, ActKind::Erf, ActKind::Relu, ActKind::Identity}) {
    Activation a{k, beta};
    if (a.name() == name) return a;
  }
  throw std::invalid_argument("unknown activation: " + name);
}

}  // namespace rlab
