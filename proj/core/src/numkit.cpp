#include "rlab/numkit.hpp"

#include <cmath>
#include <numbers>

namespace rlab {

double pinv_trace_regularized(const Mat& z, const Mat& sigma, double lambda) {
  if (lambda < 0.0) throw DimensionError("pinv_trace_regularized: lambda < 0");
  if (sigma.rows() != z.cols() || sigma.cols() != z.cols())
    throw DimensionError("pinv_trace_regularized: sigma must be p x p");
  if (!is_symmetric(sigma, 1e-9))
    throw DimensionError("pinv_trace_regularized: sigma not symmetric");
  RightSingular rs = right_singular(z);
  const std::size_t p = z.cols(), k = rs.s.size();
  double trace = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double s = rs.s[i];
    double denom = s * s + lambda;
    if (denom == 0.0) continue;  // s = 0, lambda = 0: pseudoinverse convention
    double d = (s * s) / (denom * denom);
    if (d == 0.0) continue;
    // v_i^T sigma v_i
    double q = 0.0;
    for (std::size_t r = 0; r < p; ++r) {
      double vr = rs.v(r, i);
      if (vr == 0.0) continue;
      double acc = 0.0;
      for (std::size_t c = 0; c < p; ++c) acc += sigma(r, c) * rs.v(c, i);
      q += vr * acc;
    }
    trace += d * q;
  }
  return trace;
}

Mat regularized_sym_inverse(const Mat& a, double lambda) {
  SymEig eig = sym_eig(a);
  const std::size_t m = a.rows();
  Mat out(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = eig.values[i];
    double denom = s * s + lambda;
    double d = denom == 0.0 ? 0.0 : s / denom;
    if (d == 0.0) continue;
    for (std::size_t r = 0; r < m; ++r) {
      double vr = eig.vectors(r, i) * d;
      if (vr == 0.0) continue;
      for (std::size_t c = 0; c < m; ++c) out(r, c) += vr * eig.vectors(c, i);
    }
  }
  return out;
}

double whitened_trace_over(const Mat& z, const Mat& sigma, double lambda) {
  if (z.rows() > z.cols())
    throw DimensionError("whitened_trace_over: requires n <= p");
  if (sigma.rows() != z.cols() || sigma.cols() != z.cols())
    throw DimensionError("whitened_trace_over: sigma must be p x p");
  if (lambda < 0.0) throw DimensionError("whitened_trace_over: lambda < 0");
  Mat sigma_inv = regularized_sym_inverse(sigma, lambda);
  Mat a = matmul_nt(matmul(z, sigma_inv), z);  // n x n
  SymEig eig = sym_eig(a);
  double trace = 0.0;
  for (double s : eig.values) {
    double denom = s * s + lambda;
    if (denom != 0.0) trace += s / denom;
  }
  return trace;
}

double inverse_condition_number(const Mat& z) {
  std::vector<double> s = singular_values(z);
  if (s.front() == 0.0) return 0.0;
  return s.back() / s.front();
}

namespace {

// erf(x) = (2x/sqrt(pi)) e^{-x^2} sum_k (2x^2)^k / (1*3*...*(2k+1)),
// all-positive terms, no cancellation.
double erf_series(double x) {
  double x2 = x * x;
  double term = 1.0, sum = 1.0;
  for (int k = 0; k < 400; ++k) {
    term *= 2.0 * x2 / (2.0 * k + 3.0);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return 2.0 * x * std::exp(-x2) / std::sqrt(std::numbers::pi) * sum;
}

// erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + (2/2)/(x + (3/2)/(x + ...))))
// evaluated by the modified Lentz algorithm; x > 0 and reasonably large.
double erfc_cf(double x) {
  const double tiny = 1e-300;
  double f = x, c = x, d = 0.0;
  for (int n = 1; n < 300; ++n) {
    double an = 0.5 * n;
    d = x + an * d;
    if (d == 0.0) d = tiny;
    c = x + an / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-17) break;
  }
  return std::exp(-x * x) / (std::sqrt(std::numbers::pi) * f);
}

}  // namespace

double erf_accurate(double x) {
  double ax = std::fabs(x);
  double r;
  if (ax < 4.2)
    r = erf_series(ax);
  else if (ax < 30.0)
    r = 1.0 - erfc_cf(ax);
  else
    r = 1.0;
  return std::copysign(r, x);
}

double normal_cdf(double x) {
  return 0.5 * (1.0 + erf_accurate(x / std::numbers::sqrt2));
}

}  // namespace rlab
