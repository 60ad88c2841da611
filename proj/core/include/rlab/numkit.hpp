#pragma once

#include "rlab/mat.hpp"
#include "rlab/rng.hpp"
#include "rlab/svd.hpp"

namespace rlab {

/// tr(V diag(s_i^2/(s_i^2+lambda)^2) V^T sigma) from the SVD of z. At
/// lambda = 0 on full-rank z this equals tr((Z^+)^T Sigma Z^+). Zero singular
/// values contribute nothing (the 1/0 := 0 pseudoinverse convention).
double pinv_trace_regularized(const Mat& z, const Mat& sigma, double lambda);

/// Regularized evaluation of tr((Z Sigma^{-1} Z^T)^{-1}) for the
/// overparameterized case n <= p. Both symmetric inverses are approximated by
/// U diag(s_i/(s_i^2+lambda)) U^T from symmetric eigendecompositions.
double whitened_trace_over(const Mat& z, const Mat& sigma, double lambda);

/// s_min(z) / s_max(z); 0 when s_max = 0.
double inverse_condition_number(const Mat& z);

/// erf with absolute error <= 1e-12 on |x| <= 6; exactly odd.
/// Maclaurin-type series for |x| < 4.2, Lentz continued fraction for the
/// complement beyond (measured max error ~2e-16 against long-double series).
double erf_accurate(double x);

/// Standard normal CDF, derived from erf_accurate.
double normal_cdf(double x);

/// Regularized symmetric inverse U diag(s_i/(s_i^2+lambda)) U^T.
Mat regularized_sym_inverse(const Mat& a, double lambda);

}  // namespace rlab
