#pragma once

#include <cstddef>
#include <stdexcept>

namespace rlab {

/// Thrown when a closed-form expression is requested outside its domain.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

enum class Regime { Under, Over, Threshold };

/// Extended-real analytic value; value may be +infinity.
struct BoundValue {
  double value;
  Regime regime;
};

/// Universal lower bound: sigma^2 n/(p+1-n) for p >= n, sigma^2 p/(n+1-p)
/// for p <= n (both branches give sigma^2 n at n = p).
BoundValue lower_bound(std::size_t n, std::size_t p, double sigma2);

/// Exact noise error for z uniform on the unit sphere. Defined for n >= p = 1
/// or p >= n >= 1; the region 2 <= p < n has no published formula and throws.
BoundValue sphere_exact(std::size_t n, std::size_t p);

/// Exact noise error for z ~ N(0, I_p); symmetric in (n, p).
BoundValue gaussian_exact(std::size_t n, std::size_t p);

/// E[1/m_1] with 1/0 := 0 and m_1 ~ Binomial(n, 1/p): the one-hot histogram
/// counterexample. Stable log-binomial evaluation, abs error <= 1e-12.
double counterexample_expectation(std::size_t n, std::size_t p);

struct ChainValues {
  double bound, sphere, gaussian;
};

/// (lower bound, sphere exact, gaussian exact) for p >= n+2, n >= 2; asserts
/// bound <= sphere < gaussian.
ChainValues relative_chain(std::size_t n, std::size_t p);

}  // namespace rlab
