#include "rlab/closedform.hpp"

#include <cmath>
#include <limits>

namespace rlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Regime regime_of(std::size_t n, std::size_t p) {
  if (n == p) return Regime::Threshold;
  return p > n ? Regime::Over : Regime::Under;
}

}  // namespace

BoundValue lower_bound(std::size_t n, std::size_t p, double sigma2) {
  if (n < 1 || p < 1) throw DomainError("lower_bound: n, p >= 1");
  if (sigma2 < 0.0) throw DomainError("lower_bound: sigma2 >= 0");
  double nn = static_cast<double>(n), pp = static_cast<double>(p);
  double v = p >= n ? sigma2 * nn / (pp + 1.0 - nn) : sigma2 * pp / (nn + 1.0 - pp);
  return {v, regime_of(n, p)};
}

BoundValue sphere_exact(std::size_t n, std::size_t p) {
  if (n < 1 || p < 1) throw DomainError("sphere_exact: n, p >= 1");
  double nn = static_cast<double>(n), pp = static_cast<double>(p);
  if (p == 1) return {1.0 / nn, regime_of(n, p)};
  if (n == 1) return {1.0 / pp, regime_of(n, p)};
  if (n > p) throw DomainError("sphere_exact: no formula for 2 <= p < n");
  if (p <= n + 1) return {kInf, regime_of(n, p)};
  return {nn / (pp - 1.0 - nn) * (pp - 2.0) / pp, regime_of(n, p)};
}

BoundValue gaussian_exact(std::size_t n, std::size_t p) {
  if (n < 1 || p < 1) throw DomainError("gaussian_exact: n, p >= 1");
  double nn = static_cast<double>(n), pp = static_cast<double>(p);
  if (p >= n + 2) return {nn / (pp - 1.0 - nn), regime_of(n, p)};
  if (n >= p + 2) return {pp / (nn - 1.0 - pp), regime_of(n, p)};
  return {kInf, regime_of(n, p)};
}

double counterexample_expectation(std::size_t n, std::size_t p) {
  if (n < 1) throw DomainError("counterexample_expectation: n >= 1");
  if (p < 2) throw DomainError("counterexample_expectation: p >= 2");
  double log_q = -std::log(static_cast<double>(p));           // log(1/p)
  double log_1mq = std::log1p(-1.0 / static_cast<double>(p));  // log(1-1/p)
  double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
  double sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    double kk = static_cast<double>(k);
    double log_term = lg_n1 - std::lgamma(kk + 1.0) -
                      std::lgamma(static_cast<double>(n - k) + 1.0) + kk * log_q +
                      static_cast<double>(n - k) * log_1mq - std::log(kk);
    sum += std::exp(log_term);
  }
  return sum;
}

ChainValues relative_chain(std::size_t n, std::size_t p) {
  if (n < 2 || p < n + 2)
    throw DomainError("relative_chain: requires n >= 2 and p >= n+2");
  ChainValues v{lower_bound(n, p, 1.0).value, sphere_exact(n, p).value,
                gaussian_exact(n, p).value};
  if (!(v.bound <= v.sphere && v.sphere < v.gaussian))
    throw DomainError("relative_chain: ordering violated");
  return v;
}

}  // namespace rlab
