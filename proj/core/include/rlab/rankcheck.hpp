#pragma once

#include <array>
#include <cstddef>

#include "rlab/featmaps.hpp"

namespace rlab {

enum class FrkVerdict { FrkSupported, FrkRefuted, Inconclusive };

/// Result of the Monte-Carlo full-rank protocol. The verdict is three-way: a
/// single inverse condition number above the threshold witnesses full rank;
/// all samples inside the machine-precision band refute it; anything else is
/// reported as inconclusive together with the histogram.
struct RankReport {
  std::size_t n = 0, p = 0, samples = 0;
  double threshold = 1e-3;
  double max_icond = 0.0, min_icond = 0.0;
  double fraction_above_threshold = 0.0;
  FrkVerdict verdict = FrkVerdict::Inconclusive;
  /// Decade histogram of inverse condition numbers: bin k counts samples in
  /// [10^{k-16}, 10^{k-15}); bin 0 also absorbs everything below 1e-16.
  std::array<std::size_t, 16> icond_histogram{};
};

/// Draws `samples` independent (theta, X) pairs with n input rows each and
/// inspects the inverse condition number of Z = phi_theta(X).
RankReport frk_check(const FeatureMapSpec& spec, std::size_t n, std::size_t samples,
                     double threshold, RngStream& rng);

/// Smallest eigenvalue of the l-sample second-moment estimate.
double cov_check(const FeatureMapSpec& spec, std::size_t l, RngStream& rng);

}  // namespace rlab
