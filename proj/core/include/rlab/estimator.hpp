#pragma once

#include <optional>
#include <vector>

#include "rlab/featmaps.hpp"
#include "rlab/mat.hpp"
#include "rlab/numkit.hpp"

namespace rlab {

struct EstimatorConfig {
  std::size_t repetitions = 10000;  // m
  std::size_t test_points = 10000;  // l, second-moment sample size
  double lambda = 1e-12;
  std::size_t n_max = 256;  // n_max for vs-n curves, p_max for vs-p curves
  std::uint64_t base_seed = 0;
  bool whitened = false;
  double noise_variance = 1.0;  // sigma^2
  /// Use the analytic second moment for direct samplers instead of the
  /// l-sample estimate (oracle tests; removes estimator bias).
  bool exact_sigma = false;
  /// Abscissa values to evaluate; empty means 1..n_max.
  std::vector<std::size_t> abscissas;
  std::size_t threads = 0;  // 0 = auto; results identical for any value

  void validate() const;
};

struct CurvePoint {
  std::size_t value;  // n or p
  double mean;        // sigma^2 * mean trace
  double stderr_;     // sample sd of the mean
  std::size_t count;
  bool heavy_tail;  // top 1% of samples contribute > 50% of the mean
};

struct NoiseCurve {
  char abscissa;  // 'n' or 'p'
  std::vector<CurvePoint> points;
  EstimatorConfig config;
};

/// (1/l) Z~^T Z~ with Z~ = phi_theta of l fresh input rows.
Mat second_moment_estimate(const FeatureMapSpec& spec, const ThetaParams& theta,
                           std::size_t l, RngStream& rng);

/// Analytic second moment, available for the direct samplers:
/// Sphere and OneHot give (1/p) I, Gaussian gives I.
std::optional<Mat> exact_second_moment(const FeatureMapSpec& spec);

/// One repetition of the estimation procedure at a single n: sample theta,
/// sample X and X~, form Z and the second-moment estimate, return the
/// SVD-regularized trace (or the whitened variant when configured and n <= p).
double single_trace_sample(const FeatureMapSpec& spec, std::size_t n,
                           const EstimatorConfig& config, RngStream& rng);

/// Noise curve over n: one X of n_max rows per repetition, prefixes reused
/// across all n, so points at different n are correlated. Mean and stderr are
/// over the repetitions only.
NoiseCurve estimate_curve_vs_n(const FeatureMapSpec& spec,
                               const EstimatorConfig& config);

/// Noise curve over p at fixed n: the full-width feature matrix is computed
/// once per repetition and prefix columns are reused across all p. The feature
/// map's output width must equal config.n_max (interpreted as p_max).
NoiseCurve estimate_curve_vs_p(const FeatureMapSpec& spec,
                               const EstimatorConfig& config, std::size_t fixed_n);

}  // namespace rlab
