#include "rlab/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rlab/parallel.hpp"

namespace rlab {

namespace {

double whitened_trace_with_inverse(const Mat& z, const Mat& sigma_inv_reg,
                                   double lambda) {
  Mat a = matmul_nt(matmul(z, sigma_inv_reg), z);
  SymEig eig = sym_eig(a);
  double trace = 0.0;
  for (double s : eig.values) {
    double denom = s * s + lambda;
    if (denom != 0.0) trace += s / denom;
  }
  return trace;
}

struct PointStats {
  double mean, stderr_;
  bool heavy_tail;
};

// Ordered reduction over the per-repetition samples of one curve point.
PointStats aggregate(const std::vector<double>& samples, double sigma2) {
  const double m = static_cast<double>(samples.size());
  double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / m;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  double sd = samples.size() > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
  bool heavy = false;
  double total = mean * m;
  if (total > 0.0 && samples.size() >= 2) {
    std::vector<double> sorted(samples);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    std::size_t top = (samples.size() + 99) / 100;
    double top_sum = std::accumulate(sorted.begin(), sorted.begin() + top, 0.0);
    heavy = top_sum > 0.5 * total;
  }
  return {sigma2 * mean, sigma2 * sd / std::sqrt(m), heavy};
}

std::vector<std::size_t> resolve_abscissas(const EstimatorConfig& config) {
  if (!config.abscissas.empty()) {
    auto v = config.abscissas;
    std::sort(v.begin(), v.end());
    if (v.front() < 1 || v.back() > config.n_max)
      throw DimensionError("estimator: abscissa outside [1, n_max]");
    return v;
  }
  std::vector<std::size_t> v(config.n_max);
  std::iota(v.begin(), v.end(), 1);
  return v;
}

}  // namespace

void EstimatorConfig::validate() const {
  if (repetitions < 2) throw DimensionError("EstimatorConfig: repetitions >= 2");
  if (lambda < 0.0) throw DimensionError("EstimatorConfig: lambda >= 0");
  if (test_points < 1) throw DimensionError("EstimatorConfig: test_points >= 1");
  if (n_max < 1) throw DimensionError("EstimatorConfig: n_max >= 1");
  for (std::size_t a : abscissas)
    if (a < 1 || a > n_max)
      throw DimensionError("EstimatorConfig: abscissas must lie in [1, n_max]");
}

Mat second_moment_estimate(const FeatureMapSpec& spec, const ThetaParams& theta,
                           std::size_t l, RngStream& rng) {
  if (l < 1) throw DimensionError("second_moment_estimate: l >= 1");
  Mat xt = sample_inputs(spec, l, rng);
  Mat zt = apply_map(spec, theta, xt);
  Mat sigma = gram(zt);
  double inv_l = 1.0 / static_cast<double>(l);
  for (std::size_t i = 0; i < sigma.rows(); ++i)
    for (std::size_t j = 0; j < sigma.cols(); ++j) sigma(i, j) *= inv_l;
  return sigma;
}

std::optional<Mat> exact_second_moment(const FeatureMapSpec& spec) {
  if (std::holds_alternative<SphereDirect>(spec.variant) ||
      std::holds_alternative<OneHotHistogram>(spec.variant)) {
    std::size_t p = spec.output_dim();
    Mat sigma = Mat::identity(p);
    for (std::size_t i = 0; i < p; ++i) sigma(i, i) = 1.0 / static_cast<double>(p);
    return sigma;
  }
  if (std::holds_alternative<GaussianDirect>(spec.variant))
    return Mat::identity(spec.output_dim());
  return std::nullopt;
}

double single_trace_sample(const FeatureMapSpec& spec, std::size_t n,
                           const EstimatorConfig& config, RngStream& rng) {
  if (n < 1) throw DimensionError("single_trace_sample: n >= 1");
  ThetaParams theta = sample_theta(spec, rng);
  Mat x = sample_inputs(spec, n, rng);
  Mat sigma;
  if (config.exact_sigma) {
    auto exact = exact_second_moment(spec);
    if (!exact)
      throw DimensionError("single_trace_sample: exact sigma unavailable for spec");
    sigma = std::move(*exact);
  } else {
    sigma = second_moment_estimate(spec, theta, config.test_points, rng);
  }
  Mat z = apply_map(spec, theta, x);
  if (config.whitened && n <= z.cols())
    return whitened_trace_over(z, sigma, config.lambda);
  return pinv_trace_regularized(z, sigma, config.lambda);
}

NoiseCurve estimate_curve_vs_n(const FeatureMapSpec& spec,
                               const EstimatorConfig& config) {
  config.validate();
  const auto ns = resolve_abscissas(config);
  const std::size_t m = config.repetitions;
  const std::size_t p = spec.output_dim();
  auto exact = config.exact_sigma ? exact_second_moment(spec) : std::nullopt;
  if (config.exact_sigma && !exact)
    throw DimensionError("estimate_curve_vs_n: exact sigma unavailable for spec");

  // samples[point][rep]; every repetition owns its column, so the aggregation
  // below is independent of the thread schedule.
  std::vector<std::vector<double>> samples(ns.size(), std::vector<double>(m));
  parallel_for(m, config.threads, [&](std::size_t rep) {
    RngStream rng(config.base_seed, rep + 1);
    ThetaParams theta = sample_theta(spec, rng);
    Mat x = sample_inputs(spec, config.n_max, rng);
    Mat sigma =
        exact ? *exact : second_moment_estimate(spec, theta, config.test_points, rng);
    Mat z = apply_map(spec, theta, x);
    std::optional<Mat> sigma_inv;
    if (config.whitened) sigma_inv = regularized_sym_inverse(sigma, config.lambda);
    for (std::size_t i = 0; i < ns.size(); ++i) {
      Mat zn = z.top_rows(ns[i]);
      samples[i][rep] =
          (config.whitened && ns[i] <= p)
              ? whitened_trace_with_inverse(zn, *sigma_inv, config.lambda)
              : pinv_trace_regularized(zn, sigma, config.lambda);
    }
  });

  NoiseCurve curve{'n', {}, config};
  for (std::size_t i = 0; i < ns.size(); ++i) {
    PointStats st = aggregate(samples[i], config.noise_variance);
    curve.points.push_back({ns[i], st.mean, st.stderr_, m, st.heavy_tail});
  }
  return curve;
}

NoiseCurve estimate_curve_vs_p(const FeatureMapSpec& spec,
                               const EstimatorConfig& config, std::size_t fixed_n) {
  config.validate();
  if (fixed_n < 1) throw DimensionError("estimate_curve_vs_p: fixed_n >= 1");
  if (spec.output_dim() != config.n_max)
    throw DimensionError("estimate_curve_vs_p: spec output width must equal p_max");
  const auto ps = resolve_abscissas(config);
  const std::size_t m = config.repetitions;
  auto exact = config.exact_sigma ? exact_second_moment(spec) : std::nullopt;
  if (config.exact_sigma && !exact)
    throw DimensionError("estimate_curve_vs_p: exact sigma unavailable for spec");

  std::vector<std::vector<double>> samples(ps.size(), std::vector<double>(m));
  parallel_for(m, config.threads, [&](std::size_t rep) {
    RngStream rng(config.base_seed, rep + 1);
    ThetaParams theta = sample_theta(spec, rng);
    Mat x = sample_inputs(spec, fixed_n, rng);
    Mat sigma =
        exact ? *exact : second_moment_estimate(spec, theta, config.test_points, rng);
    Mat z = apply_map(spec, theta, x);  // full width, prefix columns reused
    for (std::size_t i = 0; i < ps.size(); ++i) {
      Mat zp = z.left_cols(ps[i]);
      Mat sp = sigma.top_left(ps[i]);
      samples[i][rep] =
          (config.whitened && fixed_n <= ps[i])
              ? whitened_trace_over(zp, sp, config.lambda)
              : pinv_trace_regularized(zp, sp, config.lambda);
    }
  });

  NoiseCurve curve{'p', {}, config};
  for (std::size_t i = 0; i < ps.size(); ++i) {
    PointStats st = aggregate(samples[i], config.noise_variance);
    curve.points.push_back({ps[i], st.mean, st.stderr_, m, st.heavy_tail});
  }
  return curve;
}

}  // namespace rlab
