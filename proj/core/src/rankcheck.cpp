#include "rlab/rankcheck.hpp"

#include <algorithm>
#include <cmath>

#include "rlab/numkit.hpp"
#include "rlab/parallel.hpp"
#include "rlab/svd.hpp"

namespace rlab {

namespace {
constexpr double kMachineBand = 1e-13;
}

RankReport frk_check(const FeatureMapSpec& spec, std::size_t n, std::size_t samples,
                     double threshold, RngStream& rng) {
  if (samples < 1) throw DimensionError("frk_check: samples >= 1");
  RankReport report;
  report.n = n;
  report.p = spec.output_dim();
  report.samples = samples;
  report.threshold = threshold;
  report.max_icond = 0.0;
  report.min_icond = 1.0;
  std::vector<double> iconds(samples);
  parallel_for(samples, 0, [&](std::size_t i) {
    RngStream sub = rng.substream(i);
    ThetaParams theta = sample_theta(spec, sub);
    Mat x = sample_inputs(spec, n, sub);
    Mat z = apply_map(spec, theta, x);
    iconds[i] = inverse_condition_number(z);
  });
  std::size_t above = 0;
  for (double icond : iconds) {
    report.max_icond = std::max(report.max_icond, icond);
    report.min_icond = std::min(report.min_icond, icond);
    if (icond > threshold) ++above;
    int bin = 0;
    if (icond > 0.0)
      bin = std::clamp(static_cast<int>(std::floor(std::log10(icond))) + 16, 0, 15);
    ++report.icond_histogram[static_cast<std::size_t>(bin)];
  }
  report.fraction_above_threshold =
      static_cast<double>(above) / static_cast<double>(samples);
  if (report.max_icond > threshold)
    report.verdict = FrkVerdict::FrkSupported;
  else if (report.max_icond <= kMachineBand)
    report.verdict = FrkVerdict::FrkRefuted;
  else
    report.verdict = FrkVerdict::Inconclusive;
  return report;
}

double cov_check(const FeatureMapSpec& spec, std::size_t l, RngStream& rng) {
  if (l < spec.output_dim()) throw DimensionError("cov_check: requires l >= p");
  ThetaParams theta = sample_theta(spec, rng);
  Mat xt = sample_inputs(spec, l, rng);
  Mat zt = apply_map(spec, theta, xt);
  Mat sigma = gram(zt);
  double inv_l = 1.0 / static_cast<double>(l);
  for (std::size_t i = 0; i < sigma.rows(); ++i)
    for (std::size_t j = 0; j < sigma.cols(); ++j) sigma(i, j) *= inv_l;
  SymEig eig = sym_eig(sigma);
  return eig.values.back();
}

}  // namespace rlab
