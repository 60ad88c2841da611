#pragma once

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "rlab/activations.hpp"
#include "rlab/mat.hpp"
#include "rlab/rng.hpp"

namespace rlab {

// Feature-map variants. Direct variants (SphereDirect, GaussianDirect,
// OneHotHistogram) sample z itself; the map is the identity on those samples.
struct IdentityMap {
  std::size_t d;
};
struct PolynomialMap {
  std::size_t d;
  std::size_t m;  // degree
  double c;       // offset, > 0
};
struct RandomNn {
  std::vector<std::size_t> layer_sizes;  // d_0, ..., d_L
  Activation act;
  bool with_bias = false;
};
struct NtkMap {
  std::size_t d0, d1;  // scalar output, d2 = 1
  Activation act;
};
enum class RffVariant { SinCos, CosBias };
struct RffMap {
  std::size_t d, q;
  RffVariant variant = RffVariant::SinCos;
  double weight_scale = 1.0;  // rows of W ~ N(0, weight_scale^2 I_d)
};
struct SphereDirect {
  std::size_t p;
};
struct GaussianDirect {
  std::size_t p;
};
struct OneHotHistogram {
  std::size_t p;
};

struct FeatureMapSpec {
  std::variant<IdentityMap, PolynomialMap, RandomNn, NtkMap, RffMap, SphereDirect,
               GaussianDirect, OneHotHistogram>
      variant;
  /// Optional custom input sampler (n, rng) -> n x input_dim. Defaults to
  /// i.i.d. N(0, I) rows. Not serializable.
  std::function<Mat(std::size_t, RngStream&)> input_sampler;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
};

/// Sampled realization of the random parameters of a feature map.
struct ThetaParams {
  std::vector<Mat> weights;                 // per layer; RFF frequency matrix
  std::vector<std::vector<double>> biases;  // per layer; RFF phases
};

// --- dimensions and parameter sampling ---

/// binomial(m+d, m) in exact integer arithmetic; throws on 64-bit overflow.
std::uint64_t poly_dim(std::size_t d, std::size_t m);

/// Var_{u~N(0,1)}(act(u)) estimated once per activation with exactly 10^4
/// samples from a dedicated fixed stream and cached, so every experiment
/// shares the same estimate. Throws if the estimate is zero.
double activation_variance(const Activation& act);

ThetaParams nn_init(const RandomNn& spec, RngStream& rng);
ThetaParams ntk_init(const NtkMap& spec, RngStream& rng);
ThetaParams rff_init(const RffMap& spec, RngStream& rng);

// --- forward application ---

/// Polynomial feature map of one point; coordinates indexed by multi-indices
/// (m_1, ..., m_{d+1}) with sum m in lexicographic order.
std::vector<double> poly_feature_map(std::span<const double> x, std::size_t m,
                                     double c);

Mat nn_apply(const ThetaParams& theta, const RandomNn& spec, const Mat& x);
Mat ntk_apply(const ThetaParams& theta, const NtkMap& spec, const Mat& x);
Mat rff_apply(const ThetaParams& theta, const RffMap& spec, const Mat& x);

// --- direct samplers ---

/// Rows i.i.d. uniform on the unit sphere S^{p-1}.
Mat sphere_sample(std::size_t p, std::size_t n, RngStream& rng);
/// Rows i.i.d. uniform over the standard basis vectors e_1, ..., e_p.
Mat onehot_sample(std::size_t p, std::size_t n, RngStream& rng);
/// rows x cols i.i.d. standard normal entries.
Mat gaussian_sample(std::size_t rows, std::size_t cols, RngStream& rng);

// --- unified dispatch ---

/// Samples theta for the map (empty for deterministic / direct variants).
ThetaParams sample_theta(const FeatureMapSpec& spec, RngStream& rng);
/// Samples n input rows (for direct variants these are the features z).
Mat sample_inputs(const FeatureMapSpec& spec, std::size_t n, RngStream& rng);
/// Applies the map row-wise; identity for direct variants.
Mat apply_map(const FeatureMapSpec& spec, const ThetaParams& theta, const Mat& x);

}  // namespace rlab
