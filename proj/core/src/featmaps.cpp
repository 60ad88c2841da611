#include "rlab/featmaps.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>

namespace rlab {

namespace {

constexpr std::uint64_t kActVarianceSeed = 0x41435456u;  // dedicated stream
constexpr std::size_t kActVarianceSamples = 10000;

std::uint64_t act_stream_id(const Activation& act) {
  std::uint64_t id = static_cast<std::uint64_t>(act.kind) + 1;
  std::uint64_t bits;
  static_assert(sizeof(double) == sizeof(std::uint64_t));
  std::memcpy(&bits, &act.beta, sizeof(bits));
  return id * 0x100000001B3ull ^ bits;
}

}  // namespace

std::uint64_t poly_dim(std::size_t d, std::size_t m) {
  if (d < 1 || m < 1) throw DimensionError("poly_dim: requires d >= 1, m >= 1");
  // binomial(m+d, m) by the multiplicative formula, checking for overflow.
  std::uint64_t result = 1;
  for (std::size_t i = 1; i <= m; ++i) {
    std::uint64_t num = d + i;
    std::uint64_t g = std::gcd(result, i);
    std::uint64_t r = result / g, den = i / g;
    std::uint64_t g2 = std::gcd(num, den);
    num /= g2;
    den /= g2;
    if (r > UINT64_MAX / num)
      throw std::overflow_error("poly_dim: binomial exceeds 64 bits");
    result = r * num / den;
  }
  return result;
}

double activation_variance(const Activation& act) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, double> cache;
  std::lock_guard lock(mu);
  auto key = std::make_pair(static_cast<int>(act.kind), act.beta);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  RngStream rng(kActVarianceSeed, act_stream_id(act));
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < kActVarianceSamples; ++i) {
    double v = act.value(rng.normal());
    sum += v;
    sumsq += v * v;
  }
  double n = static_cast<double>(kActVarianceSamples);
  double var = sumsq / n - (sum / n) * (sum / n);
  if (var <= 0.0)
    throw NumericalError("activation_variance: estimate is zero (constant activation)");
  cache[key] = var;
  return var;
}

ThetaParams nn_init(const RandomNn& spec, RngStream& rng) {
  const auto& ls = spec.layer_sizes;
  if (ls.size() < 2) throw DimensionError("nn_init: need at least one layer");
  for (std::size_t s : ls)
    if (s < 1) throw DimensionError("nn_init: layer sizes must be >= 1");
  ThetaParams theta;
  for (std::size_t l = 0; l + 1 < ls.size(); ++l) {
    double vl = l == 0 ? static_cast<double>(ls[0])
                       : static_cast<double>(ls[l]) * activation_variance(spec.act);
    double sd = 1.0 / std::sqrt(vl);
    Mat w(ls[l + 1], ls[l]);
    for (std::size_t i = 0; i < w.rows(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) = sd * rng.normal();
    theta.weights.push_back(std::move(w));
    if (spec.with_bias) {
      std::vector<double> b(ls[l + 1]);
      for (double& v : b) v = rng.normal();
      theta.biases.push_back(std::move(b));
    }
  }
  return theta;
}

Mat nn_apply(const ThetaParams& theta, const RandomNn& spec, const Mat& x) {
  const auto& ls = spec.layer_sizes;
  if (x.cols() != ls.front()) throw DimensionError("nn_apply: input dim mismatch");
  Mat h = x;
  for (std::size_t l = 0; l < theta.weights.size(); ++l) {
    Mat pre = matmul_nt(h, theta.weights[l]);
    if (spec.with_bias)
      for (std::size_t i = 0; i < pre.rows(); ++i)
        for (std::size_t j = 0; j < pre.cols(); ++j) pre(i, j) += theta.biases[l][j];
    for (std::size_t i = 0; i < pre.rows(); ++i)
      for (std::size_t j = 0; j < pre.cols(); ++j)
        pre(i, j) = spec.act.value(pre(i, j));
    h = std::move(pre);
  }
  if (!h.all_finite()) throw NumericalError("nn_apply: non-finite output");
  return h;
}

ThetaParams ntk_init(const NtkMap& spec, RngStream& rng) {
  if (spec.d0 < 1 || spec.d1 < 1) throw DimensionError("ntk_init: layer sizes >= 1");
  ThetaParams theta;
  Mat w0(spec.d1, spec.d0), w1(1, spec.d1);
  for (std::size_t i = 0; i < w0.rows(); ++i)
    for (std::size_t j = 0; j < w0.cols(); ++j) w0(i, j) = rng.normal();
  for (std::size_t j = 0; j < w1.cols(); ++j) w1(0, j) = rng.normal();
  theta.weights.push_back(std::move(w0));
  theta.weights.push_back(std::move(w1));
  return theta;
}

Mat ntk_apply(const ThetaParams& theta, const NtkMap& spec, const Mat& x) {
  if (x.cols() != spec.d0) throw DimensionError("ntk_apply: input dim mismatch");
  const Mat& w0 = theta.weights[0];
  const Mat& w1 = theta.weights[1];
  const double inv_sqrt_v0 = 1.0 / std::sqrt(static_cast<double>(spec.d0));
  const double inv_sqrt_v1 =
      1.0 / std::sqrt(static_cast<double>(spec.d1) * activation_variance(spec.act));
  const std::size_t p = spec.d0 * spec.d1 + spec.d1;
  Mat out(x.rows(), p);
  std::vector<double> pre(spec.d1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j = 0; j < spec.d1; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < spec.d0; ++k) s += w0(j, k) * x(r, k);
      pre[j] = inv_sqrt_v0 * s;
    }
    // d out / d W0_{jk}, row-major over (j, k), then d out / d W1_{1j}.
    for (std::size_t j = 0; j < spec.d1; ++j) {
      double back = inv_sqrt_v1 * w1(0, j) * spec.act.derivative(pre[j]) * inv_sqrt_v0;
      for (std::size_t k = 0; k < spec.d0; ++k)
        out(r, j * spec.d0 + k) = back * x(r, k);
    }
    for (std::size_t j = 0; j < spec.d1; ++j)
      out(r, spec.d0 * spec.d1 + j) = inv_sqrt_v1 * spec.act.value(pre[j]);
  }
  if (!out.all_finite()) throw NumericalError("ntk_apply: non-finite output");
  return out;
}

ThetaParams rff_init(const RffMap& spec, RngStream& rng) {
  ThetaParams theta;
  Mat w(spec.q, spec.d);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j)
      w(i, j) = spec.weight_scale * rng.normal();
  theta.weights.push_back(std::move(w));
  if (spec.variant == RffVariant::CosBias) {
    std::vector<double> b(spec.q);
    for (double& v : b) v = rng.uniform(0.0, 2.0 * std::numbers::pi);
    theta.biases.push_back(std::move(b));
  }
  return theta;
}

Mat rff_apply(const ThetaParams& theta, const RffMap& spec, const Mat& x) {
  if (x.cols() != spec.d) throw DimensionError("rff_apply: input dim mismatch");
  Mat wx = matmul_nt(x, theta.weights[0]);  // n x q
  if (spec.variant == RffVariant::SinCos) {
    Mat out(x.rows(), 2 * spec.q);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < spec.q; ++j) {
        out(i, j) = std::sin(wx(i, j));
        out(i, spec.q + j) = std::cos(wx(i, j));
      }
    return out;
  }
  Mat out(x.rows(), spec.q);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < spec.q; ++j)
      out(i, j) = std::numbers::sqrt2 * std::cos(wx(i, j) + theta.biases[0][j]);
  return out;
}

std::vector<double> poly_feature_map(std::span<const double> x, std::size_t m,
                                     double c) {
  if (c <= 0.0) throw DimensionError("poly_feature_map: requires c > 0");
  const std::size_t d = x.size();
  const std::size_t p = static_cast<std::size_t>(poly_dim(d, m));
  std::vector<double> out;
  out.reserve(p);
  // Lexicographic enumeration of (m_1, ..., m_{d+1}) with sum m; the last
  // index is the offset coordinate with value sqrt(c).
  std::vector<std::size_t> mi(d + 1, 0);
  std::vector<double> powers_c(m + 1, 1.0);
  for (std::size_t k = 1; k <= m; ++k) powers_c[k] = powers_c[k - 1] * std::sqrt(c);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos,
                                                          std::size_t rem) {
    if (pos == d) {
      mi[d] = rem;
      // multinomial(m; m_1..m_{d+1})
      double coef = 1.0;
      std::size_t used = 0;
      for (std::size_t idx = 0; idx <= d; ++idx) {
        for (std::size_t t = 1; t <= mi[idx]; ++t) {
          ++used;
          coef = coef * static_cast<double>(used) / static_cast<double>(t);
        }
      }
      double value = std::sqrt(coef) * powers_c[rem];
      for (std::size_t idx = 0; idx < d; ++idx)
        for (std::size_t t = 0; t < mi[idx]; ++t) value *= x[idx];
      out.push_back(value);
      return;
    }
    for (std::size_t v = 0; v <= rem; ++v) {
      mi[pos] = v;
      rec(pos + 1, rem - v);
    }
  };
  rec(0, m);
  return out;
}

Mat sphere_sample(std::size_t p, std::size_t n, RngStream& rng) {
  if (p < 1) throw DimensionError("sphere_sample: p >= 1");
  Mat out(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    double nrm = 0.0;
    do {
      nrm = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        out(i, j) = rng.normal();
        nrm += out(i, j) * out(i, j);
      }
      nrm = std::sqrt(nrm);
    } while (nrm == 0.0);
    for (std::size_t j = 0; j < p; ++j) out(i, j) /= nrm;
  }
  return out;
}

Mat onehot_sample(std::size_t p, std::size_t n, RngStream& rng) {
  if (p < 2) throw DimensionError("onehot_sample: p >= 2");
  Mat out(n, p);
  for (std::size_t i = 0; i < n; ++i) out(i, rng.next_below(p)) = 1.0;
  return out;
}

Mat gaussian_sample(std::size_t rows, std::size_t cols, RngStream& rng) {
  Mat out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = rng.normal();
  return out;
}

std::size_t FeatureMapSpec::input_dim() const {
  return std::visit(
      [](const auto& v) -> std::size_t {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IdentityMap>) return v.d;
        else if constexpr (std::is_same_v<T, PolynomialMap>) return v.d;
        else if constexpr (std::is_same_v<T, RandomNn>) return v.layer_sizes.front();
        else if constexpr (std::is_same_v<T, NtkMap>) return v.d0;
        else if constexpr (std::is_same_v<T, RffMap>) return v.d;
        else if constexpr (std::is_same_v<T, SphereDirect>) return v.p;
        else if constexpr (std::is_same_v<T, GaussianDirect>) return v.p;
        else return v.p;
      },
      variant);
}

std::size_t FeatureMapSpec::output_dim() const {
  return std::visit(
      [](const auto& v) -> std::size_t {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IdentityMap>) return v.d;
        else if constexpr (std::is_same_v<T, PolynomialMap>)
          return static_cast<std::size_t>(poly_dim(v.d, v.m));
        else if constexpr (std::is_same_v<T, RandomNn>) return v.layer_sizes.back();
        else if constexpr (std::is_same_v<T, NtkMap>) return v.d0 * v.d1 + v.d1;
        else if constexpr (std::is_same_v<T, RffMap>)
          return v.variant == RffVariant::SinCos ? 2 * v.q : v.q;
        else if constexpr (std::is_same_v<T, SphereDirect>) return v.p;
        else if constexpr (std::is_same_v<T, GaussianDirect>) return v.p;
        else return v.p;
      },
      variant);
}

ThetaParams sample_theta(const FeatureMapSpec& spec, RngStream& rng) {
  return std::visit(
      [&](const auto& v) -> ThetaParams {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, RandomNn>) return nn_init(v, rng);
        else if constexpr (std::is_same_v<T, NtkMap>) return ntk_init(v, rng);
        else if constexpr (std::is_same_v<T, RffMap>) return rff_init(v, rng);
        else return ThetaParams{};
      },
      spec.variant);
}

Mat sample_inputs(const FeatureMapSpec& spec, std::size_t n, RngStream& rng) {
  if (spec.input_sampler) return spec.input_sampler(n, rng);
  return std::visit(
      [&](const auto& v) -> Mat {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SphereDirect>)
          return sphere_sample(v.p, n, rng);
        else if constexpr (std::is_same_v<T, OneHotHistogram>)
          return onehot_sample(v.p, n, rng);
        else if constexpr (std::is_same_v<T, GaussianDirect>)
          return gaussian_sample(n, v.p, rng);
        else
          return gaussian_sample(n, spec.input_dim(), rng);
      },
      spec.variant);
}

Mat apply_map(const FeatureMapSpec& spec, const ThetaParams& theta, const Mat& x) {
  return std::visit(
      [&](const auto& v) -> Mat {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PolynomialMap>) {
          Mat out(x.rows(), static_cast<std::size_t>(poly_dim(v.d, v.m)));
          for (std::size_t i = 0; i < x.rows(); ++i) {
            auto phi = poly_feature_map(x.row(i), v.m, v.c);
            for (std::size_t j = 0; j < phi.size(); ++j) out(i, j) = phi[j];
          }
          return out;
        } else if constexpr (std::is_same_v<T, RandomNn>) {
          return nn_apply(theta, v, x);
        } else if constexpr (std::is_same_v<T, NtkMap>) {
          return ntk_apply(theta, v, x);
        } else if constexpr (std::is_same_v<T, RffMap>) {
          return rff_apply(theta, v, x);
        } else {
          return x;  // identity and direct variants
        }
      },
      spec.variant);
}

}  // namespace rlab
