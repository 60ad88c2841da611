#include "rlab/optimizer.hpp"

#include <cmath>
#include <string>

#include "rlab/parallel.hpp"
#include "rlab/svd.hpp"

namespace rlab {

namespace {

std::vector<double> scale_factors(const MlpSpec& spec) {
  std::vector<double> inv_sqrt_v;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    double vl = l == 0 ? static_cast<double>(spec.layer_sizes[0])
                       : static_cast<double>(spec.layer_sizes[l]) *
                             activation_variance(spec.act);
    inv_sqrt_v.push_back(1.0 / std::sqrt(vl));
  }
  return inv_sqrt_v;
}

struct ForwardCache {
  std::vector<Mat> h;    // h[0] = x, h[l+1] = sigma(pre[l])
  std::vector<Mat> pre;  // pre-activations per layer
};

Mat forward(const ThetaParams& theta, const MlpSpec& spec,
            const std::vector<double>& inv_sqrt_v, const Mat& x,
            ForwardCache* cache) {
  Mat h = x;
  if (cache) cache->h.push_back(h);
  for (std::size_t l = 0; l < theta.weights.size(); ++l) {
    Mat pre = matmul_nt(h, theta.weights[l]);
    for (std::size_t i = 0; i < pre.rows(); ++i)
      for (std::size_t j = 0; j < pre.cols(); ++j) {
        pre(i, j) = pre(i, j) * inv_sqrt_v[l] + theta.biases[l][j];
      }
    Mat act(pre.rows(), pre.cols());
    for (std::size_t i = 0; i < pre.rows(); ++i)
      for (std::size_t j = 0; j < pre.cols(); ++j)
        act(i, j) = spec.act.value(pre(i, j));
    if (cache) {
      cache->pre.push_back(std::move(pre));
      cache->h.push_back(act);
    }
    h = std::move(act);
  }
  return h;
}

// Accumulates parameter gradients for d loss / d output = dz.
void backward(const ThetaParams& theta, const MlpSpec& spec,
              const std::vector<double>& inv_sqrt_v, const ForwardCache& cache,
              const Mat& dz, ThetaParams& grad) {
  Mat dh = dz;
  for (std::size_t li = theta.weights.size(); li-- > 0;) {
    const Mat& pre = cache.pre[li];
    Mat delta(dh.rows(), dh.cols());
    for (std::size_t i = 0; i < dh.rows(); ++i)
      for (std::size_t j = 0; j < dh.cols(); ++j)
        delta(i, j) = dh(i, j) * spec.act.derivative(pre(i, j));
    Mat gw = matmul_tn(delta, cache.h[li]);  // (d out x d in)
    for (std::size_t i = 0; i < gw.rows(); ++i)
      for (std::size_t j = 0; j < gw.cols(); ++j)
        grad.weights[li](i, j) += inv_sqrt_v[li] * gw(i, j);
    for (std::size_t j = 0; j < delta.cols(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < delta.rows(); ++i) s += delta(i, j);
      grad.biases[li][j] += s;
    }
    if (li > 0) {
      Mat next = matmul(delta, theta.weights[li]);
      for (std::size_t i = 0; i < next.rows(); ++i)
        for (std::size_t j = 0; j < next.cols(); ++j) next(i, j) *= inv_sqrt_v[li];
      dh = std::move(next);
    }
  }
}

ThetaParams zeros_like(const ThetaParams& theta) {
  ThetaParams z;
  for (const Mat& w : theta.weights) z.weights.emplace_back(w.rows(), w.cols());
  for (const auto& b : theta.biases) z.biases.emplace_back(b.size(), 0.0);
  return z;
}

void axpy_theta(ThetaParams& dst, const ThetaParams& src, double a) {
  for (std::size_t l = 0; l < dst.weights.size(); ++l) {
    double* d = dst.weights[l].data();
    const double* s = src.weights[l].data();
    std::size_t cnt = dst.weights[l].rows() * dst.weights[l].cols();
    for (std::size_t i = 0; i < cnt; ++i) d[i] += a * s[i];
  }
  for (std::size_t l = 0; l < dst.biases.size(); ++l)
    for (std::size_t i = 0; i < dst.biases[l].size(); ++i)
      dst.biases[l][i] += a * src.biases[l][i];
}

double frobenius_inner(const Mat& a, const Mat& b) {
  double s = 0.0;
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) s += pa[i] * pb[i];
  return s;
}

// U diag(f(mu_i)) U^T from a symmetric eigendecomposition.
Mat spectral_apply(const SymEig& eig, auto f) {
  const std::size_t n = eig.values.size();
  Mat out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = f(eig.values[i]);
    if (d == 0.0) continue;
    for (std::size_t r = 0; r < n; ++r) {
      double qr = eig.vectors(r, i);
      if (qr == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) out(r, c) += d * qr * eig.vectors(c, i);
    }
  }
  return out;
}

// One batch member: loss value and (optionally) the cotangents dL/dZ and
// dL/dSigma. The regularized inverse is evaluated through whichever Gram
// matrix is full rank: G = Z^T Z for n >= p, K = Z Z^T for n < p (via the
// exact identity (G + lambda I)^{-1} Z^T = Z^T (K + lambda I)^{-1}), so near-
// zero noise eigenvalues of the rank-deficient orientation never get inverted.
struct MemberEval {
  double loss = 0.0;
  Mat dz;      // dL/dZ
  Mat dsigma;  // dL/dSigma
};

MemberEval member_eval(const Mat& z, const Mat& sigma, double lambda,
                       bool want_grad) {
  const std::size_t n = z.rows(), p = z.cols();
  MemberEval out;
  auto inv1 = [lambda](double mu) {
    double denom = mu + lambda;
    return denom == 0.0 ? 0.0 : 1.0 / denom;
  };
  if (n >= p) {
    // loss = <Sigma, A G A> with A = (G + lambda I)^{-1}
    Mat g = gram(z);
    SymEig eig = sym_eig(g);
    Mat m_mat = spectral_apply(eig, [&](double mu) {
      double d = inv1(mu);
      return mu * d * d;
    });
    out.loss = frobenius_inner(sigma, m_mat);
    if (!want_grad) return out;
    Mat a_mat = spectral_apply(eig, inv1);
    Mat k_mat = spectral_apply(eig, [&](double mu) { return mu * inv1(mu); });
    // dL/dZ = 2 Z B, B = S1 - S1 K - K S1 with S1 = A Sigma A (K symmetric)
    Mat s1 = matmul(matmul(a_mat, sigma), a_mat);
    Mat b_mat = s1;
    Mat s1k = matmul(s1, k_mat);
    for (std::size_t r = 0; r < p; ++r)
      for (std::size_t c = 0; c < p; ++c) b_mat(r, c) -= s1k(r, c) + s1k(c, r);
    out.dz = matmul(z, b_mat);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < p; ++c) out.dz(r, c) *= 2.0;
    out.dsigma = std::move(m_mat);
    return out;
  }
  // loss = <A^2, S> with A = (K + lambda I)^{-1}, S = Z Sigma Z^T
  Mat k = matmul_nt(z, z);
  SymEig eig = sym_eig(k);
  Mat a_mat = spectral_apply(eig, inv1);
  Mat a2 = spectral_apply(eig, [&](double mu) {
    double d = inv1(mu);
    return d * d;
  });
  Mat zs = matmul(z, sigma);  // n x p
  Mat s = matmul_nt(zs, z);   // Z Sigma Z^T
  out.loss = frobenius_inner(a2, s);
  if (!want_grad) return out;
  // dL/dZ = 2 A^2 Z Sigma - 2 (A^2 S A + A S A^2) Z
  Mat a2zs = matmul(a2, zs);
  Mat asa2 = matmul(matmul(a_mat, s), a2);  // A S A^2; A^2 S A is its transpose
  Mat w(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) w(r, c) = asa2(r, c) + asa2(c, r);
  Mat wz = matmul(w, z);
  out.dz = Mat(n, p);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c)
      out.dz(r, c) = 2.0 * (a2zs(r, c) - wz(r, c));
  // dL/dSigma = Z^T A^2 Z
  out.dsigma = matmul_tn(z, matmul(a2, z));
  return out;
}

}  // namespace

void OptimConfig::validate() const {
  if (iterations < 1) throw DimensionError("OptimConfig: iterations >= 1");
  if (lr_start < 0.0) throw DimensionError("OptimConfig: lr_start >= 0");
  if (batch < 1 || sigma_mc < 1 || target_n < 1)
    throw DimensionError("OptimConfig: batch, sigma_mc, target_n >= 1");
  if (lambda < 0.0) throw DimensionError("OptimConfig: lambda >= 0");
}

ThetaParams mlp_init(const MlpSpec& spec, RngStream& rng) {
  if (spec.layer_sizes.size() < 2) throw DimensionError("mlp_init: need a layer");
  ThetaParams theta;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    Mat w(spec.layer_sizes[l + 1], spec.layer_sizes[l]);
    for (std::size_t i = 0; i < w.rows(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) = rng.normal();
    theta.weights.push_back(std::move(w));
    theta.biases.emplace_back(spec.layer_sizes[l + 1], 0.0);  // zero-initialized
  }
  return theta;
}

Mat mlp_apply(const ThetaParams& theta, const MlpSpec& spec, const Mat& x) {
  if (x.cols() != spec.input_dim()) throw DimensionError("mlp_apply: input dim");
  Mat z = forward(theta, spec, scale_factors(spec), x, nullptr);
  if (!z.all_finite()) throw NumericalError("mlp_apply: non-finite output");
  return z;
}

double regularized_trace_loss(const Mat& z, const Mat& sigma, double lambda) {
  if (sigma.rows() != z.cols() || sigma.cols() != z.cols())
    throw DimensionError("regularized_trace_loss: sigma must be p x p");
  return member_eval(z, sigma, lambda, false).loss;
}

namespace {

double loss_impl(const ThetaParams& theta, const MlpSpec& spec,
                 const OptimConfig& config, RngStream& rng, ThetaParams* grad) {
  config.validate();
  const auto inv_sqrt_v = scale_factors(spec);
  const std::size_t d = spec.input_dim();

  // Fixed draw order: the second-moment sample first, then the batch inputs.
  Mat x_mc = gaussian_sample(config.sigma_mc, d, rng);
  std::vector<Mat> xs;
  xs.reserve(config.batch);
  for (std::size_t b = 0; b < config.batch; ++b)
    xs.push_back(gaussian_sample(config.target_n, d, rng));

  ForwardCache mc_cache;
  Mat z_mc = forward(theta, spec, inv_sqrt_v, x_mc, grad ? &mc_cache : nullptr);
  Mat sigma = gram(z_mc);
  const double inv_s = 1.0 / static_cast<double>(config.sigma_mc);
  for (std::size_t i = 0; i < sigma.rows(); ++i)
    for (std::size_t j = 0; j < sigma.cols(); ++j) sigma(i, j) *= inv_s;

  const std::size_t p = spec.output_dim();
  const double inv_batch = 1.0 / static_cast<double>(config.batch);
  std::vector<double> member_loss(config.batch);
  std::vector<ThetaParams> member_grad;
  Mat sigma_cotangent(p, p);  // dL/dSigma accumulated over the batch

  // Members are processed in fixed-size chunks: the chunk is evaluated in
  // parallel and then reduced in member order, so results do not depend on
  // the thread count.
  const std::size_t chunk = 32;
  if (grad) member_grad.resize(std::min(chunk, config.batch));
  std::vector<Mat> member_sigma_cot(grad ? std::min(chunk, config.batch) : 0);

  for (std::size_t base = 0; base < config.batch; base += chunk) {
    std::size_t count = std::min(chunk, config.batch - base);
    parallel_for(count, config.threads, [&](std::size_t i) {
      std::size_t b = base + i;
      ForwardCache cache;
      Mat z = forward(theta, spec, inv_sqrt_v, xs[b], grad ? &cache : nullptr);
      MemberEval eval = member_eval(z, sigma, config.lambda, grad != nullptr);
      member_loss[b] = eval.loss;
      if (!grad) return;
      for (std::size_t r = 0; r < eval.dz.rows(); ++r)
        for (std::size_t c = 0; c < eval.dz.cols(); ++c)
          eval.dz(r, c) *= inv_batch;
      member_grad[i] = zeros_like(theta);
      backward(theta, spec, inv_sqrt_v, cache, eval.dz, member_grad[i]);
      member_sigma_cot[i] = std::move(eval.dsigma);
    });
    if (grad) {
      for (std::size_t i = 0; i < count; ++i) {
        axpy_theta(*grad, member_grad[i], 1.0);
        for (std::size_t r = 0; r < p; ++r)
          for (std::size_t c = 0; c < p; ++c)
            sigma_cotangent(r, c) += inv_batch * member_sigma_cot[i](r, c);
      }
    }
  }

  double loss = 0.0;
  for (double v : member_loss) loss += v;
  loss *= inv_batch;
  if (!std::isfinite(loss))
    throw NumericalError("loss: non-finite value (base_seed " +
                         std::to_string(rng.base_seed()) + ", stream " +
                         std::to_string(rng.stream_id()) + ")");

  if (grad) {
    // Sigma = (1/s) Z~^T Z~  =>  dL/dZ~ = (2/s) Z~ (dL/dSigma).
    Mat dz_mc = matmul(z_mc, sigma_cotangent);
    for (std::size_t r = 0; r < dz_mc.rows(); ++r)
      for (std::size_t c = 0; c < dz_mc.cols(); ++c) dz_mc(r, c) *= 2.0 * inv_s;
    backward(theta, spec, inv_sqrt_v, mc_cache, dz_mc, *grad);
  }
  return loss;
}

}  // namespace

double loss_eval(const ThetaParams& theta, const MlpSpec& spec,
                 const OptimConfig& config, RngStream rng) {
  return loss_impl(theta, spec, config, rng, nullptr);
}

double loss_and_grad(const ThetaParams& theta, const MlpSpec& spec,
                     const OptimConfig& config, RngStream rng, ThetaParams& grad) {
  grad = zeros_like(theta);
  return loss_impl(theta, spec, config, rng, &grad);
}

AmsgradState AmsgradState::like(const ThetaParams& theta) {
  AmsgradState st;
  st.m = zeros_like(theta);
  st.v = zeros_like(theta);
  st.vhat = zeros_like(theta);
  return st;
}

namespace {

void amsgrad_update(double g, double& m, double& v, double& vhat, double& x,
                    double lr, const AmsgradState& st) {
  m = st.beta1 * m + (1.0 - st.beta1) * g;
  v = st.beta2 * v + (1.0 - st.beta2) * g * g;
  if (v > vhat) vhat = v;  // max accumulator, updated before the step
  double t = static_cast<double>(st.step);
  double m_hat = m / (1.0 - std::pow(st.beta1, t));
  double v_hat = vhat / (1.0 - std::pow(st.beta2, t));
  x -= lr * m_hat / (std::sqrt(v_hat) + st.epsilon);
}

}  // namespace

void amsgrad_step(AmsgradState& state, ThetaParams& theta, const ThetaParams& grad,
                  double lr) {
  ++state.step;
  for (std::size_t l = 0; l < theta.weights.size(); ++l) {
    std::size_t cnt = theta.weights[l].rows() * theta.weights[l].cols();
    for (std::size_t i = 0; i < cnt; ++i)
      amsgrad_update(grad.weights[l].data()[i], state.m.weights[l].data()[i],
                     state.v.weights[l].data()[i], state.vhat.weights[l].data()[i],
                     theta.weights[l].data()[i], lr, state);
  }
  for (std::size_t l = 0; l < theta.biases.size(); ++l)
    for (std::size_t i = 0; i < theta.biases[l].size(); ++i)
      amsgrad_update(grad.biases[l][i], state.m.biases[l][i], state.v.biases[l][i],
                     state.vhat.biases[l][i], theta.biases[l][i], lr, state);
}

TrainResult train(const MlpSpec& spec, const OptimConfig& config) {
  config.validate();
  RngStream init_rng(config.seed, 0);
  TrainResult result;
  result.theta = mlp_init(spec, init_rng);
  AmsgradState state = AmsgradState::like(result.theta);
  ThetaParams grad;
  for (std::size_t t = 0; t < config.iterations; ++t) {
    double lr = config.lr_start *
                (1.0 - static_cast<double>(t) / static_cast<double>(config.iterations));
    RngStream step_rng(config.seed, t + 1);
    double loss = loss_and_grad(result.theta, spec, config, step_rng, grad);
    result.losses.push_back(loss);
    result.lrs.push_back(lr);
    if (loss > 1e6 * result.losses.front()) {
      result.diverged = true;
      return result;
    }
    amsgrad_step(state, result.theta, grad, lr);
  }
  return result;
}

}  // namespace rlab
