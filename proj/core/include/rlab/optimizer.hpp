#pragma once

#include <vector>

#include "rlab/activations.hpp"
#include "rlab/featmaps.hpp"
#include "rlab/mat.hpp"
#include "rlab/rng.hpp"

namespace rlab {

/// Feature-map family used for optimization: fully connected layers with the
/// activation applied after every layer (including the last), biases present
/// and zero-initialized, weights N(0,1), and activation-dependent scaling
/// 1/sqrt(V_l) applied outside the weights (V_0 = d_0, V_l = d_l * Var sigma(u)).
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;  // d_0, ..., d_L; p = d_L
  Activation act;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
};

struct OptimConfig {
  std::size_t iterations = 1000;
  double lr_start = 1e-3;    // linearly decays to 0
  std::size_t batch = 1024;  // X realizations per step
  std::size_t sigma_mc = 1000;
  double lambda = 1e-12;
  std::size_t target_n = 15;
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  void validate() const;
};

ThetaParams mlp_init(const MlpSpec& spec, RngStream& rng);
Mat mlp_apply(const ThetaParams& theta, const MlpSpec& spec, const Mat& x);

/// tr(sigma (Z^T Z + lambda I)^{-1} Z^T Z (Z^T Z + lambda I)^{-1}), the
/// SVD-free regularized form of tr((Z^+)^T sigma Z^+); the inverse comes from
/// a symmetric eigendecomposition.
double regularized_trace_loss(const Mat& z, const Mat& sigma, double lambda);

/// Batch-averaged surrogate loss: `batch` draws of X (target_n rows each) and
/// one second-moment estimate from sigma_mc fresh points per call.
double loss_eval(const ThetaParams& theta, const MlpSpec& spec,
                 const OptimConfig& config, RngStream rng);

/// Loss and gradient from the same random draws (common random numbers with
/// loss_eval at equal rng state). Gradient flows through both Z and the
/// second-moment sample.
double loss_and_grad(const ThetaParams& theta, const MlpSpec& spec,
                     const OptimConfig& config, RngStream rng, ThetaParams& grad);

struct AmsgradState {
  ThetaParams m, v, vhat;  // first/second moment and elementwise max
  std::size_t step = 0;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;

  static AmsgradState like(const ThetaParams& theta);
};

void amsgrad_step(AmsgradState& state, ThetaParams& theta, const ThetaParams& grad,
                  double lr);

struct TrainResult {
  ThetaParams theta;
  std::vector<double> losses;  // per-step loss
  std::vector<double> lrs;
  bool diverged = false;
};

/// Full AMSGrad loop with learning rate decaying linearly from lr_start to 0.
/// Aborts (diverged = true) if the loss exceeds 1e6 times its initial value.
TrainResult train(const MlpSpec& spec, const OptimConfig& config);

}  // namespace rlab
