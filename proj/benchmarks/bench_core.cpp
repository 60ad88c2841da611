#include <benchmark/benchmark.h>

#include "rlab/estimator.hpp"
#include "rlab/featmaps.hpp"
#include "rlab/numkit.hpp"
#include "rlab/svd.hpp"

using namespace rlab;

namespace {

Mat random_mat(std::size_t n, std::size_t p, std::uint64_t seed) {
  RngStream rng(seed, 0);
  Mat m(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) m(i, j) = rng.normal();
  return m;
}

void bm_svd(benchmark::State& state) {
  Mat a = random_mat(state.range(0), state.range(1), 1);
  for (auto _ : state) benchmark::DoNotOptimize(svd(a));
}
BENCHMARK(bm_svd)->Args({30, 30})->Args({90, 30})->Args({30, 90})->Args({256, 30});

void bm_right_singular(benchmark::State& state) {
  Mat a = random_mat(state.range(0), state.range(1), 2);
  for (auto _ : state) benchmark::DoNotOptimize(right_singular(a));
}
BENCHMARK(bm_right_singular)->Args({90, 30})->Args({30, 90})->Args({256, 30});

void bm_pinv_trace(benchmark::State& state) {
  Mat z = random_mat(state.range(0), 30, 3);
  Mat sigma = Mat::identity(30);
  for (auto _ : state)
    benchmark::DoNotOptimize(pinv_trace_regularized(z, sigma, 1e-12));
}
BENCHMARK(bm_pinv_trace)->Arg(15)->Arg(30)->Arg(90);

void bm_nn_apply(benchmark::State& state) {
  RandomNn spec{{10, 256, 256, 30}, Activation{ActKind::Tanh}, false};
  RngStream rng(4, 0);
  ThetaParams theta = nn_init(spec, rng);
  Mat x = random_mat(state.range(0), 10, 5);
  for (auto _ : state) benchmark::DoNotOptimize(nn_apply(theta, spec, x));
}
BENCHMARK(bm_nn_apply)->Arg(64)->Arg(256);

void bm_single_trace_sample(benchmark::State& state) {
  FeatureMapSpec spec{RandomNn{{10, 32, 32, 30}, Activation{ActKind::Tanh}, false}};
  EstimatorConfig config;
  config.test_points = 1000;
  config.n_max = state.range(0);
  for (auto _ : state) {
    RngStream rng(6, state.iterations());
    benchmark::DoNotOptimize(
        single_trace_sample(spec, state.range(0), config, rng));
  }
}
BENCHMARK(bm_single_trace_sample)->Arg(15)->Arg(60);

}  // namespace

BENCHMARK_MAIN();
