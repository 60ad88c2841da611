#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "rlab/featmaps.hpp"
#include "rlab/svd.hpp"

using namespace rlab;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Mat random_points(std::size_t n, std::size_t d, RngStream& rng, double scale = 1.0) {
  Mat x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = scale * rng.normal();
  return x;
}

// Brute-force count of multi-indices (m_1,...,m_{d+1}) with sum m.
std::size_t count_multi_indices(std::size_t d, std::size_t m) {
  if (d + 1 == 1) return 1;
  std::size_t total = 0;
  for (std::size_t first = 0; first <= m; ++first)
    total += count_multi_indices(d - 1, m - first);
  return total;
}

}  // namespace

TEST_CASE("poly_dim examples and enumeration oracle") {
  CHECK(poly_dim(3, 4) == 35);  // binomial(7, 4)
  CHECK(poly_dim(1, 1) == 2);
  CHECK(poly_dim(2, 2) == 6);
  for (std::size_t d = 1; d <= 4; ++d)
    for (std::size_t m = 1; m <= 5; ++m)
      CHECK(poly_dim(d, m) == count_multi_indices(d, m));
  CHECK_THROWS_AS(poly_dim(40, 40), std::overflow_error);
}

TEST_CASE("polynomial map realizes the polynomial kernel") {
  RngStream rng(101, 0);
  const std::size_t d = 3, m = 4;
  const double c = 1.0;
  for (int pair = 0; pair < 100; ++pair) {
    Mat x = random_points(2, d, rng);
    auto fx = poly_feature_map(x.row(0), m, c);
    auto fy = poly_feature_map(x.row(1), m, c);
    REQUIRE(fx.size() == poly_dim(d, m));
    double kernel = std::pow(dot(x.row(0), x.row(1)) + c, (double)m);
    double feat = dot(fx, fy);
    CHECK(feat == doctest::Approx(kernel).epsilon(1e-10));
  }
}

TEST_CASE("polynomial map of zero keeps only the pure-offset coordinate") {
  std::vector<double> zero(3, 0.0);
  auto f = poly_feature_map(zero, 4, 2.0);
  double norm2 = dot(f, f);
  CHECK(norm2 == doctest::Approx(std::pow(2.0, 4)).epsilon(1e-12));
  std::size_t nonzero = 0;
  for (double v : f)
    if (v != 0.0) ++nonzero;
  CHECK(nonzero == 1);
}

TEST_CASE("activation_variance is cached, positive, and near the truth for tanh") {
  Activation tanh_act{ActKind::Tanh};
  double v1 = activation_variance(tanh_act);
  double v2 = activation_variance(tanh_act);
  CHECK(v1 == v2);  // cached: bit-identical
  // E[tanh(U)^2] for U~N(0,1) is about 0.394; the 1e4-sample estimate
  // should land within a few standard errors.
  CHECK(v1 > 0.37);
  CHECK(v1 < 0.42);
}

TEST_CASE("activation_variance against a large independent oracle") {
  Activation act{ActKind::Sigmoid};
  RngStream rng(555, 123);
  double sum = 0.0, sumsq = 0.0;
  const int n = 2000000;
  for (int i = 0; i < n; ++i) {
    double y = act.value(rng.normal());
    sum += y;
    sumsq += y * y;
  }
  double mean = sum / n;
  double truth = sumsq / n - mean * mean;
  CHECK(activation_variance(act) == doctest::Approx(truth).epsilon(0.05));
}

TEST_CASE("activation derivatives match finite differences") {
  RngStream rng(7, 7);
  for (ActKind kind : {ActKind::Sigmoid, ActKind::Tanh, ActKind::Softplus,
                       ActKind::Rbf, ActKind::Gelu, ActKind::Silu, ActKind::Swish,
                       ActKind::Mish, ActKind::Sin, ActKind::Cos, ActKind::Erf,
                       ActKind::Identity}) {
    Activation act{kind, 1.3};
    for (int i = 0; i < 100; ++i) {
      double x = rng.uniform(-5.0, 5.0);
      double h = 1e-6 * std::max(1.0, std::fabs(x));
      double fd = (act.value(x + h) - act.value(x - h)) / (2 * h);
      double an = act.derivative(x);
      CHECK(std::fabs(fd - an) <= 1e-6 * std::max(1.0, std::fabs(an)));
    }
  }
}

TEST_CASE("relu basics") {
  Activation relu{ActKind::Relu};
  CHECK(relu.value(-2.0) == 0.0);
  CHECK(relu.value(3.0) == 3.0);
  CHECK(relu.derivative(0.0) == 0.0);
  CHECK(relu.derivative(1.0) == 1.0);
  CHECK_FALSE(relu.analytic());
}

TEST_CASE("activation names round-trip through parse") {
  for (ActKind kind : {ActKind::Sigmoid, ActKind::Tanh, ActKind::Softplus,
                       ActKind::Rbf, ActKind::Gelu, ActKind::Silu, ActKind::Swish,
                       ActKind::Mish, ActKind::Sin, ActKind::Cos, ActKind::Erf,
                       ActKind::Relu, ActKind::Identity}) {
    Activation act{kind, 2.0};
    Activation back = Activation::parse(act.name(), 2.0);
    CHECK(back.kind == kind);
  }
  CHECK_THROWS_AS(Activation::parse("nope"), std::invalid_argument);
}

TEST_CASE("nn output coordinates have roughly unit variance") {
  RandomNn spec{{10, 32, 32}, Activation{ActKind::Tanh}, false};
  RngStream rng(11, 0);
  // last layer is followed by the activation, so output variance is
  // Var(act(u)) with u approximately standard normal
  double target = activation_variance(spec.act);
  double sum = 0.0, sumsq = 0.0;
  std::size_t count = 0;
  for (int rep = 0; rep < 200; ++rep) {
    auto sub = rng.substream(rep);
    ThetaParams theta = nn_init(spec, sub);
    Mat x = random_points(4, 10, sub);
    Mat z = nn_apply(theta, spec, x);
    REQUIRE(z.rows() == 4);
    REQUIRE(z.cols() == 32);
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j) {
        sum += z(i, j);
        sumsq += z(i, j) * z(i, j);
        ++count;
      }
  }
  double var = sumsq / count - (sum / count) * (sum / count);
  CHECK(var == doctest::Approx(target).epsilon(0.15));
}

TEST_CASE("nn_apply single-neuron hand computation") {
  RandomNn spec{{1, 1}, Activation{ActKind::Identity}, false};
  ThetaParams theta;
  theta.weights.push_back(Mat(1, 1, {3.0}));
  theta.biases.push_back({});
  Mat x(1, 1, {2.0});
  // V_0 = d_0 = 1, so output = (1/sqrt(1)) * 3 * 2 = 6
  Mat z = nn_apply(theta, spec, x);
  CHECK(z(0, 0) == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("ntk map dimension and finite-difference identity") {
  NtkMap spec{4, 6, Activation{ActKind::Tanh}};
  FeatureMapSpec fm{spec};
  CHECK(fm.output_dim() == 4 * 6 + 6);

  // phi(x) is the gradient of the scalar net in its parameters; check a few
  // coordinates against central differences on the parameters.
  RngStream rng(21, 1);
  ThetaParams theta = ntk_init(spec, rng);
  Mat x = random_points(3, 4, rng);
  Mat z = ntk_apply(theta, spec, x);
  REQUIRE(z.rows() == 3);
  REQUIRE(z.cols() == 30);

  double v0 = 4.0;
  double v1 = 6.0 * activation_variance(spec.act);
  auto net = [&](const ThetaParams& t, std::span<const double> xi) {
    double out = 0.0;
    for (std::size_t h = 0; h < 6; ++h) {
      double pre = 0.0;
      for (std::size_t j = 0; j < 4; ++j) pre += t.weights[0](h, j) * xi[j];
      out += t.weights[1](0, h) * spec.act.value(pre / std::sqrt(v0));
    }
    return out / std::sqrt(v1);
  };

  const double h = 1e-5;
  for (std::size_t row = 0; row < 3; ++row) {
    // a W^(0) coordinate (row-major: entry (1,2) sits at index 1*4+2)
    {
      ThetaParams tp = theta, tm = theta;
      tp.weights[0](1, 2) += h;
      tm.weights[0](1, 2) -= h;
      double fd = (net(tp, x.row(row)) - net(tm, x.row(row))) / (2 * h);
      CHECK(z(row, 1 * 4 + 2) == doctest::Approx(fd).epsilon(1e-6));
    }
    // a W^(1) coordinate, stored after all of W^(0)
    {
      ThetaParams tp = theta, tm = theta;
      tp.weights[1](0, 3) += h;
      tm.weights[1](0, 3) -= h;
      double fd = (net(tp, x.row(row)) - net(tm, x.row(row))) / (2 * h);
      CHECK(z(row, 4 * 6 + 3) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("rff sincos feature norm is exactly q") {
  RffMap spec{5, 8, RffVariant::SinCos, 1.0};
  RngStream rng(31, 2);
  ThetaParams theta = rff_init(spec, rng);
  Mat x = random_points(10, 5, rng);
  Mat z = rff_apply(theta, spec, x);
  REQUIRE(z.cols() == 16);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double norm2 = dot(z.row(i), z.row(i));
    CHECK(norm2 == doctest::Approx(8.0).epsilon(1e-12));
  }
}

TEST_CASE("rff inner products approximate the gaussian kernel") {
  const std::size_t d = 3, q = 40000;
  RngStream rng(41, 3);
  Mat x = random_points(2, d, rng, 0.5);
  double dist2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double diff = x(0, j) - x(1, j);
    dist2 += diff * diff;
  }
  double kernel = std::exp(-dist2 / 2.0);
  for (RffVariant variant : {RffVariant::SinCos, RffVariant::CosBias}) {
    RffMap spec{d, q, variant, 1.0};
    ThetaParams theta = rff_init(spec, rng);
    Mat z = rff_apply(theta, spec, x);
    double approx = dot(z.row(0), z.row(1)) / (double)q;
    CHECK(approx == doctest::Approx(kernel).epsilon(0.05));
  }
}

TEST_CASE("sincos and cosbias realize the same kernel") {
  const std::size_t d = 4, q = 20000;
  RngStream rng(43, 4);
  Mat x = random_points(2, d, rng, 0.4);
  RffMap sc{d, q, RffVariant::SinCos, 1.0};
  RffMap cb{d, q, RffVariant::CosBias, 1.0};
  ThetaParams t1 = rff_init(sc, rng);
  ThetaParams t2 = rff_init(cb, rng);
  Mat z1 = rff_apply(t1, sc, x);
  Mat z2 = rff_apply(t2, cb, x);
  double k1 = dot(z1.row(0), z1.row(1)) / (double)q;
  double k2 = dot(z2.row(0), z2.row(1)) / (double)q;
  CHECK(k1 == doctest::Approx(k2).epsilon(0.1));
}

TEST_CASE("sphere samples have unit norm") {
  RngStream rng(51, 5);
  Mat z = sphere_sample(7, 50, rng);
  for (std::size_t i = 0; i < 50; ++i)
    CHECK(dot(z.row(i), z.row(i)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("onehot samples are standard basis rows covering all coordinates") {
  RngStream rng(53, 6);
  Mat z = onehot_sample(5, 400, rng);
  std::vector<int> seen(5, 0);
  for (std::size_t i = 0; i < 400; ++i) {
    int ones = 0;
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK((z(i, j) == 0.0 || z(i, j) == 1.0));
      if (z(i, j) == 1.0) {
        ++ones;
        ++seen[j];
      }
    }
    CHECK(ones == 1);
  }
  for (int count : seen) CHECK(count > 0);
}

TEST_CASE("relu network restricted to positive inputs collapses rank") {
  // With all-positive weights and all-positive inputs the ReLU is the
  // identity, so one hidden layer of width > d has rank at most d.
  const std::size_t d = 3, width = 8;
  RandomNn spec{{d, width}, Activation{ActKind::Relu}, false};
  RngStream rng(61, 7);
  ThetaParams theta = nn_init(spec, rng);
  for (auto& w : theta.weights)
    for (std::size_t i = 0; i < w.rows(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) = std::fabs(w(i, j));
  Mat x(20, d);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.uniform(0.1, 2.0);
  Mat z = nn_apply(theta, spec, x);
  auto s = singular_values(z);
  for (std::size_t k = d; k < s.size(); ++k) CHECK(s[k] < 1e-10 * s[0]);
}

TEST_CASE("dispatch layer: dims, theta shapes, identity on direct variants") {
  FeatureMapSpec gauss{GaussianDirect{30}};
  CHECK(gauss.input_dim() == 30);
  CHECK(gauss.output_dim() == 30);
  RngStream rng(71, 8);
  ThetaParams th = sample_theta(gauss, rng);
  CHECK(th.weights.empty());
  Mat z = sample_inputs(gauss, 5, rng);
  Mat z2 = apply_map(gauss, th, z);
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) CHECK(z(i, j) == z2(i, j));

  FeatureMapSpec nn{RandomNn{{10, 32, 32}, Activation{ActKind::Tanh}, false}};
  CHECK(nn.input_dim() == 10);
  CHECK(nn.output_dim() == 32);
  FeatureMapSpec poly{PolynomialMap{3, 4, 1.0}};
  CHECK(poly.output_dim() == 35);
}

TEST_CASE("custom input sampler is honored") {
  FeatureMapSpec spec{IdentityMap{2}};
  spec.input_sampler = [](std::size_t n, RngStream&) {
    Mat m(n, 2);
    for (std::size_t i = 0; i < n; ++i) m(i, 0) = 1.0;
    return m;
  };
  RngStream rng(81, 9);
  Mat x = sample_inputs(spec, 3, rng);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(x(i, 0) == 1.0);
    CHECK(x(i, 1) == 0.0);
  }
}
