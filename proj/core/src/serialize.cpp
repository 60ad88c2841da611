#include "rlab/serialize.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>

namespace rlab {

namespace {

void check_fields(const json& j, const std::string& what,
                  const std::set<std::string>& required,
                  const std::set<std::string>& optional = {}) {
  if (!j.is_object()) throw ConfigError(what + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!required.contains(key) && !optional.contains(key))
      throw ConfigError(what + ": unknown field \"" + key + "\"");
  }
  for (const std::string& key : required)
    if (!j.contains(key)) throw ConfigError(what + ": missing field \"" + key + "\"");
}

std::size_t get_count(const json& j, const std::string& what, const char* key,
                      std::size_t min_value = 0) {
  const json& v = j.at(key);
  if (!v.is_number_unsigned())
    throw ConfigError(what + ": field \"" + std::string(key) +
                      "\" must be a nonnegative integer");
  std::size_t out = v.get<std::size_t>();
  if (out < min_value)
    throw ConfigError(what + ": field \"" + std::string(key) + "\" too small");
  return out;
}

double get_real(const json& j, const std::string& what, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number())
    throw ConfigError(what + ": field \"" + std::string(key) + "\" must be a number");
  return v.get<double>();
}

}  // namespace

json spec_to_json(const FeatureMapSpec& spec) {
  json j;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IdentityMap>) {
          j = {{"variant", "identity"}, {"d", v.d}};
        } else if constexpr (std::is_same_v<T, PolynomialMap>) {
          j = {{"variant", "polynomial"}, {"d", v.d}, {"m", v.m}, {"c", v.c}};
        } else if constexpr (std::is_same_v<T, RandomNn>) {
          j = {{"variant", "random_nn"},
               {"layer_sizes", v.layer_sizes},
               {"activation", v.act.name()},
               {"beta", v.act.beta},
               {"with_bias", v.with_bias}};
        } else if constexpr (std::is_same_v<T, NtkMap>) {
          j = {{"variant", "ntk"},
               {"d0", v.d0},
               {"d1", v.d1},
               {"activation", v.act.name()},
               {"beta", v.act.beta}};
        } else if constexpr (std::is_same_v<T, RffMap>) {
          j = {{"variant", "rff"},
               {"d", v.d},
               {"q", v.q},
               {"rff_variant", v.variant == RffVariant::SinCos ? "sincos" : "cosbias"},
               {"weight_scale", v.weight_scale}};
        } else if constexpr (std::is_same_v<T, SphereDirect>) {
          j = {{"variant", "sphere"}, {"p", v.p}};
        } else if constexpr (std::is_same_v<T, GaussianDirect>) {
          j = {{"variant", "gaussian"}, {"p", v.p}};
        } else {
          j = {{"variant", "onehot"}, {"p", v.p}};
        }
      },
      spec.variant);
  return j;
}

FeatureMapSpec spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("variant"))
    throw ConfigError("spec: missing \"variant\"");
  std::string variant = j.at("variant").get<std::string>();
  FeatureMapSpec spec;
  try {
    if (variant == "identity") {
      check_fields(j, "spec(identity)", {"variant", "d"});
      spec.variant = IdentityMap{get_count(j, "spec", "d", 1)};
    } else if (variant == "polynomial") {
      check_fields(j, "spec(polynomial)", {"variant", "d", "m", "c"});
      double c = get_real(j, "spec", "c");
      if (c <= 0.0) throw ConfigError("spec(polynomial): c must be > 0");
      spec.variant =
          PolynomialMap{get_count(j, "spec", "d", 1), get_count(j, "spec", "m", 1), c};
    } else if (variant == "random_nn") {
      check_fields(j, "spec(random_nn)",
                   {"variant", "layer_sizes", "activation", "with_bias"}, {"beta"});
      RandomNn nn;
      nn.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
      nn.act = Activation::parse(j.at("activation").get<std::string>(),
                                 j.value("beta", 1.0));
      nn.with_bias = j.at("with_bias").get<bool>();
      if (nn.layer_sizes.size() < 2)
        throw ConfigError("spec(random_nn): need at least two layer sizes");
      spec.variant = std::move(nn);
    } else if (variant == "ntk") {
      check_fields(j, "spec(ntk)", {"variant", "d0", "d1", "activation"}, {"beta"});
      spec.variant = NtkMap{get_count(j, "spec", "d0", 1), get_count(j, "spec", "d1", 1),
                            Activation::parse(j.at("activation").get<std::string>(),
                                              j.value("beta", 1.0))};
    } else if (variant == "rff") {
      check_fields(j, "spec(rff)",
                   {"variant", "d", "q", "rff_variant", "weight_scale"});
      std::string rv = j.at("rff_variant").get<std::string>();
      if (rv != "sincos" && rv != "cosbias")
        throw ConfigError("spec(rff): rff_variant must be sincos or cosbias");
      spec.variant = RffMap{get_count(j, "spec", "d", 1), get_count(j, "spec", "q", 1),
                            rv == "sincos" ? RffVariant::SinCos : RffVariant::CosBias,
                            get_real(j, "spec", "weight_scale")};
    } else if (variant == "sphere") {
      check_fields(j, "spec(sphere)", {"variant", "p"});
      spec.variant = SphereDirect{get_count(j, "spec", "p", 1)};
    } else if (variant == "gaussian") {
      check_fields(j, "spec(gaussian)", {"variant", "p"});
      spec.variant = GaussianDirect{get_count(j, "spec", "p", 1)};
    } else if (variant == "onehot") {
      check_fields(j, "spec(onehot)", {"variant", "p"});
      spec.variant = OneHotHistogram{get_count(j, "spec", "p", 2)};
    } else {
      throw ConfigError("spec: unknown variant \"" + variant + "\"");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spec: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("spec: ") + e.what());
  }
  return spec;
}

json estimator_config_to_json(const EstimatorConfig& config) {
  json j = {{"repetitions", config.repetitions},
            {"test_points", config.test_points},
            {"lambda", config.lambda},
            {"n_max", config.n_max},
            {"base_seed", config.base_seed},
            {"whitened", config.whitened},
            {"noise_variance", config.noise_variance},
            {"exact_sigma", config.exact_sigma}};
  if (!config.abscissas.empty()) j["abscissas"] = config.abscissas;
  return j;
}

EstimatorConfig estimator_config_from_json(const json& j) {
  check_fields(j, "estimator",
               {"repetitions", "test_points", "lambda", "n_max", "base_seed",
                "whitened", "noise_variance", "exact_sigma"},
               {"abscissas"});
  EstimatorConfig c;
  try {
    c.repetitions = get_count(j, "estimator", "repetitions", 2);
    c.test_points = get_count(j, "estimator", "test_points", 1);
    c.lambda = get_real(j, "estimator", "lambda");
    c.n_max = get_count(j, "estimator", "n_max", 1);
    c.base_seed = j.at("base_seed").get<std::uint64_t>();
    c.whitened = j.at("whitened").get<bool>();
    c.noise_variance = get_real(j, "estimator", "noise_variance");
    c.exact_sigma = j.at("exact_sigma").get<bool>();
    if (j.contains("abscissas"))
      c.abscissas = j.at("abscissas").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("estimator: ") + e.what());
  }
  if (c.lambda < 0.0) throw ConfigError("estimator: lambda must be >= 0");
  return c;
}

json mlp_spec_to_json(const MlpSpec& spec) {
  return {{"layer_sizes", spec.layer_sizes},
          {"activation", spec.act.name()},
          {"beta", spec.act.beta}};
}

MlpSpec mlp_spec_from_json(const json& j) {
  check_fields(j, "mlp", {"layer_sizes", "activation"}, {"beta"});
  MlpSpec spec;
  try {
    spec.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    spec.act =
        Activation::parse(j.at("activation").get<std::string>(), j.value("beta", 1.0));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mlp: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("mlp: ") + e.what());
  }
  if (spec.layer_sizes.size() < 2)
    throw ConfigError("mlp: need at least two layer sizes");
  return spec;
}

json optim_config_to_json(const OptimConfig& config) {
  return {{"iterations", config.iterations}, {"lr_start", config.lr_start},
          {"batch", config.batch},           {"sigma_mc", config.sigma_mc},
          {"lambda", config.lambda},         {"target_n", config.target_n},
          {"seed", config.seed}};
}

OptimConfig optim_config_from_json(const json& j) {
  check_fields(j, "optim",
               {"iterations", "lr_start", "batch", "sigma_mc", "lambda", "target_n",
                "seed"});
  OptimConfig c;
  try {
    c.iterations = get_count(j, "optim", "iterations", 1);
    c.lr_start = get_real(j, "optim", "lr_start");
    c.batch = get_count(j, "optim", "batch", 1);
    c.sigma_mc = get_count(j, "optim", "sigma_mc", 1);
    c.lambda = get_real(j, "optim", "lambda");
    c.target_n = get_count(j, "optim", "target_n", 1);
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("optim: ") + e.what());
  }
  return c;
}

json theta_to_json(const ThetaParams& theta) {
  json weights = json::array();
  for (const Mat& w : theta.weights) {
    json rows = json::array();
    for (std::size_t i = 0; i < w.rows(); ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < w.cols(); ++j) row.push_back(w(i, j));
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
  }
  return {{"weights", weights}, {"biases", theta.biases}};
}

ThetaParams theta_from_json(const json& j) {
  check_fields(j, "theta", {"weights", "biases"});
  ThetaParams theta;
  try {
    for (const json& w : j.at("weights")) {
      std::size_t rows = w.size();
      std::size_t cols = rows > 0 ? w.at(0).size() : 0;
      Mat m(rows, cols);
      for (std::size_t i = 0; i < rows; ++i) {
        if (w.at(i).size() != cols) throw ConfigError("theta: ragged weight matrix");
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = w.at(i).at(c).get<double>();
      }
      theta.weights.push_back(std::move(m));
    }
    theta.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("theta: ") + e.what());
  }
  return theta;
}

std::string verdict_name(FrkVerdict verdict) {
  switch (verdict) {
    case FrkVerdict::FrkSupported: return "FrkSupported";
    case FrkVerdict::FrkRefuted: return "FrkRefuted";
    case FrkVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

json rank_report_to_json(const RankReport& report) {
  return {{"n", report.n},
          {"p", report.p},
          {"samples", report.samples},
          {"threshold", report.threshold},
          {"max_icond", report.max_icond},
          {"min_icond", report.min_icond},
          {"fraction_above_threshold", report.fraction_above_threshold},
          {"verdict", verdict_name(report.verdict)},
          {"icond_histogram", report.icond_histogram}};
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_curve_csv(const NoiseCurve& curve, std::ostream& out) {
  out << "abscissa,value,mean,stderr,count,flag\n";
  for (const CurvePoint& pt : curve.points) {
    out << curve.abscissa << ',' << pt.value << ',' << format_double(pt.mean) << ','
        << format_double(pt.stderr_) << ',' << pt.count << ','
        << (pt.heavy_tail ? "heavytail" : "") << '\n';
  }
}

json curve_sidecar(const NoiseCurve& curve) {
  return {{"abscissa", std::string(1, curve.abscissa)},
          {"estimator", estimator_config_to_json(curve.config)},
          {"seed", curve.config.base_seed},
          {"stderr_note",
           "one theta and one second-moment sample per repetition are shared "
           "across all prefix abscissas; stderr measures repetition-level "
           "variance only"}};
}

void emit_relative_curve(const NoiseCurve& numerator, const NoiseCurve& denominator,
                         std::ostream& out) {
  if (numerator.points.size() != denominator.points.size())
    throw DimensionError("emit_relative_curve: abscissa mismatch");
  out << "abscissa,value,ratio,stderr,flag\n";
  for (std::size_t i = 0; i < numerator.points.size(); ++i) {
    const CurvePoint& a = numerator.points[i];
    const CurvePoint& b = denominator.points[i];
    if (a.value != b.value || numerator.abscissa != denominator.abscissa)
      throw DimensionError("emit_relative_curve: abscissa mismatch");
    bool undef = b.mean == 0.0 || (std::isinf(a.mean) && std::isinf(b.mean));
    double ratio = undef ? std::numeric_limits<double>::quiet_NaN() : a.mean / b.mean;
    double se = std::numeric_limits<double>::quiet_NaN();
    if (!undef) {
      double ra = a.mean != 0.0 ? a.stderr_ / a.mean : 0.0;
      double rb = b.stderr_ / b.mean;
      se = std::fabs(ratio) * std::sqrt(ra * ra + rb * rb);
      if (a.mean == 0.0) se = a.stderr_ / std::fabs(b.mean);
    }
    out << numerator.abscissa << ',' << a.value << ',' << format_double(ratio) << ','
        << format_double(se) << ',' << (undef ? "undef" : "") << '\n';
  }
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rlab
