// ridgeless-lab: configuration-driven experiment runner.
//
// Subcommands: estimate, bounds, rankcheck, optimize, reproduce,
// validate-config. Exit codes: 0 success, 2 unknown recipe id, 3 malformed
// config, 4 numerical failure.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rlab/closedform.hpp"
#include "rlab/estimator.hpp"
#include "rlab/numkit.hpp"
#include "rlab/optimizer.hpp"
#include "rlab/parallel.hpp"
#include "rlab/rankcheck.hpp"
#include "rlab/serialize.hpp"

namespace fs = std::filesystem;
using namespace rlab;

namespace {

constexpr int kExitUnknownId = 2;
constexpr int kExitBadConfig = 3;
constexpr int kExitNumerical = 4;

std::size_t env_threads() {
  const char* v = std::getenv("RIDGELESS_LAB_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  unsigned long n = std::strtoul(v, &end, 10);
  if (end && *end == '\0') return static_cast<std::size_t>(n);
  return 0;
}

struct CommonOpts {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<double> lambda;
  std::size_t threads = env_threads();
  std::string out = ".";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--seed", opts.seed, "Base seed override");
  cmd->add_option("--reps", opts.reps, "Repetition count override");
  cmd->add_option("--lambda", opts.lambda, "Regularization override");
  cmd->add_option("--threads", opts.threads,
                  "Worker threads (0 = auto; results identical for all N)");
  cmd->add_option("--out", opts.out, "Output directory");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

void require_version(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("version") || j.at("version") != 1)
    throw ConfigError(what + ": expected \"version\": 1");
}

void write_file(const fs::path& path, const std::string& bytes) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << bytes;
}

// Inclusive integer range: "15" or "1..60".
std::pair<std::size_t, std::size_t> parse_range(const std::string& s) {
  auto pos = s.find("..");
  try {
    if (pos == std::string::npos) {
      std::size_t v = std::stoul(s);
      return {v, v};
    }
    std::size_t lo = std::stoul(s.substr(0, pos));
    std::size_t hi = std::stoul(s.substr(pos + 2));
    if (lo < 1 || hi < lo) throw ConfigError("bad range: " + s);
    return {lo, hi};
  } catch (const std::exception&) {
    throw ConfigError("bad range: " + s);
  }
}

// ---------------------------------------------------------------------------
// estimate configs
// ---------------------------------------------------------------------------

struct EstimateJob {
  FeatureMapSpec spec;
  EstimatorConfig config;
  char axis = 'n';
  std::size_t fixed_n = 0;  // axis 'p' only
};

json estimate_job_to_json(const EstimateJob& job) {
  json j = {{"version", 1},
            {"kind", "estimate"},
            {"spec", spec_to_json(job.spec)},
            {"estimator", estimator_config_to_json(job.config)},
            {"axis", std::string(1, job.axis)}};
  if (job.axis == 'p') j["fixed_n"] = job.fixed_n;
  return j;
}

EstimateJob estimate_job_from_json(const json& j) {
  require_version(j, "estimate config");
  for (const auto& [key, value] : j.items())
    if (key != "version" && key != "kind" && key != "spec" && key != "estimator" &&
        key != "axis" && key != "fixed_n")
      throw ConfigError("estimate config: unknown field \"" + key + "\"");
  if (!j.contains("spec") || !j.contains("estimator"))
    throw ConfigError("estimate config: needs \"spec\" and \"estimator\"");
  EstimateJob job;
  job.spec = spec_from_json(j.at("spec"));
  job.config = estimator_config_from_json(j.at("estimator"));
  std::string axis = j.value("axis", "n");
  if (axis != "n" && axis != "p")
    throw ConfigError("estimate config: axis must be \"n\" or \"p\"");
  job.axis = axis[0];
  if (job.axis == 'p') {
    if (!j.contains("fixed_n"))
      throw ConfigError("estimate config: axis \"p\" needs \"fixed_n\"");
    job.fixed_n = j.at("fixed_n").get<std::size_t>();
  } else if (j.contains("fixed_n")) {
    throw ConfigError("estimate config: \"fixed_n\" only applies to axis \"p\"");
  }
  job.config.validate();
  return job;
}

NoiseCurve run_estimate(const EstimateJob& job) {
  return job.axis == 'n' ? estimate_curve_vs_n(job.spec, job.config)
                         : estimate_curve_vs_p(job.spec, job.config, job.fixed_n);
}

// ---------------------------------------------------------------------------
// rankcheck configs
// ---------------------------------------------------------------------------

struct RankJob {
  FeatureMapSpec spec;
  std::size_t n = 0, samples = 0;
  double threshold = 1e-3;
  std::uint64_t seed = 0;
};

json rank_job_to_json(const RankJob& job) {
  return {{"version", 1},          {"kind", "rankcheck"},
          {"spec", spec_to_json(job.spec)}, {"n", job.n},
          {"samples", job.samples}, {"threshold", job.threshold},
          {"seed", job.seed}};
}

RankJob rank_job_from_json(const json& j) {
  require_version(j, "rankcheck config");
  for (const auto& [key, value] : j.items())
    if (key != "version" && key != "kind" && key != "spec" && key != "n" &&
        key != "samples" && key != "threshold" && key != "seed")
      throw ConfigError("rankcheck config: unknown field \"" + key + "\"");
  RankJob job;
  try {
    job.spec = spec_from_json(j.at("spec"));
    job.n = j.at("n").get<std::size_t>();
    job.samples = j.at("samples").get<std::size_t>();
    job.threshold = j.value("threshold", 1e-3);
    job.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("rankcheck config: ") + e.what());
  }
  if (job.n < 1 || job.samples < 1 || job.threshold <= 0.0)
    throw ConfigError("rankcheck config: n, samples >= 1 and threshold > 0");
  return job;
}

// ---------------------------------------------------------------------------
// optimize configs
// ---------------------------------------------------------------------------

struct OptimizeJob {
  MlpSpec mlp;
  OptimConfig config;
};

json optimize_job_to_json(const OptimizeJob& job) {
  return {{"version", 1},
          {"kind", "optimize"},
          {"mlp", mlp_spec_to_json(job.mlp)},
          {"optim", optim_config_to_json(job.config)}};
}

OptimizeJob optimize_job_from_json(const json& j) {
  require_version(j, "optimize config");
  for (const auto& [key, value] : j.items())
    if (key != "version" && key != "kind" && key != "mlp" && key != "optim")
      throw ConfigError("optimize config: unknown field \"" + key + "\"");
  if (!j.contains("mlp") || !j.contains("optim"))
    throw ConfigError("optimize config: needs \"mlp\" and \"optim\"");
  OptimizeJob job{mlp_spec_from_json(j.at("mlp")),
                  optim_config_from_json(j.at("optim"))};
  job.config.validate();
  return job;
}

// ---------------------------------------------------------------------------
// validate-config dispatch
// ---------------------------------------------------------------------------

std::string validate_any(const json& j) {
  require_version(j, "config");
  if (!j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError("config: missing string field \"kind\"");
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "estimate")
    estimate_job_from_json(j);
  else if (kind == "rankcheck")
    rank_job_from_json(j);
  else if (kind == "optimize")
    optimize_job_from_json(j);
  else
    throw ConfigError("config: unknown kind \"" + kind + "\"");
  return kind;
}

// ---------------------------------------------------------------------------
// fixed-theta curve (trained feature maps)
// ---------------------------------------------------------------------------

// Noise curve for one frozen parameter vector: the second moment depends only
// on theta, so it is estimated once; repetitions vary X only (prefix trick).
NoiseCurve fixed_theta_curve(const ThetaParams& theta, const MlpSpec& mlp,
                             const EstimatorConfig& config) {
  config.validate();
  std::vector<std::size_t> ns = config.abscissas;
  if (ns.empty())
    for (std::size_t n = 1; n <= config.n_max; ++n) ns.push_back(n);

  RngStream sigma_rng(config.base_seed, 0);
  Mat x_mc = gaussian_sample(config.test_points, mlp.input_dim(), sigma_rng);
  Mat z_mc = mlp_apply(theta, mlp, x_mc);
  Mat sigma = gram(z_mc);
  double inv_l = 1.0 / static_cast<double>(config.test_points);
  for (std::size_t i = 0; i < sigma.rows(); ++i)
    for (std::size_t j = 0; j < sigma.cols(); ++j) sigma(i, j) *= inv_l;

  const std::size_t m = config.repetitions;
  std::vector<std::vector<double>> samples(ns.size(),
                                           std::vector<double>(m, 0.0));
  parallel_for(m, config.threads, [&](std::size_t rep) {
    RngStream rng(config.base_seed, rep + 1);
    Mat x = gaussian_sample(config.n_max, mlp.input_dim(), rng);
    Mat z_full = mlp_apply(theta, mlp, x);
    for (std::size_t k = 0; k < ns.size(); ++k) {
      Mat z = z_full.top_rows(ns[k]);
      samples[k][rep] = pinv_trace_regularized(z, sigma, config.lambda);
    }
  });

  NoiseCurve curve;
  curve.abscissa = 'n';
  curve.config = config;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    double mean = 0.0;
    for (double s : samples[k]) mean += s;
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (double s : samples[k]) var += (s - mean) * (s - mean);
    var /= static_cast<double>(m - 1);
    double se = std::sqrt(var / static_cast<double>(m));
    curve.points.push_back({ns[k], config.noise_variance * mean,
                            config.noise_variance * se, m, false});
  }
  return curve;
}

// ---------------------------------------------------------------------------
// recipes
// ---------------------------------------------------------------------------

struct RecipeContext {
  std::string id;
  std::string scale;  // "paper" or "desk"
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  fs::path out;
  bool desk() const { return scale == "desk"; }

  json manifest_outputs = json::object();
  json manifest_configs = json::object();

  void emit_curve(const std::string& name, const NoiseCurve& curve,
                  const json& config) {
    std::ostringstream csv;
    write_curve_csv(curve, csv);
    write_file(out / (name + ".csv"), csv.str());
    write_file(out / (name + ".config.json"), config.dump(2) + "\n");
    manifest_outputs[name + ".csv"] = fnv1a_hex(csv.str());
    manifest_configs[name] = config;
  }

  void emit_relative(const std::string& name, const NoiseCurve& num,
                     const NoiseCurve& den) {
    std::ostringstream csv;
    emit_relative_curve(num, den, csv);
    write_file(out / (name + ".csv"), csv.str());
    manifest_outputs[name + ".csv"] = fnv1a_hex(csv.str());
  }

  void emit_raw(const std::string& filename, const std::string& bytes) {
    write_file(out / filename, bytes);
    manifest_outputs[filename] = fnv1a_hex(bytes);
  }
};

EstimatorConfig recipe_estimator(const RecipeContext& ctx, std::size_t paper_m,
                                 std::uint64_t seed_offset) {
  EstimatorConfig c;
  c.repetitions = ctx.desk() ? 50 : paper_m;
  c.test_points = ctx.desk() ? 2000 : 10000;
  c.n_max = ctx.desk() ? 60 : 256;
  c.base_seed = ctx.seed + seed_offset;
  c.threads = ctx.threads;
  return c;
}

RandomNn recipe_nn(const RecipeContext& ctx, const Activation& act, std::size_t p) {
  std::size_t width = ctx.desk() ? 32 : 256;
  return RandomNn{{10, width, width, p}, act, false};
}

std::vector<Activation> recipe_activations(const RecipeContext& ctx) {
  if (ctx.desk())
    return {Activation{ActKind::Tanh}, Activation{ActKind::Relu}};
  return {Activation{ActKind::Sigmoid}, Activation{ActKind::Tanh},
          Activation{ActKind::Softplus}, Activation{ActKind::Gelu},
          Activation{ActKind::Relu}};
}

// Random-NN curves vs n (figC1 plain, figC2 whitened).
void recipe_nn_vs_n(RecipeContext& ctx, bool whitened) {
  std::uint64_t offset = 0;
  for (const Activation& act : recipe_activations(ctx)) {
    std::size_t m = act.analytic() ? 10000 : 100000;
    EstimateJob job;
    job.spec = FeatureMapSpec{recipe_nn(ctx, act, 30)};
    job.config = recipe_estimator(ctx, m, offset++);
    job.config.whitened = whitened;
    ctx.emit_curve(ctx.id + "_" + act.name(), run_estimate(job),
                   estimate_job_to_json(job));
  }
  EstimateJob sphere;
  sphere.spec = FeatureMapSpec{SphereDirect{30}};
  sphere.config = recipe_estimator(ctx, 100000, offset++);
  sphere.config.whitened = whitened;
  ctx.emit_curve(ctx.id + "_sphere", run_estimate(sphere),
                 estimate_job_to_json(sphere));
}

void recipe_nn_vs_p(RecipeContext& ctx) {
  std::uint64_t offset = 0;
  for (const Activation& act : recipe_activations(ctx)) {
    std::size_t m = act.analytic() ? 10000 : 100000;
    EstimateJob job;
    job.axis = 'p';
    job.fixed_n = 30;
    job.config = recipe_estimator(ctx, m, offset++);
    job.spec = FeatureMapSpec{recipe_nn(ctx, act, job.config.n_max)};
    ctx.emit_curve(ctx.id + "_" + act.name(), run_estimate(job),
                   estimate_job_to_json(job));
  }
}

void recipe_ntk_vs_n(RecipeContext& ctx) {
  std::uint64_t offset = 0;
  std::vector<Activation> acts =
      ctx.desk() ? std::vector<Activation>{Activation{ActKind::Tanh}}
                 : std::vector<Activation>{
                       Activation{ActKind::Sigmoid}, Activation{ActKind::Tanh},
                       Activation{ActKind::Softplus}, Activation{ActKind::Gelu},
                       Activation{ActKind::Relu}};
  for (const Activation& act : acts) {
    EstimateJob job;
    job.spec = FeatureMapSpec{NtkMap{4, 6, act}};
    job.config = recipe_estimator(ctx, 100000, offset++);
    ctx.emit_curve(ctx.id + "_ntk_" + act.name(), run_estimate(job),
                   estimate_job_to_json(job));
  }
  EstimateJob sphere;
  sphere.spec = FeatureMapSpec{SphereDirect{30}};
  sphere.config = recipe_estimator(ctx, 100000, offset++);
  ctx.emit_curve(ctx.id + "_sphere", run_estimate(sphere),
                 estimate_job_to_json(sphere));
}

// RFF curves; narrow = true uses N(0, I) frequencies (approximating a narrow
// kernel), false uses N(0, (1/p) I). relative = emit ratios to the sphere.
void recipe_rff(RecipeContext& ctx, bool narrow, bool relative) {
  double scale = narrow ? 1.0 : 1.0 / std::sqrt(30.0);
  std::size_t paper_m = narrow ? 10000 : 100000;
  EstimateJob sincos;
  sincos.spec = FeatureMapSpec{RffMap{10, 15, RffVariant::SinCos, scale}};
  sincos.config = recipe_estimator(ctx, paper_m, 0);
  NoiseCurve sc = run_estimate(sincos);
  EstimateJob cosb;
  cosb.spec = FeatureMapSpec{RffMap{10, 30, RffVariant::CosBias, scale}};
  cosb.config = recipe_estimator(ctx, paper_m, 1);
  NoiseCurve cb = run_estimate(cosb);
  ctx.emit_curve(ctx.id + "_sincos", sc, estimate_job_to_json(sincos));
  ctx.emit_curve(ctx.id + "_cosbias", cb, estimate_job_to_json(cosb));
  if (!relative) return;
  EstimateJob sphere;
  sphere.spec = FeatureMapSpec{SphereDirect{30}};
  sphere.config = recipe_estimator(ctx, 100000, 2);
  NoiseCurve sp = run_estimate(sphere);
  ctx.emit_curve(ctx.id + "_sphere", sp, estimate_job_to_json(sphere));
  ctx.emit_relative(ctx.id + "_sincos_rel", sc, sp);
  ctx.emit_relative(ctx.id + "_cosbias_rel", cb, sp);
}

void recipe_poly(RecipeContext& ctx) {
  EstimateJob job;
  job.spec = FeatureMapSpec{PolynomialMap{3, 4, 1.0}};
  job.config = recipe_estimator(ctx, 10000, 0);
  ctx.emit_curve(ctx.id + "_poly", run_estimate(job), estimate_job_to_json(job));
}

void recipe_counterexample(RecipeContext& ctx) {
  std::ostringstream csv;
  csv << "n,counterexample,lower_bound\n";
  std::size_t n_max = ctx.desk() ? 60 : 256;
  for (std::size_t n = 1; n <= n_max; ++n)
    csv << n << ',' << format_double(counterexample_expectation(n, 30)) << ','
        << format_double(lower_bound(n, 30, 1.0).value) << '\n';
  ctx.emit_raw(ctx.id + ".csv", csv.str());
}

void recipe_fig1(RecipeContext& ctx) {
  // empirical sphere curve: the denominator for every relative curve
  EstimateJob sphere;
  sphere.spec = FeatureMapSpec{SphereDirect{30}};
  sphere.config = recipe_estimator(ctx, 100000, 0);
  NoiseCurve sp = run_estimate(sphere);
  ctx.emit_curve("fig1_sphere", sp, estimate_job_to_json(sphere));

  EstimateJob gauss;
  gauss.spec = FeatureMapSpec{GaussianDirect{30}};
  gauss.config = recipe_estimator(ctx, 100000, 1);
  NoiseCurve ga = run_estimate(gauss);
  ctx.emit_curve("fig1_gaussian", ga, estimate_job_to_json(gauss));
  ctx.emit_relative("fig1_gaussian_rel", ga, sp);

  // analytic lower bound as a stderr-free curve
  NoiseCurve bound;
  bound.abscissa = 'n';
  bound.config = sp.config;
  for (const CurvePoint& pt : sp.points)
    bound.points.push_back(
        {pt.value, lower_bound(pt.value, 30, 1.0).value, 0.0, 1, false});
  ctx.emit_raw("fig1_bound.csv", [&] {
    std::ostringstream csv;
    write_curve_csv(bound, csv);
    return csv.str();
  }());
  ctx.emit_relative("fig1_bound_rel", bound, sp);

  // feature maps trained to minimize the noise error at n = 15 and n = 60
  for (std::size_t target_n : {std::size_t{15}, std::size_t{60}}) {
    OptimizeJob job;
    std::size_t width = ctx.desk() ? 32 : 256;
    job.mlp = MlpSpec{{30, width, width, 30}, Activation{ActKind::Tanh}};
    job.config.target_n = target_n;
    job.config.seed = ctx.seed + 100 + target_n;
    job.config.threads = ctx.threads;
    if (ctx.desk()) {
      job.config.iterations = 60;
      job.config.batch = 16;
      job.config.sigma_mc = 100;
    }
    TrainResult trained = train(job.mlp, job.config);
    std::string name = "fig1_opt" + std::to_string(target_n);
    write_file(ctx.out / (name + ".config.json"),
               optimize_job_to_json(job).dump(2) + "\n");
    ctx.manifest_configs[name] = optimize_job_to_json(job);
    std::ostringstream traj;
    traj << "step,loss,lr\n";
    for (std::size_t t = 0; t < trained.losses.size(); ++t)
      traj << t << ',' << format_double(trained.losses[t]) << ','
           << format_double(trained.lrs[t]) << '\n';
    ctx.emit_raw(name + "_trajectory.csv", traj.str());

    EstimatorConfig ec = recipe_estimator(ctx, 10000, 200 + target_n);
    NoiseCurve curve = fixed_theta_curve(trained.theta, job.mlp, ec);
    std::ostringstream csv;
    write_curve_csv(curve, csv);
    ctx.emit_raw(name + ".csv", csv.str());
    ctx.emit_relative(name + "_rel", curve, sp);
  }
}

void run_recipe(RecipeContext& ctx) {
  auto start = std::chrono::steady_clock::now();
  if (ctx.id == "fig1")
    recipe_fig1(ctx);
  else if (ctx.id == "figC1")
    recipe_nn_vs_n(ctx, false);
  else if (ctx.id == "figC2")
    recipe_nn_vs_n(ctx, true);
  else if (ctx.id == "figC3")
    recipe_nn_vs_p(ctx);
  else if (ctx.id == "figC4")
    recipe_ntk_vs_n(ctx);
  else if (ctx.id == "figC5")
    recipe_rff(ctx, false, false);
  else if (ctx.id == "figC6")
    recipe_rff(ctx, true, true);
  else if (ctx.id == "figC7")
    recipe_poly(ctx);
  else if (ctx.id == "figD1")
    recipe_counterexample(ctx);
  else
    throw std::out_of_range("unknown recipe id: " + ctx.id);

  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  json manifest = {{"version", 1},
                   {"recipe", ctx.id},
                   {"scale", ctx.scale},
                   {"seed", ctx.seed},
                   {"config_hash", fnv1a_hex(ctx.manifest_configs.dump())},
                   {"wall_time_s", wall},
                   {"outputs", ctx.manifest_outputs}};
  write_file(ctx.out / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

void apply_overrides(EstimatorConfig& c, const CommonOpts& opts) {
  if (opts.seed) c.base_seed = *opts.seed;
  if (opts.reps) c.repetitions = *opts.reps;
  if (opts.lambda) c.lambda = *opts.lambda;
  c.threads = opts.threads;
}

int cmd_estimate(const std::string& config_path, const CommonOpts& opts) {
  EstimateJob job = estimate_job_from_json(read_json_file(config_path));
  apply_overrides(job.config, opts);
  job.config.validate();
  NoiseCurve curve = run_estimate(job);
  std::ostringstream csv;
  write_curve_csv(curve, csv);
  write_file(fs::path(opts.out) / "curve.csv", csv.str());
  json sidecar = curve_sidecar(curve);
  sidecar["spec"] = spec_to_json(job.spec);
  write_file(fs::path(opts.out) / "curve.json", sidecar.dump(2) + "\n");
  std::cout << "wrote " << (fs::path(opts.out) / "curve.csv").string() << "\n";
  return 0;
}

int cmd_bounds(const std::string& n_range, const std::string& p_range,
               double sigma2, const CommonOpts& opts, bool to_stdout) {
  auto [n_lo, n_hi] = parse_range(n_range);
  auto [p_lo, p_hi] = parse_range(p_range);
  std::ostringstream csv;
  csv << "n,p,lower_bound,sphere_exact,gaussian_exact,counterexample\n";
  for (std::size_t n = n_lo; n <= n_hi; ++n)
    for (std::size_t p = p_lo; p <= p_hi; ++p) {
      csv << n << ',' << p << ','
          << format_double(sigma2 * lower_bound(n, p, 1.0).value) << ',';
      try {
        csv << format_double(sigma2 * sphere_exact(n, p).value);
      } catch (const DomainError&) {
        csv << "nan";  // no closed form for 2 <= p < n
      }
      csv << ',' << format_double(sigma2 * gaussian_exact(n, p).value) << ','
          << format_double(sigma2 * counterexample_expectation(n, p)) << '\n';
    }
  if (to_stdout) {
    std::cout << csv.str();
  } else {
    write_file(fs::path(opts.out) / "bounds.csv", csv.str());
    std::cout << "wrote " << (fs::path(opts.out) / "bounds.csv").string() << "\n";
  }
  return 0;
}

int cmd_rankcheck(const std::string& config_path, const CommonOpts& opts) {
  RankJob job = rank_job_from_json(read_json_file(config_path));
  if (opts.seed) job.seed = *opts.seed;
  if (opts.reps) job.samples = *opts.reps;
  RngStream rng(job.seed, 0);
  RankReport report = frk_check(job.spec, job.n, job.samples, job.threshold, rng);
  json out = rank_report_to_json(report);
  std::cout << out.dump(2) << "\n";
  write_file(fs::path(opts.out) / "rankcheck.json", out.dump(2) + "\n");
  return 0;
}

int cmd_optimize(const std::string& config_path, const CommonOpts& opts) {
  OptimizeJob job = optimize_job_from_json(read_json_file(config_path));
  if (opts.seed) job.config.seed = *opts.seed;
  if (opts.reps) job.config.iterations = *opts.reps;
  if (opts.lambda) job.config.lambda = *opts.lambda;
  job.config.threads = opts.threads;
  job.config.validate();
  TrainResult result = train(job.mlp, job.config);
  write_file(fs::path(opts.out) / "theta.json",
             theta_to_json(result.theta).dump() + "\n");
  std::ostringstream traj;
  traj << "step,loss,lr\n";
  for (std::size_t t = 0; t < result.losses.size(); ++t)
    traj << t << ',' << format_double(result.losses[t]) << ','
         << format_double(result.lrs[t]) << '\n';
  write_file(fs::path(opts.out) / "trajectory.csv", traj.str());
  if (result.diverged) {
    std::cerr << "optimize: training diverged\n";
    return kExitNumerical;
  }
  std::cout << "final loss " << format_double(result.losses.back()) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ridgeless-lab: noise-error experiments for minimum-norm "
               "linear regression"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string config_path, recipe_id, scale = "desk";
  std::string n_range = "1..60", p_range = "30";
  double sigma2 = 1.0;
  bool bounds_stdout = false;

  auto* est = app.add_subcommand("estimate", "Run a noise-curve estimation");
  est->add_option("config", config_path, "JSON config file")->required();
  add_common(est, opts);

  auto* bnd = app.add_subcommand("bounds", "Tabulate closed-form values");
  bnd->add_option("--n", n_range, "n range, e.g. 1..60");
  bnd->add_option("--p", p_range, "p range, e.g. 30");
  bnd->add_option("--sigma2", sigma2, "Noise variance");
  bnd->add_flag("--stdout", bounds_stdout, "Print CSV to stdout");
  add_common(bnd, opts);

  auto* rnk = app.add_subcommand("rankcheck", "Monte-Carlo full-rank check");
  rnk->add_option("config", config_path, "JSON config file")->required();
  add_common(rnk, opts);

  auto* opt = app.add_subcommand("optimize", "Train a feature map");
  opt->add_option("config", config_path, "JSON config file")->required();
  add_common(opt, opts);

  auto* rep = app.add_subcommand("reproduce", "Reproduce a figure recipe");
  rep->add_option("id", recipe_id, "Recipe id (fig1, figC1..figC7, figD1)")
      ->required();
  rep->add_option("--scale", scale, "paper or desk")
      ->check(CLI::IsMember({"paper", "desk"}));
  add_common(rep, opts);

  auto* val = app.add_subcommand("validate-config", "Check a config file");
  val->add_option("config", config_path, "JSON config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitBadConfig;
  }

  try {
    if (est->parsed()) return cmd_estimate(config_path, opts);
    if (bnd->parsed()) return cmd_bounds(n_range, p_range, sigma2, opts,
                                         bounds_stdout);
    if (rnk->parsed()) return cmd_rankcheck(config_path, opts);
    if (opt->parsed()) return cmd_optimize(config_path, opts);
    if (val->parsed()) {
      std::string kind = validate_any(read_json_file(config_path));
      std::cout << "ok: " << kind << "\n";
      return 0;
    }
    if (rep->parsed()) {
      RecipeContext ctx;
      ctx.id = recipe_id;
      ctx.scale = scale;
      ctx.seed = opts.seed.value_or(0);
      ctx.threads = opts.threads;
      ctx.out = opts.out;
      run_recipe(ctx);
      std::cout << "wrote " << (ctx.out / "manifest.json").string() << "\n";
      return 0;
    }
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUnknownId;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
