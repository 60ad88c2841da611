#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rlab/estimator.hpp"
#include "rlab/featmaps.hpp"
#include "rlab/optimizer.hpp"
#include "rlab/rankcheck.hpp"

namespace rlab {

/// Malformed or out-of-schema configuration. Unknown fields are rejected
/// (fail-closed) to keep configs reproducible.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

json spec_to_json(const FeatureMapSpec& spec);
FeatureMapSpec spec_from_json(const json& j);

json estimator_config_to_json(const EstimatorConfig& config);
EstimatorConfig estimator_config_from_json(const json& j);

json mlp_spec_to_json(const MlpSpec& spec);
MlpSpec mlp_spec_from_json(const json& j);

json optim_config_to_json(const OptimConfig& config);
OptimConfig optim_config_from_json(const json& j);

json theta_to_json(const ThetaParams& theta);
ThetaParams theta_from_json(const json& j);

json rank_report_to_json(const RankReport& report);

std::string verdict_name(FrkVerdict verdict);

/// Shortest round-trip decimal representation; infinities serialize as "inf".
std::string format_double(double v);

/// CSV columns: abscissa,value,mean,stderr,count,flag ('.' decimal, LF).
void write_curve_csv(const NoiseCurve& curve, std::ostream& out);

/// JSON sidecar carrying the full config and seed of a curve.
json curve_sidecar(const NoiseCurve& curve);

/// Ratio of two curves on matching abscissas with first-order stderr
/// propagation; inf/inf and zero-denominator rows carry the flag "undef".
/// Columns: abscissa,value,ratio,stderr,flag.
void emit_relative_curve(const NoiseCurve& numerator, const NoiseCurve& denominator,
                         std::ostream& out);

/// FNV-1a 64-bit, hex string; used for config hashes and output checksums.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace rlab
