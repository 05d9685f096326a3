#pragma once

#include "hedging.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rbsde {

using Json = nlohmann::ordered_json;

// Config schema (one JSON document per experiment); README documents the
// full layout. All numeric fields are in base units: years, absolute
// prices.

struct PayoffConfig {
    std::string type = "call"; // call | put | digital | forward
    double strike = 0.0;
    double scale = 1.0;
    double shift = 0.0;
};

struct GeneratorConfig {
    std::string type = "zero"; // zero | linear | sin
    double alpha = 0.0;        // linear: phi + alpha y + z . gamma
    std::vector<double> gamma;
    double phi = 0.0;
    double a = 0.0, b = 0.0;   // sin: a sin(y) + b sum(z)
};

struct BoundFieldConfig {
    std::string form = "constant"; // constant | affine
    std::vector<double> value;     // constant
    std::vector<double> intercept, slope; // affine in the state
    double bound = 0.0;            // declared sup bound for affine forms
};

struct ExperimentConfig {
    std::string experiment; // price | robust-solve | validate | converge | compare
    std::string label = "run";
    double horizon = 1.0;
    std::size_t steps = 50;
    std::size_t paths = 100000;
    std::size_t dim = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned basis_degree = 3;
    std::string method = "lsmc"; // lsmc | picard (robust-solve only)

    std::vector<double> x0, mu;
    std::vector<std::vector<double>> sigma;
    PayoffConfig payoff;
    BoundFieldConfig lower, upper;

    GeneratorConfig generator;           // robust-solve / compare
    PayoffConfig payoff_b;               // compare
    GeneratorConfig generator_b;
    std::vector<std::size_t> steps_list; // converge

    std::string output_dir = "out";
};

/// Parses and validates; every problem found is reported in one error
/// message (fail-fast, all at once).
ExperimentConfig parse_experiment_config(const std::string& json_text);

/// Canonical serialization; parse(emit(c)) reproduces c exactly.
std::string emit_experiment_config(const ExperimentConfig& config);

struct RunArtifact {
    std::string output_dir;
    std::string csv_path;
    std::string diagnostics_path;
    std::string config_echo_path;
    std::string summary_json;
};

/// Dispatches the experiment, writes results.csv / diagnostics.json /
/// config_echo.json atomically into the output directory (nothing is
/// written when validation fails), and returns the paths plus a summary.
RunArtifact run_experiment(const ExperimentConfig& config,
                           const std::optional<std::string>& out_override,
                           const std::optional<std::uint64_t>& seed_override);

/// 17-significant-digit decimal form used for every CSV number.
std::string format_csv_number(double v);

// Builders shared with the validation suite and tests.
PayoffFn build_payoff(const PayoffConfig& payoff);
GeneratorSpec build_generator(const GeneratorConfig& generator, std::size_t dim);
VectorField build_bound_field(const BoundFieldConfig& field, std::size_t dim,
                              const std::string& name);
MarketSpec build_market(const ExperimentConfig& config);

} // namespace rbsde
