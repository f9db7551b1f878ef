#pragma once

// Run configuration: flat `key = value` text with [sections].
//
//   mode = filter            # simulate | filter | validate
//   seed = 7
//   [model]        alpha, mu_w, sigma_w, c, case (truncated|full|partial),
//                  theta (Langevin) or a + h (general system)
//   [observation]  h (rows separated by ';'), kappa_v (scalar or matrix)
//   [prior]        alpha_w, beta_w, kappa_w (may be inf), mu_prior_mean, x0, kappa_x0
//   [smc]          particles, threshold, marginalize, threads, t0
//   [simulate]     t_end, steps, irregular, x0, explicit_marks
//   [io]           data, out
//
// Unknown keys are rejected. A [result] section, written into output
// sidecars, is skipped on reading.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "levy/smc.hpp"

namespace levy::app {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Mode { Simulate, Filter, Validate };

struct ModelBlock {
    double alpha = 1.4;
    double mu_w = 1.0;
    double sigma_w = 1.0;
    double c = 10.0;
    ApproximationCase approx = ApproximationCase::PartialGaussianResidual;
    std::optional<double> theta = -1.0;  ///< Langevin system when set
    Matrix a;                            ///< general system otherwise
    Vector h;
};

struct ObservationBlock {
    Matrix h;        ///< M x (P + 1); defaults to observing the first state
    Matrix kappa_v;  ///< M x M in units of sigma_W^2; defaults to 0.01 I
};

struct PriorBlock {
    double alpha_w = 1.0;
    double beta_w = 1.0;
    double kappa_w = std::numeric_limits<double>::infinity();
    double mu_prior_mean = 0.0;
    Vector x0;  ///< defaults to zeros
    double kappa_x0 = 0.0;
};

struct SmcBlock {
    std::size_t particles = 1000;
    double threshold = 0.5;
    bool marginalize = true;
    unsigned threads = 1;
    std::optional<double> t0;
};

struct SimulateBlock {
    double t_end = 10.0;
    std::size_t steps = 1000;
    bool irregular = false;  ///< exponential gaps with mean t_end / steps
    Vector x0;               ///< defaults to zeros
    bool explicit_marks = false;
};

struct IoBlock {
    std::string data;
    std::string out;
};

struct RunConfig {
    Mode mode = Mode::Simulate;
    std::uint64_t seed = 1;
    ModelBlock model;
    ObservationBlock observation;
    PriorBlock prior;
    SmcBlock smc;
    SimulateBlock simulate;
    IoBlock io;

    int state_dim() const;
};

/// Parses and validates; throws ConfigError with the offending line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const RunConfig& config);

/// Fill defaults that depend on the state dimension and check every block
/// against its destination type. Throws ConfigError.
void finalize(RunConfig& config);

StableParams stable_params(const RunConfig& config);
SystemMatrices system_matrices(const RunConfig& config);
FilterConfig filter_config(const RunConfig& config);

std::string_view to_string(Mode mode);
std::string_view to_string(ApproximationCase approx);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

}  // namespace levy::app
