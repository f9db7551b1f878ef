#pragma once

// Marginal (Rao-Blackwellised) bootstrap particle filter. Particles carry only
// the latent jump sets implicitly through their Kalman beliefs; the marks,
// sigma_W^2 and mu_W are integrated out analytically.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "levy/kalman.hpp"

namespace levy {

class FilterFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Particle {
    GaussianBelief belief;
    MarginalAccumulator acc;
    double log_weight = 0.0;
    std::uint64_t stream = 0;     ///< key of the particle's random stream
    std::size_t regularized = 0;  ///< updates that needed jitter on F
};

struct FilterConfig {
    std::size_t n_particles = 1000;
    ApproximationCase approx = ApproximationCase::PartialGaussianResidual;
    double resample_threshold = 0.5;  ///< resample when ESS < threshold * n
    StableParams params{1.5, 0.0, 1.0, 10.0};
    SystemMatrices sys = SystemMatrices::langevin(LangevinParams{-1.0});
    ObservationModel obs;
    IGPrior prior;
    double mu_prior_mean = 0.0;
    Vector x0;               ///< initial state mean; empty means zero
    double kappa_x0 = 0.0;   ///< initial scaled state variance
    /// Integrate sigma_W^2 out with the IG prior. When false, sigma_W and (in
    /// case 2) mu_W are taken from `params`.
    bool marginalize = true;
    std::optional<double> t0;  ///< start time; defaults to the first observation time
    std::uint64_t seed = 0;
    unsigned threads = 1;

    /// Throws std::invalid_argument on any inconsistent setting.
    void validate() const;
};

struct Observation {
    double time;
    Vector y;
};

struct StateSummary {
    double mean;
    double q05;
    double q95;
};

struct StepSummary {
    double time;
    std::vector<StateSummary> state;  ///< P state components followed by mu_W
    double ess;
    bool resampled;
};

struct Sigma2Component {
    double weight;
    double shape;
    double scale;
};

struct FilterOutput {
    std::vector<StepSummary> steps;
    std::vector<Sigma2Component> sigma2_mixture;  ///< empty unless marginalising
    double log_evidence = 0.0;
    std::size_t regularized_updates = 0;
};

/// Initial particle population with uniform weights and split streams.
std::vector<Particle> init_particles(const FilterConfig& config);

/// Propagate one particle over `kernel.interval`, update on y and add the
/// incremental marginal log-likelihood to its log-weight. A zero-length
/// interval skips the prediction. Throws DegenerateObservation.
Particle propose_and_weight(const Particle& particle, const IntervalKernel& kernel, const Vector& y,
                            const FilterConfig& config);
Particle propose_and_weight(const Particle& particle, Interval interval, const Vector& y,
                            const FilterConfig& config);

/// (sum w)^2 / sum w^2 for unnormalised log-weights. Throws FilterFailure
/// when every weight is zero.
double ess(std::span<const double> log_weights);

/// Parent index of each of the n offspring of systematic resampling with
/// offset u in [0, 1).
std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u);

/// Systematic resampling on normalised weights; offspring get uniform weights
/// and fresh streams split from their parent's.
std::vector<Particle> resample_systematic(const std::vector<Particle>& particles, Rng& rng);

/// Weighted summaries of every extended-state component: mixture mean and the
/// 5% / 95% quantiles of the Gaussian mixture whose components have variance
/// sigma2_hat * c_scaled, sigma2_hat being each particle's IG posterior mean.
std::vector<StateSummary> summarize_particles(std::span<const Particle> particles, const FilterConfig& config);

/// Quantile of sum_j w_j N(means_j, sds_j^2); zero sds are point masses.
double mixture_quantile(std::span<const double> weights, std::span<const double> means,
                        std::span<const double> sds, double q);

/// Full filtering sweep. Throws FilterFailure when every particle dies.
FilterOutput run_filter(std::span<const Observation> data, const FilterConfig& config);

}  // namespace levy
