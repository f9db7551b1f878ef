#pragma once

// Kalman recursions in sigma_W^2-scaled form with the conjugate
// normal / inverted-gamma marginal likelihood.
//
// Every covariance here is divided by sigma_W^2, so nothing in this module
// takes sigma_W^2 as an input. In the fixed-parameter mode used by the full
// Gaussian residual case the same recursions run on absolute covariances and
// log_conditional(acc, 1.0) gives the log-likelihood.

#include <cstddef>
#include <limits>
#include <stdexcept>

#include "levy/ssm.hpp"

namespace levy {

/// Finite stand-in for kappa_W = infinity (flat prior on mu_W).
inline constexpr double kFlatKappa = 1e8;

class DegenerateObservation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GaussianBelief {
    Vector a;         ///< mean of [X; mu_W]
    Matrix c_scaled;  ///< covariance / sigma_W^2
};

struct MarginalAccumulator {
    std::size_t n_obs = 0;
    double e_n = 0.0;          ///< sum of w^T F^-1 w
    double log_det_sum = 0.0;  ///< sum of log |F|
    std::size_t m_dim = 0;
};

/// IG(alpha_w, beta_w) prior on sigma_W^2 and N(mu_prior_mean, sigma_W^2 kappa_w) on mu_W.
struct IGPrior {
    double alpha_w = 1.0;
    double beta_w = 1.0;
    double kappa_w = std::numeric_limits<double>::infinity();

    void validate() const;
};

struct IGParams {
    double shape;
    double scale;

    /// Posterior mean of sigma^2; falls back to the mode when the mean is infinite.
    double point_estimate() const noexcept { return shape > 1.0 ? scale / (shape - 1.0) : scale / (shape + 1.0); }
};

/// a = [0_P; mu_prior_mean], c_scaled = diag(0_P, kappa_w).
GaussianBelief init_belief(const IGPrior& prior, double mu_prior_mean, int state_dim);

/// As above with a nonzero initial state mean and isotropic scaled variance.
GaussianBelief init_belief(const IGPrior& prior, double mu_prior_mean, const Vector& x0, double kappa_x0);

GaussianBelief predict(const GaussianBelief& belief, const ExtendedTransition& trans);

struct UpdateResult {
    GaussianBelief belief;
    Vector innovation;
    Matrix f;
    bool regularized = false;  ///< jitter was added to a singular F
};

/// Joseph-form measurement update. A singular F receives jitter
/// 1e-12 * trace(F) / M; if that does not help, DegenerateObservation is thrown.
UpdateResult update(const GaussianBelief& belief, const Vector& y, const ObservationModel& obs);

MarginalAccumulator accumulate(MarginalAccumulator acc, const Vector& w, const Matrix& f);

/// log p(y_1:N) with sigma_W^2 integrated against the IG prior. The exponent
/// of sigma_W^2 is the total count of scalar observations N * M.
double log_marginal(const MarginalAccumulator& acc, const IGPrior& prior);

/// log p(y_1:N | sigma_W^2).
double log_conditional(const MarginalAccumulator& acc, double sigma2);

IGParams posterior_sigma2(const MarginalAccumulator& acc, const IGPrior& prior);

}  // namespace levy
