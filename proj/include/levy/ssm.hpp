#pragma once

// Conditionally Gaussian transition densities of the Levy state space model
// and forward simulation of state skeletons.

#include <span>
#include <variant>
#include <vector>

#include "levy/linear_sde.hpp"

namespace levy {

enum class ApproximationCase {
    TruncatedOnly,            ///< residual neglected, nu = 0
    FullGaussianResidual,     ///< residual matched in full, nu = mu_W^2 + sigma_W^2
    PartialGaussianResidual,  ///< residual with sigma_W^2 only, nu = sigma_W^2
};

/// Scale factor for the residual covariance under each approximation case.
double nu_factor(ApproximationCase approx, const StableParams& params);

/// Innovation covariance in units of sigma_W^2 (cases 1 and 3).
struct ScaledNoise {
    Matrix cov;
};

/// Absolute innovation law of case 2: N(offset, cov), mu_W and sigma_W fixed.
struct FullNoise {
    Vector offset;
    Matrix cov;
};

/// Extended-state transition alpha_t = A_ext alpha_s + B e for alpha = [X; mu_W].
/// In case 2 the last column of the top block is zero and the mean offset
/// lives in FullNoise.
struct ExtendedTransition {
    Matrix a_ext;
    Matrix b;
    std::variant<ScaledNoise, FullNoise> noise;
    Interval interval;

    bool scaled() const noexcept { return std::holds_alternative<ScaledNoise>(noise); }
};

/// y = H alpha + V, V ~ N(0, sigma_W^2 kappa_V).
struct ObservationModel {
    Matrix h;
    Matrix kappa_v;

    int obs_dim() const noexcept { return static_cast<int>(h.rows()); }
    /// Throws std::invalid_argument on shape mismatch or a non-PSD kappa_V.
    void validate(int extended_dim) const;
};

ExtendedTransition build_transition(const TransitionStats& stats, ApproximationCase approx,
                                    const SystemMatrices& sys, const StableParams& params);

/// Draw from N(mean, cov) with a spectral square root; negative eigenvalues
/// are clamped to zero so rank-deficient covariances are fine.
Vector sample_gaussian(const Vector& mean, const Matrix& cov, Rng& rng);

struct ForwardOptions {
    /// Sample every Gaussian mark instead of the conditionally Gaussian form.
    MarkMode marks = MarkMode::Marginalised;
};

/// Simulate the state at every time in `times`. The first entry is x0 at times[0].
std::vector<Vector> forward_simulate(const SystemMatrices& sys, const StableParams& params,
                                     ApproximationCase approx, std::span<const double> times,
                                     const Vector& x0, Rng& rng, ForwardOptions options = {});

/// Noisy observations y = H [x; mu_W] + N(0, sigma_W^2 kappa_V) of a skeleton.
std::vector<Vector> observe(std::span<const Vector> states, const StableParams& params,
                            const ObservationModel& obs, Rng& rng);

bool is_psd(const Matrix& m, double rel_tol = 1e-10);

}  // namespace levy
