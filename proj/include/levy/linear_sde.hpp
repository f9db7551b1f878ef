#pragma once

// Deterministic kernels of the linear SDE dX = A X dt + h dW: matrix
// exponentials, the impulse response f_t(u) = exp(A (t - u)) h 1(u <= t), its
// interval integrals, and the per-interval shot-noise statistics.

#include <optional>

#include <Eigen/Dense>

#include "levy/stable.hpp"

namespace levy {

/// Largest supported state dimension (the extended state adds one).
inline constexpr int kMaxStateDim = 8;
inline constexpr int kMaxDim = kMaxStateDim + 1;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Smallest admissible |theta| for the Langevin closed forms.
inline constexpr double kThetaGuard = 1e-6;

struct LangevinParams {
    double theta;

    explicit LangevinParams(double theta_);
};

/// Drift matrix and noise loading. Systems built through `langevin` carry
/// their theta and are evaluated with closed forms.
class SystemMatrices {
public:
    static SystemMatrices langevin(LangevinParams p);
    static SystemMatrices general(const Matrix& a, const Vector& h);

    const Matrix& a() const noexcept { return a_; }
    const Vector& h() const noexcept { return h_; }
    int dim() const noexcept { return static_cast<int>(h_.size()); }
    std::optional<double> langevin_theta() const noexcept { return theta_; }

    /// Same matrices without the Langevin tag, forcing the generic numeric path.
    SystemMatrices generic() const;

private:
    SystemMatrices(Matrix a, Vector h, std::optional<double> theta)
        : a_(std::move(a)), h_(std::move(h)), theta_(theta) {}

    Matrix a_;
    Vector h_;
    std::optional<double> theta_;
};

/// Generic matrix exponential exp(A t) (Pade scaling and squaring).
Matrix mat_exp(const Matrix& a, double t);

/// exp(A t), using the Langevin closed form when available.
Matrix mat_exp(const SystemMatrices& sys, double t);

/// f_t(u) = exp(A (t - u)) h for u <= t, zero otherwise.
Vector ft_kernel(const SystemMatrices& sys, double t, double u);

/// Integral of f_t(u) over u in (s, t].
Vector integrated_ft(const SystemMatrices& sys, double s, double t);

/// Mean of f_t(V) with V uniform on (s, t]; tends to h as t - s -> 0.
Vector mean_ft(const SystemMatrices& sys, double s, double t);

/// Gram integral of f_t(u) f_t(u)^T over (s, t]: the covariance of the
/// Gaussian SDE dZ = A Z dt + h dB over the interval.
Matrix gaussian_sde_cov(const SystemMatrices& sys, double s, double t);

/// Conditional mean and covariance kernels of the truncated jump integral
/// given the epochs and jump times of one interval.
struct JumpMoments {
    Vector m;
    Matrix s;
};

JumpMoments compute_m_s(const JumpSet& jumps, const SystemMatrices& sys, const StableParams& params);

/// Compensator direction: zbar / mu_W, computed without dividing by mu_W.
Vector compute_ybar(const SystemMatrices& sys, const StableParams& params, double s, double t);

/// Compensator of the truncated jump integral (zero for alpha < 1).
Vector compute_zbar(const SystemMatrices& sys, const StableParams& params, double s, double t);

/// Residual covariance without its (sigma_W^2 + mu_W^2) factor:
/// alpha / (2 - alpha) * c^(1 - 2/alpha) * gaussian_sde_cov(s, t).
Matrix residual_cov_bare(const SystemMatrices& sys, const StableParams& params, double s, double t);

/// Everything the transition density of one interval needs.
struct TransitionStats {
    Vector m;
    Matrix s;
    Vector zbar;
    Vector ybar;
    Matrix sigma_bare;
    Interval interval;
};

/// Interval-level quantities that do not depend on the jumps.
struct IntervalKernel {
    Interval interval;
    Matrix transition;  ///< exp(A (t - s))
    Vector ybar;
    Matrix sigma_bare;
};

IntervalKernel make_interval_kernel(const SystemMatrices& sys, const StableParams& params, Interval interval);

TransitionStats compute_transition_stats(const JumpSet& jumps, const SystemMatrices& sys,
                                         const StableParams& params);
TransitionStats compute_transition_stats(const JumpSet& jumps, const SystemMatrices& sys,
                                         const StableParams& params, const IntervalKernel& kernel);

}  // namespace levy
