#pragma once

// Independent reference computations. None of these call the closed forms or
// recursions they are used to check.

#include <span>
#include <vector>

#include "levy/smc.hpp"

namespace levy::validation {

/// Composite trapezoid of f_t(u) over (s, t] with `panels` panels. The kernel
/// is advanced by repeated multiplication with exp(A h) from the generic
/// matrix exponential.
Vector trapezoid_integrated_ft(const SystemMatrices& sys, double s, double t, int panels = 100000);

/// Composite trapezoid of f_t(u) f_t(u)^T over (s, t].
Matrix trapezoid_gram(const SystemMatrices& sys, double s, double t, int panels = 100000);

/// One step of a linear Gaussian model in scaled units:
/// alpha_i = A alpha_{i-1} + B e, e ~ N(0, sigma^2 Q).
struct LinearStep {
    Matrix a;
    Matrix b;
    Matrix q;
};

/// log N(y_1:T) of the analytically stacked joint Gaussian of all
/// observations, with y_i = H alpha_i + v_i, v_i ~ N(0, sigma^2 kappa_V).
double stacked_joint_loglik(const GaussianBelief& initial, std::span<const LinearStep> steps,
                            const ObservationModel& obs, std::span<const Vector> ys, double sigma2);

/// log of the integral over sigma^2 of p(y | sigma^2) IG(sigma^2; alpha_w, beta_w),
/// with p(y | sigma^2) assembled from the accumulator by direct Gaussian algebra.
double ig_quadrature_log_marginal(const MarginalAccumulator& acc, const IGPrior& prior);

/// Integral of gamma^(-1/alpha) over (0, horizon] by numerical quadrature.
double campbell_mean_integral(double alpha, double horizon);

/// Brute-force evidence p(y_1:N) for a low-intensity model: every interval
/// carries zero or one jump, the single jump having gamma ~ U(0, c d) and
/// v ~ U(s, t]; both are integrated by Gauss-Legendre quadrature. The filter
/// config supplies the model, prior and start time (t0 must be set).
double enumeration_evidence(std::span<const Observation> data, const FilterConfig& config);

}  // namespace levy::validation
