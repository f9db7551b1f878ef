#pragma once

// Latent point process and truncated shot-noise series of the conditionally
// Gaussian alpha-stable Levy process, W(t) = sum h(G_i) U_i 1(V_i <= t) - t A(c)
// with h(G) = G^(-1/alpha) and U_i ~ N(mu_W, sigma_W^2).

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "levy/random.hpp"

namespace levy {

/// Half-width of the excluded band around alpha = 1.
inline constexpr double kAlphaGuard = 0.02;

/// Maximum number of Poisson epochs generated for a single interval.
inline constexpr std::size_t kMaxJumpsPerInterval = 10'000'000;

class JumpCapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Driving-process parameters. Construction validates every invariant.
class StableParams {
public:
    StableParams(double alpha, double mu_w, double sigma_w, double c);

    double alpha() const noexcept { return alpha_; }
    double mu_w() const noexcept { return mu_w_; }
    double sigma_w() const noexcept { return sigma_w_; }
    /// Truncation level: expected number of retained jumps per unit time.
    double c() const noexcept { return c_; }

    StableParams with_c(double c) const { return {alpha_, mu_w_, sigma_w_, c}; }
    StableParams with_marks(double mu_w, double sigma_w) const { return {alpha_, mu_w, sigma_w, c_}; }

private:
    double alpha_;
    double mu_w_;
    double sigma_w_;
    double c_;
};

/// Half-open time interval (s, t].
struct Interval {
    double s = 0.0;
    double t = 1.0;

    double length() const noexcept { return t - s; }
    bool valid() const noexcept { return s < t; }
};

struct JumpRecord {
    double gamma;              ///< Poisson epoch
    double v;                  ///< jump time in (s, t]
    std::optional<double> u;   ///< Gaussian mark; empty when marginalised
};

enum class MarkMode {
    Marginalised,  ///< store (gamma, v) only, marks handled analytically
    Explicit,      ///< draw u ~ N(mu_W, sigma_W^2) for every record
};

/// One interval's latent point process. Gammas are strictly ascending and
/// bounded by c * (t - s).
struct JumpSet {
    Interval interval;
    double c = 0.0;
    std::vector<JumpRecord> records;

    bool empty() const noexcept { return records.empty(); }
    std::size_t size() const noexcept { return records.size(); }
};

/// All partial sums of unit-mean exponentials that do not exceed the horizon.
/// Throws JumpCapExceeded past kMaxJumpsPerInterval epochs.
std::vector<double> sample_poisson_epochs(double rate_horizon, Rng& rng);

/// Throws std::invalid_argument when the interval is empty or reversed.
JumpSet sample_jump_set(const StableParams& params, Interval interval, Rng& rng,
                        MarkMode marks = MarkMode::Marginalised);

/// Centering of the truncated series: zero for alpha < 1, otherwise
/// mu_W * alpha / (alpha - 1) * c^((alpha - 1) / alpha).
double centering_a(double c, const StableParams& params);

/// One path of W^c on an ascending grid in [0, 1]. In Marginalised mode the
/// jump part of each grid cell is drawn from its exact conditionally Gaussian
/// law given the epochs; in Explicit mode every mark is sampled.
std::vector<double> simulate_w_path(const StableParams& params, std::span<const double> grid,
                                    Rng& rng, MarkMode marks = MarkMode::Marginalised);

/// W^c(1) at every truncation level in `levels` (ascending) from a single
/// epoch sequence. The marks of each strip between consecutive levels are
/// drawn from their conditionally Gaussian law, so the joint law across
/// levels is that of one nested series. params.c() is not used.
std::vector<double> sample_w1_levels(const StableParams& params, std::span<const double> levels, Rng& rng);

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Asymptotic two-sample KS critical value at the given significance level.
double ks_critical_value(std::size_t n_a, std::size_t n_b, double level = 0.01);

/// Asymptotic standard deviation of the two-sample KS statistic under the null.
double ks_null_sd(std::size_t n_a, std::size_t n_b);

}  // namespace levy
