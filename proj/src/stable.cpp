#include "levy/stable.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace levy {

StableParams::StableParams(double alpha, double mu_w, double sigma_w, double c)
    : alpha_(alpha), mu_w_(mu_w), sigma_w_(sigma_w), c_(c) {
    if (!(alpha > 0.0 && alpha < 2.0))
        throw std::invalid_argument("alpha must lie in (0, 2), got " + std::to_string(alpha));
    if (std::abs(alpha - 1.0) < kAlphaGuard)
        throw std::invalid_argument("alpha within " + std::to_string(kAlphaGuard) +
                                    " of 1 is not supported");
    if (!std::isfinite(mu_w)) throw std::invalid_argument("mu_w must be finite");
    if (!(sigma_w > 0.0) || !std::isfinite(sigma_w))
        throw std::invalid_argument("sigma_w must be positive");
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("c must be positive");
}

std::vector<double> sample_poisson_epochs(double rate_horizon, Rng& rng) {
    if (!(rate_horizon >= 0.0)) throw std::invalid_argument("rate horizon must be nonnegative");
    std::vector<double> epochs;
    std::exponential_distribution<double> exp1(1.0);
    double gamma = exp1(rng);
    while (gamma <= rate_horizon) {
        if (epochs.size() >= kMaxJumpsPerInterval)
            throw JumpCapExceeded("more than " + std::to_string(kMaxJumpsPerInterval) +
                                  " epochs requested (horizon " + std::to_string(rate_horizon) + ")");
        epochs.push_back(gamma);
        // a zero exponential draw would repeat the epoch
        double e;
        do e = exp1(rng); while (e <= 0.0);
        gamma += e;
    }
    return epochs;
}

JumpSet sample_jump_set(const StableParams& params, Interval interval, Rng& rng, MarkMode marks) {
    if (!interval.valid())
        throw std::invalid_argument("jump set interval must satisfy s < t");
    JumpSet set{interval, params.c(), {}};
    const auto epochs = sample_poisson_epochs(params.c() * interval.length(), rng);
    set.records.reserve(epochs.size());
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> mark(params.mu_w(), params.sigma_w());
    for (double g : epochs) {
        // (s, t]: map a draw from [0, 1) onto t - u * length
        const double v = interval.t - unif(rng) * interval.length();
        std::optional<double> u;
        if (marks == MarkMode::Explicit) u = mark(rng);
        set.records.push_back({g, v, u});
    }
    return set;
}

double centering_a(double c, const StableParams& params) {
    if (!(c > 0.0)) throw std::invalid_argument("centering level must be positive");
    const double a = params.alpha();
    if (a < 1.0) return 0.0;
    return params.mu_w() * a / (a - 1.0) * std::pow(c, (a - 1.0) / a);
}

std::vector<double> simulate_w_path(const StableParams& params, std::span<const double> grid,
                                    Rng& rng, MarkMode marks) {
    if (!std::is_sorted(grid.begin(), grid.end()) ||
        (!grid.empty() && (grid.front() < 0.0 || grid.back() > 1.0)))
        throw std::invalid_argument("grid must be ascending within [0, 1]");
    std::vector<double> path(grid.size(), 0.0);
    if (grid.empty()) return path;

    const JumpSet jumps = sample_jump_set(params, {0.0, 1.0}, rng, marks);
    const double inv_alpha = 1.0 / params.alpha();

    // per-cell totals; cell k collects jumps with grid[k-1] < v <= grid[k]
    std::vector<double> sum_h(grid.size(), 0.0);
    std::vector<double> sum_h2(grid.size(), 0.0);
    std::vector<double> sum_hu(grid.size(), 0.0);
    for (const auto& r : jumps.records) {
        const auto it = std::lower_bound(grid.begin(), grid.end(), r.v);
        if (it == grid.end()) continue;
        const auto k = static_cast<std::size_t>(it - grid.begin());
        const double h = std::exp(-inv_alpha * std::log(r.gamma));
        sum_h[k] += h;
        sum_h2[k] += h * h;
        if (r.u) sum_hu[k] += h * *r.u;
    }

    std::normal_distribution<double> std_normal(0.0, 1.0);
    const double drift = centering_a(params.c(), params);
    double level = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (marks == MarkMode::Explicit) {
            level += sum_hu[k];
        } else if (sum_h2[k] > 0.0) {
            level += params.mu_w() * sum_h[k] + params.sigma_w() * std::sqrt(sum_h2[k]) * std_normal(rng);
        }
        path[k] = level - grid[k] * drift;
    }
    return path;
}

std::vector<double> sample_w1_levels(const StableParams& params, std::span<const double> levels, Rng& rng) {
    if (levels.empty()) return {};
    if (!std::is_sorted(levels.begin(), levels.end()) || !(levels.front() > 0.0))
        throw std::invalid_argument("levels must be positive and ascending");
    if (levels.back() > static_cast<double>(kMaxJumpsPerInterval))
        throw JumpCapExceeded("truncation level exceeds the jump cap");

    const double inv_alpha = 1.0 / params.alpha();
    std::exponential_distribution<double> gap(1.0);
    std::normal_distribution<double> std_normal(0.0, 1.0);
    std::vector<double> out(levels.size());
    double gamma = gap(rng);
    double jump_part = 0.0;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        double s1 = 0.0, s2 = 0.0;
        for (; gamma <= levels[k]; gamma += gap(rng)) {
            const double h = std::exp(-inv_alpha * std::log(gamma));
            s1 += h;
            s2 += h * h;
        }
        if (s2 > 0.0) jump_part += params.mu_w() * s1 + params.sigma_w() * std::sqrt(s2) * std_normal(rng);
        out[k] = jump_part - centering_a(levels[k], params);
    }
    return out;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("KS statistic needs nonempty samples");
    std::vector<double> xa(a.begin(), a.end());
    std::vector<double> xb(b.begin(), b.end());
    std::sort(xa.begin(), xa.end());
    std::sort(xb.begin(), xb.end());
    const double na = static_cast<double>(xa.size());
    const double nb = static_cast<double>(xb.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < xa.size() && j < xb.size()) {
        const double x = std::min(xa[i], xb[j]);
        while (i < xa.size() && xa[i] <= x) ++i;
        while (j < xb.size() && xb[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_critical_value(std::size_t n_a, std::size_t n_b, double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
    const double na = static_cast<double>(n_a), nb = static_cast<double>(n_b);
    return std::sqrt(-0.5 * std::log(0.5 * level)) * std::sqrt((na + nb) / (na * nb));
}

double ks_null_sd(std::size_t n_a, std::size_t n_b) {
    // standard deviation of the Kolmogorov distribution
    constexpr double pi = std::numbers::pi;
    const double mean = std::sqrt(pi / 2.0) * std::numbers::ln2;
    const double sd = std::sqrt(pi * pi / 12.0 - mean * mean);
    const double na = static_cast<double>(n_a), nb = static_cast<double>(n_b);
    return sd * std::sqrt((na + nb) / (na * nb));
}

}  // namespace levy
