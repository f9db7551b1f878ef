#include "levy/smc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <string>
#include <numeric>
#include <thread>

namespace levy {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> xs) {
    double mx = kNegInf;
    for (double x : xs) mx = std::max(mx, x);
    if (mx == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - mx);
    return mx + std::log(acc);
}

bool fixed_absolute(const FilterConfig& cfg) {
    return cfg.approx == ApproximationCase::FullGaussianResidual;
}

// Observation model the recursion actually runs on. In case 2 covariances are
// absolute, so kappa_V is rescaled by the known sigma_W^2.
ObservationModel effective_obs(const FilterConfig& cfg) {
    ObservationModel obs = cfg.obs;
    if (fixed_absolute(cfg)) obs.kappa_v *= cfg.params.sigma_w() * cfg.params.sigma_w();
    return obs;
}

double log_likelihood(const MarginalAccumulator& acc, const FilterConfig& cfg) {
    if (cfg.marginalize) return log_marginal(acc, cfg.prior);
    if (fixed_absolute(cfg)) return log_conditional(acc, 1.0);
    return log_conditional(acc, cfg.params.sigma_w() * cfg.params.sigma_w());
}

double variance_scale(const Particle& p, const FilterConfig& cfg) {
    if (cfg.marginalize) return posterior_sigma2(p.acc, cfg.prior).point_estimate();
    if (fixed_absolute(cfg)) return 1.0;
    return cfg.params.sigma_w() * cfg.params.sigma_w();
}

Particle propagate(const Particle& particle, const IntervalKernel* kernel, const Vector& y,
                   const FilterConfig& cfg, const ObservationModel& obs) {
    Particle next = particle;
    next.stream = split_key(particle.stream, 0);
    GaussianBelief prior = particle.belief;
    if (kernel != nullptr) {
        Rng rng = make_rng(particle.stream);
        const JumpSet jumps = sample_jump_set(cfg.params, kernel->interval, rng);
        const TransitionStats stats = compute_transition_stats(jumps, cfg.sys, cfg.params, *kernel);
        prior = predict(particle.belief, build_transition(stats, cfg.approx, cfg.sys, cfg.params));
    }
    UpdateResult upd = update(prior, y, obs);
    next.belief = std::move(upd.belief);
    next.acc = accumulate(particle.acc, upd.innovation, upd.f);
    if (upd.regularized) ++next.regularized;
    const double delta = log_likelihood(next.acc, cfg) - log_likelihood(particle.acc, cfg);
    next.log_weight = std::isfinite(delta) ? particle.log_weight + delta : kNegInf;
    return next;
}

}  // namespace

void FilterConfig::validate() const {
    if (n_particles < 2) throw std::invalid_argument("at least two particles are required");
    if (!(resample_threshold > 0.0 && resample_threshold <= 1.0))
        throw std::invalid_argument("resample threshold must lie in (0, 1]");
    if (approx == ApproximationCase::FullGaussianResidual && marginalize)
        throw std::invalid_argument(
            "the full Gaussian residual case has no conjugate structure; disable marginalisation");
    const int p = sys.dim();
    obs.validate(p + 1);
    prior.validate();
    if (x0.size() != 0 && x0.size() != p) throw std::invalid_argument("x0 has wrong dimension");
    if (!(kappa_x0 >= 0.0)) throw std::invalid_argument("kappa_x0 must be nonnegative");
    if (threads < 1) throw std::invalid_argument("threads must be at least 1");
}

std::vector<Particle> init_particles(const FilterConfig& config) {
    const int p = config.sys.dim();
    const Vector x0 = config.x0.size() == 0 ? Vector::Zero(p) : config.x0;
    GaussianBelief belief;
    if (fixed_absolute(config)) {
        // mu_W pinned to its known value; covariances in absolute units
        IGPrior pinned = config.prior;
        pinned.kappa_w = 0.0;
        belief = init_belief(pinned, config.params.mu_w(), x0,
                             config.kappa_x0 * config.params.sigma_w() * config.params.sigma_w());
    } else {
        belief = init_belief(config.prior, config.mu_prior_mean, x0, config.kappa_x0);
    }
    const double lw = -std::log(static_cast<double>(config.n_particles));
    const std::uint64_t root = split_key(config.seed, 1);
    std::vector<Particle> out;
    out.reserve(config.n_particles);
    for (std::size_t j = 0; j < config.n_particles; ++j) out.push_back({belief, {}, lw, split_key(root, j), 0});
    return out;
}

Particle propose_and_weight(const Particle& particle, const IntervalKernel& kernel, const Vector& y,
                            const FilterConfig& config) {
    const IntervalKernel* k = kernel.interval.length() > 0.0 ? &kernel : nullptr;
    return propagate(particle, k, y, config, effective_obs(config));
}

Particle propose_and_weight(const Particle& particle, Interval interval, const Vector& y,
                            const FilterConfig& config) {
    if (interval.length() == 0.0) return propagate(particle, nullptr, y, config, effective_obs(config));
    if (!interval.valid()) throw std::invalid_argument("interval must satisfy s < t");
    const IntervalKernel kernel = make_interval_kernel(config.sys, config.params, interval);
    return propagate(particle, &kernel, y, config, effective_obs(config));
}

double ess(std::span<const double> log_weights) {
    const double lse = log_sum_exp(log_weights);
    if (lse == kNegInf || !std::isfinite(lse)) throw FilterFailure("all particle weights are zero");
    double sum = 0.0, sum2 = 0.0;
    for (double lw : log_weights) {
        const double w = std::exp(lw - lse);
        sum += w;
        sum2 += w * w;
    }
    return sum * sum / sum2;
}

std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u) {
    const std::size_t n = weights.size();
    std::vector<std::size_t> idx(n);
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double cum = weights.empty() ? 0.0 : weights[0] / total;
    std::size_t j = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double pos = (u + static_cast<double>(k)) / static_cast<double>(n);
        while (pos >= cum && j + 1 < n) cum += weights[++j] / total;
        idx[k] = j;
    }
    return idx;
}

std::vector<Particle> resample_systematic(const std::vector<Particle>& particles, Rng& rng) {
    std::vector<double> lw(particles.size());
    std::transform(particles.begin(), particles.end(), lw.begin(), [](const Particle& p) { return p.log_weight; });
    const double lse = log_sum_exp(lw);
    if (!std::isfinite(lse)) throw FilterFailure("cannot resample: all particle weights are zero");
    for (double& x : lw) x = std::exp(x - lse);

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const auto idx = systematic_indices(lw, unif(rng));
    const double uniform_lw = -std::log(static_cast<double>(particles.size()));
    std::vector<Particle> out;
    out.reserve(particles.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        Particle child = particles[idx[k]];
        child.log_weight = uniform_lw;
        child.stream = split_key(child.stream, k + 1);
        out.push_back(std::move(child));
    }
    return out;
}

double mixture_quantile(std::span<const double> weights, std::span<const double> means,
                        std::span<const double> sds, double q) {
    if (weights.empty() || weights.size() != means.size() || means.size() != sds.size())
        throw std::invalid_argument("mixture components must be nonempty and aligned");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t j = 0; j < means.size(); ++j) {
        lo = std::min(lo, means[j] - 10.0 * sds[j]);
        hi = std::max(hi, means[j] + 10.0 * sds[j]);
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    auto cdf = [&](double x) {
        double acc = 0.0;
        for (std::size_t j = 0; j < means.size(); ++j) {
            if (weights[j] == 0.0) continue;
            if (sds[j] > 0.0)
                acc += weights[j] * 0.5 * std::erfc(-(x - means[j]) / (sds[j] * std::numbers::sqrt2));
            else if (x >= means[j])
                acc += weights[j];
        }
        return acc / total;
    };
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) >= q) hi = mid;
        else lo = mid;
    }
    return hi;
}

std::vector<StateSummary> summarize_particles(std::span<const Particle> particles, const FilterConfig& config) {
    if (particles.empty()) return {};
    std::vector<double> lw(particles.size());
    for (std::size_t j = 0; j < particles.size(); ++j) lw[j] = particles[j].log_weight;
    const double lse = log_sum_exp(lw);
    if (!std::isfinite(lse)) throw FilterFailure("cannot summarise: all particle weights are zero");

    const std::size_t n = particles.size();
    std::vector<double> w(n), scale(n);
    for (std::size_t j = 0; j < n; ++j) {
        w[j] = std::exp(lw[j] - lse);
        scale[j] = variance_scale(particles[j], config);
    }
    const auto dim = particles.front().belief.a.size();
    std::vector<StateSummary> out;
    std::vector<double> means(n), sds(n);
    for (Eigen::Index k = 0; k < dim; ++k) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            means[j] = particles[j].belief.a(k);
            sds[j] = std::sqrt(std::max(0.0, scale[j] * particles[j].belief.c_scaled(k, k)));
            mean += w[j] * means[j];
        }
        out.push_back({mean, mixture_quantile(w, means, sds, 0.05), mixture_quantile(w, means, sds, 0.95)});
    }
    return out;
}

FilterOutput run_filter(std::span<const Observation> data, const FilterConfig& config) {
    config.validate();
    for (std::size_t i = 1; i < data.size(); ++i)
        if (!(data[i].time > data[i - 1].time)) throw std::invalid_argument("observation times must be strictly ascending");

    FilterOutput out;
    std::vector<Particle> particles = init_particles(config);
    const ObservationModel obs = effective_obs(config);
    const std::uint64_t resample_root = split_key(config.seed, 2);
    double t_prev = data.empty() ? 0.0 : config.t0.value_or(data.front().time);
    if (!data.empty() && data.front().time < t_prev)
        throw std::invalid_argument("first observation precedes the filter start time");

    std::vector<Particle> next(particles.size());
    std::vector<double> lw(particles.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Observation& ob = data[i];
        if (ob.y.size() != obs.obs_dim()) throw std::invalid_argument("observation has wrong dimension");
        const Interval iv{t_prev, ob.time};
        std::optional<IntervalKernel> kernel;
        if (iv.length() > 0.0) kernel = make_interval_kernel(config.sys, config.params, iv);
        const IntervalKernel* kp = kernel ? &*kernel : nullptr;

        auto work = [&](std::size_t begin, std::size_t end) {
            for (std::size_t j = begin; j < end; ++j) {
                if (particles[j].log_weight == kNegInf) {
                    next[j] = particles[j];
                    continue;
                }
                try {
                    next[j] = propagate(particles[j], kp, ob.y, config, obs);
                } catch (const DegenerateObservation&) {
                    next[j] = particles[j];
                    next[j].log_weight = kNegInf;
                }
            }
        };
        const std::size_t n = particles.size();
        const unsigned nt = std::min<std::size_t>(config.threads, n);
        if (nt <= 1) {
            work(0, n);
        } else {
            std::vector<std::thread> pool;
            std::vector<std::exception_ptr> errors(nt);
            const std::size_t chunk = (n + nt - 1) / nt;
            for (unsigned t = 0; t < nt; ++t) {
                pool.emplace_back([&, t] {
                    try {
                        work(t * chunk, std::min(n, (t + 1) * chunk));
                    } catch (...) {
                        errors[t] = std::current_exception();
                    }
                });
            }
            for (auto& th : pool) th.join();
            for (auto& e : errors)
                if (e) std::rethrow_exception(e);
        }
        particles.swap(next);

        for (std::size_t j = 0; j < n; ++j) lw[j] = particles[j].log_weight;
        const double lse = log_sum_exp(lw);
        if (!std::isfinite(lse))
            throw FilterFailure("all particles died at observation " + std::to_string(i) + " (time " +
                                std::to_string(ob.time) + ")");
        out.log_evidence += lse;
        for (auto& p : particles) p.log_weight -= lse;
        for (std::size_t j = 0; j < n; ++j) lw[j] = particles[j].log_weight;

        StepSummary step{ob.time, summarize_particles(particles, config), ess(lw), false};
        if (step.ess < config.resample_threshold * static_cast<double>(n)) {
            Rng rng = make_rng(split_key(resample_root, i));
            particles = resample_systematic(particles, rng);
            step.resampled = true;
        }
        out.steps.push_back(std::move(step));
        t_prev = ob.time;
    }

    double total_w = 0.0;
    for (const auto& p : particles) {
        out.regularized_updates += p.regularized;
        total_w += std::exp(p.log_weight);
    }
    if (config.marginalize) {
        for (const auto& p : particles) {
            const IGParams ig = posterior_sigma2(p.acc, config.prior);
            out.sigma2_mixture.push_back({std::exp(p.log_weight) / total_w, ig.shape, ig.scale});
        }
    }
    return out;
}

}  // namespace levy
