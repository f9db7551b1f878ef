#include "levy/validation/oracles.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace levy::validation {

namespace {

template <class F>
void for_each_trapezoid_node(const SystemMatrices& sys, double s, double t, int panels, F&& visit) {
    if (!(s < t) || panels < 1) throw std::invalid_argument("trapezoid needs s < t and panels >= 1");
    const double step = (t - s) / panels;
    const Eigen::MatrixXd e = mat_exp(sys.a(), step);
    Eigen::VectorXd v = sys.h();
    for (int k = 0; k <= panels; ++k) {
        const double w = (k == 0 || k == panels) ? 0.5 * step : step;
        visit(w, v);
        v = e * v;
    }
}

}  // namespace

Vector trapezoid_integrated_ft(const SystemMatrices& sys, double s, double t, int panels) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(sys.dim());
    for_each_trapezoid_node(sys, s, t, panels, [&](double w, const Eigen::VectorXd& v) { acc += w * v; });
    return acc;
}

Matrix trapezoid_gram(const SystemMatrices& sys, double s, double t, int panels) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(sys.dim(), sys.dim());
    for_each_trapezoid_node(sys, s, t, panels,
                            [&](double w, const Eigen::VectorXd& v) { acc.noalias() += w * v * v.transpose(); });
    return acc;
}

double stacked_joint_loglik(const GaussianBelief& initial, std::span<const LinearStep> steps,
                            const ObservationModel& obs, std::span<const Vector> ys, double sigma2) {
    const std::size_t n = steps.size();
    if (ys.size() != n) throw std::invalid_argument("one observation per step is required");
    const int m = obs.obs_dim();
    const int tot = static_cast<int>(n) * m;

    std::vector<Eigen::VectorXd> mean(n);
    std::vector<Eigen::MatrixXd> cov(n);
    Eigen::VectorXd mu = initial.a;
    Eigen::MatrixXd p = initial.c_scaled;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::MatrixXd a = steps[i].a, b = steps[i].b, q = steps[i].q;
        mu = a * mu;
        p = a * p * a.transpose() + b * q * b.transpose();
        mean[i] = mu;
        cov[i] = p;
    }

    const Eigen::MatrixXd h = obs.h;
    Eigen::VectorXd y(tot), ymean(tot);
    Eigen::MatrixXd sy = Eigen::MatrixXd::Zero(tot, tot);
    for (std::size_t i = 0; i < n; ++i) {
        y.segment(static_cast<Eigen::Index>(i) * m, m) = ys[i];
        ymean.segment(static_cast<Eigen::Index>(i) * m, m) = h * mean[i];
        // Cov(alpha_i, alpha_j) = P_i A_{i+1}^T ... A_j^T for j >= i
        Eigen::MatrixXd cross = cov[i];
        for (std::size_t j = i; j < n; ++j) {
            if (j > i) cross = cross * Eigen::MatrixXd(steps[j].a).transpose();
            Eigen::MatrixXd block = h * cross * h.transpose();
            if (j == i) block += Eigen::MatrixXd(obs.kappa_v);
            sy.block(static_cast<Eigen::Index>(i) * m, static_cast<Eigen::Index>(j) * m, m, m) = block;
            sy.block(static_cast<Eigen::Index>(j) * m, static_cast<Eigen::Index>(i) * m, m, m) = block.transpose();
        }
    }
    sy *= sigma2;
    Eigen::LLT<Eigen::MatrixXd> llt(sy);
    if (llt.info() != Eigen::Success) throw std::runtime_error("stacked covariance is not positive definite");
    const Eigen::VectorXd z = llt.matrixL().solve(y - ymean);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * (tot * std::log(2.0 * std::numbers::pi) + logdet + z.squaredNorm());
}

double ig_quadrature_log_marginal(const MarginalAccumulator& acc, const IGPrior& prior) {
    const double k = static_cast<double>(acc.n_obs * acc.m_dim);
    // integrand in u = log sigma^2, Jacobian included
    auto log_integrand = [&](double u) {
        const double s2 = std::exp(u);
        const double loglik =
            -0.5 * k * std::log(2.0 * std::numbers::pi * s2) - 0.5 * acc.log_det_sum - 0.5 * acc.e_n / s2;
        const double logprior = prior.alpha_w * std::log(prior.beta_w) - std::lgamma(prior.alpha_w) -
                                (prior.alpha_w + 1.0) * u - prior.beta_w / s2;
        return loglik + logprior + u;
    };
    double peak_u = 0.0, peak = -std::numeric_limits<double>::infinity();
    for (double u = -60.0; u <= 60.0; u += 1e-3) {
        const double v = log_integrand(u);
        if (v > peak) {
            peak = v;
            peak_u = u;
        }
    }
    auto f = [&](double u) { return std::exp(log_integrand(u) - peak); };
    double err = 0.0;
    const double lo = peak_u - 80.0, hi = peak_u + 80.0;
    const double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 30, 1e-15, &err);
    return peak + std::log(val);
}

double campbell_mean_integral(double alpha, double horizon) {
    if (!(alpha > 1.0)) throw std::invalid_argument("the mean of the epoch sum is finite only for alpha > 1");
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate([alpha](double g) { return std::pow(g, -1.0 / alpha); }, 0.0, horizon);
}

namespace {

struct EvidenceWalk {
    std::span<const Observation> data;
    const FilterConfig& cfg;
    ObservationModel obs;
    double ref = 0.0;

    double loglik(const MarginalAccumulator& acc) const {
        if (cfg.marginalize) return log_marginal(acc, cfg.prior);
        if (cfg.approx == ApproximationCase::FullGaussianResidual) return log_conditional(acc, 1.0);
        return log_conditional(acc, cfg.params.sigma_w() * cfg.params.sigma_w());
    }

    void step(const GaussianBelief& belief, const MarginalAccumulator& acc, const JumpSet& jumps,
              std::size_t i, GaussianBelief& nb, MarginalAccumulator& na) const {
        const TransitionStats stats = compute_transition_stats(jumps, cfg.sys, cfg.params);
        const GaussianBelief pred = predict(belief, build_transition(stats, cfg.approx, cfg.sys, cfg.params));
        const UpdateResult upd = update(pred, data[i].y, obs);
        nb = upd.belief;
        na = accumulate(acc, upd.innovation, upd.f);
    }

    template <int Nodes>
    double jump_integral(const GaussianBelief& belief, const MarginalAccumulator& acc, std::size_t i,
                         Interval iv) const {
        using Quad = boost::math::quadrature::gauss<double, Nodes>;
        const double horizon = cfg.params.c() * iv.length();
        // gamma = horizon * r^3 removes the gamma^(1/alpha) behaviour at 0
        return Quad::integrate(
            [&](double r) {
                const double gamma = horizon * r * r * r;
                const double jac = 3.0 * r * r;
                return jac * Quad::integrate(
                                 [&](double v) {
                                     JumpSet js{iv, cfg.params.c(), {{gamma, v, std::nullopt}}};
                                     GaussianBelief nb;
                                     MarginalAccumulator na;
                                     step(belief, acc, js, i, nb, na);
                                     return walk(nb, na, i + 1, true);
                                 },
                                 iv.s, iv.t) /
                             iv.length();
            },
            0.0, 1.0);
    }

    double walk(const GaussianBelief& belief, const MarginalAccumulator& acc, std::size_t i, bool jumped) const {
        if (i == data.size()) return std::exp(loglik(acc) - ref);
        const double s = i == 0 ? *cfg.t0 : data[i - 1].time;
        const Interval iv{s, data[i].time};
        const double lam = cfg.params.c() * iv.length();
        const double p0 = std::exp(-lam), p1 = lam * std::exp(-lam);

        GaussianBelief nb;
        MarginalAccumulator na;
        step(belief, acc, JumpSet{iv, cfg.params.c(), {}}, i, nb, na);
        const double none = walk(nb, na, i + 1, jumped);
        const double one = jumped ? jump_integral<7>(belief, acc, i, iv)
                                  : jump_integral<30>(belief, acc, i, iv);
        return p0 * none + p1 * one;
    }
};

}  // namespace

double enumeration_evidence(std::span<const Observation> data, const FilterConfig& config) {
    config.validate();
    if (!config.t0) throw std::invalid_argument("enumeration evidence needs an explicit start time");
    if (data.empty()) return 0.0;
    if (!(data.front().time > *config.t0)) throw std::invalid_argument("observations must follow t0");

    FilterConfig one = config;
    one.n_particles = 2;
    const auto particles = init_particles(one);
    const GaussianBelief b0 = particles.front().belief;
    EvidenceWalk w{data, config, config.obs};
    if (config.approx == ApproximationCase::FullGaussianResidual)
        w.obs.kappa_v *= config.params.sigma_w() * config.params.sigma_w();

    // reference: every interval empty, to keep the exponentials in range
    GaussianBelief b = b0;
    MarginalAccumulator acc;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double s = i == 0 ? *config.t0 : data[i - 1].time;
        GaussianBelief nb;
        MarginalAccumulator na;
        w.step(b, acc, JumpSet{{s, data[i].time}, config.params.c(), {}}, i, nb, na);
        b = nb;
        acc = na;
    }
    w.ref = w.loglik(acc);
    return w.ref + std::log(w.walk(b0, {}, 0, false));
}

}  // namespace levy::validation
