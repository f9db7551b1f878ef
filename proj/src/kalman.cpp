#include "levy/kalman.hpp"

#include <cmath>
#include <numbers>
#include <variant>

namespace levy {

void IGPrior::validate() const {
    if (!(alpha_w > 0.0) || !std::isfinite(alpha_w)) throw std::invalid_argument("alpha_w must be positive");
    if (!(beta_w > 0.0) || !std::isfinite(beta_w)) throw std::invalid_argument("beta_w must be positive");
    if (!(kappa_w >= 0.0)) throw std::invalid_argument("kappa_w must be nonnegative");
}

GaussianBelief init_belief(const IGPrior& prior, double mu_prior_mean, int state_dim) {
    return init_belief(prior, mu_prior_mean, Vector::Zero(state_dim), 0.0);
}

GaussianBelief init_belief(const IGPrior& prior, double mu_prior_mean, const Vector& x0, double kappa_x0) {
    prior.validate();
    if (!(kappa_x0 >= 0.0)) throw std::invalid_argument("kappa_x0 must be nonnegative");
    const auto p = x0.size();
    GaussianBelief b{Vector(p + 1), Matrix::Zero(p + 1, p + 1)};
    b.a << x0, mu_prior_mean;
    b.c_scaled.topLeftCorner(p, p).diagonal().setConstant(kappa_x0);
    b.c_scaled(p, p) = std::isinf(prior.kappa_w) ? kFlatKappa : prior.kappa_w;
    return b;
}

GaussianBelief predict(const GaussianBelief& belief, const ExtendedTransition& trans) {
    if (trans.a_ext.cols() != belief.a.size()) throw std::invalid_argument("transition does not match belief");
    GaussianBelief out;
    out.a = trans.a_ext * belief.a;
    out.c_scaled = trans.a_ext * belief.c_scaled * trans.a_ext.transpose();
    std::visit(
        [&](const auto& noise) {
            using T = std::decay_t<decltype(noise)>;
            if constexpr (std::is_same_v<T, FullNoise>) out.a += trans.b * noise.offset;
            out.c_scaled += trans.b * noise.cov * trans.b.transpose();
        },
        trans.noise);
    out.c_scaled = 0.5 * (out.c_scaled + out.c_scaled.transpose());
    return out;
}

UpdateResult update(const GaussianBelief& belief, const Vector& y, const ObservationModel& obs) {
    const auto n = belief.a.size();
    if (obs.h.cols() != n) throw std::invalid_argument("observation matrix does not match belief");
    if (y.size() != obs.h.rows()) throw std::invalid_argument("observation has wrong dimension");
    const auto m = y.size();

    UpdateResult out;
    out.innovation = y - obs.h * belief.a;
    const Matrix ch = belief.c_scaled * obs.h.transpose();
    out.f = obs.h * ch + obs.kappa_v;
    out.f = 0.5 * (out.f + out.f.transpose());

    Eigen::LLT<Matrix> llt(out.f);
    if (llt.info() != Eigen::Success) {
        const double jitter = 1e-12 * out.f.trace() / static_cast<double>(m);
        if (jitter > 0.0) {
            out.f.diagonal().array() += jitter;
            llt.compute(out.f);
        }
        if (!(jitter > 0.0) || llt.info() != Eigen::Success)
            throw DegenerateObservation("innovation covariance F is singular");
        out.regularized = true;
    }

    const Matrix gain = llt.solve(ch.transpose()).transpose();  // C H^T F^-1
    const Matrix ikh = Matrix::Identity(n, n) - gain * obs.h;
    out.belief.a = belief.a + gain * out.innovation;
    out.belief.c_scaled = ikh * belief.c_scaled * ikh.transpose() + gain * obs.kappa_v * gain.transpose();
    out.belief.c_scaled = 0.5 * (out.belief.c_scaled + out.belief.c_scaled.transpose());
    return out;
}

MarginalAccumulator accumulate(MarginalAccumulator acc, const Vector& w, const Matrix& f) {
    if (f.rows() != w.size() || f.cols() != w.size()) throw std::invalid_argument("F must be M x M");
    if (acc.n_obs > 0 && acc.m_dim != static_cast<std::size_t>(w.size()))
        throw std::invalid_argument("observation dimension changed between updates");
    Eigen::LLT<Matrix> llt(f);
    if (llt.info() != Eigen::Success) throw DegenerateObservation("innovation covariance F is singular");
    const Vector z = llt.matrixL().solve(w);
    acc.m_dim = static_cast<std::size_t>(w.size());
    acc.n_obs += 1;
    acc.e_n += z.squaredNorm();
    acc.log_det_sum += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return acc;
}

double log_marginal(const MarginalAccumulator& acc, const IGPrior& prior) {
    if (acc.n_obs == 0) return 0.0;
    const double k = 0.5 * static_cast<double>(acc.n_obs * acc.m_dim);
    const double a = prior.alpha_w, b = prior.beta_w;
    return -k * std::log(2.0 * std::numbers::pi) - 0.5 * acc.log_det_sum + a * std::log(b) -
           (a + k) * std::log(b + 0.5 * acc.e_n) + std::lgamma(k + a) - std::lgamma(a);
}

double log_conditional(const MarginalAccumulator& acc, double sigma2) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
    const double k = 0.5 * static_cast<double>(acc.n_obs * acc.m_dim);
    return -k * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * acc.log_det_sum - 0.5 * acc.e_n / sigma2;
}

IGParams posterior_sigma2(const MarginalAccumulator& acc, const IGPrior& prior) {
    return {prior.alpha_w + 0.5 * static_cast<double>(acc.n_obs * acc.m_dim), prior.beta_w + 0.5 * acc.e_n};
}

}  // namespace levy
