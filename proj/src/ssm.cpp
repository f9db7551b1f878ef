#include "levy/ssm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace levy {

double nu_factor(ApproximationCase approx, const StableParams& params) {
    switch (approx) {
        case ApproximationCase::TruncatedOnly: return 0.0;
        case ApproximationCase::FullGaussianResidual:
            return params.mu_w() * params.mu_w() + params.sigma_w() * params.sigma_w();
        case ApproximationCase::PartialGaussianResidual: return params.sigma_w() * params.sigma_w();
    }
    throw std::invalid_argument("unknown approximation case");
}

bool is_psd(const Matrix& m, double rel_tol) {
    if (m.rows() != m.cols()) return false;
    if (m.size() == 0) return true;
    const double scale = std::max({m.trace(), m.cwiseAbs().maxCoeff(), 0.0});
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(scale, 1e-300)) return false;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -rel_tol * scale;
}

void ObservationModel::validate(int extended_dim) const {
    if (h.cols() != extended_dim)
        throw std::invalid_argument("observation matrix must have P + 1 columns");
    if (h.rows() < 1) throw std::invalid_argument("observation dimension must be at least 1");
    if (kappa_v.rows() != h.rows() || kappa_v.cols() != h.rows())
        throw std::invalid_argument("kappa_V must be M x M");
    if (!h.allFinite() || !kappa_v.allFinite()) throw std::invalid_argument("observation model must be finite");
    if (!is_psd(kappa_v)) throw std::invalid_argument("kappa_V must be symmetric PSD");
}

ExtendedTransition build_transition(const TransitionStats& stats, ApproximationCase approx,
                                    const SystemMatrices& sys, const StableParams& params) {
    const int p = sys.dim();
    if (stats.m.size() != p || stats.s.rows() != p || stats.sigma_bare.rows() != p || stats.ybar.size() != p)
        throw std::invalid_argument("transition statistics do not match the system dimension");

    ExtendedTransition out;
    out.interval = stats.interval;
    out.a_ext = Matrix::Zero(p + 1, p + 1);
    out.a_ext.topLeftCorner(p, p) = mat_exp(sys, stats.interval.length());
    out.a_ext(p, p) = 1.0;
    out.b = Matrix::Zero(p + 1, p);
    out.b.topRows(p).setIdentity();

    switch (approx) {
        case ApproximationCase::TruncatedOnly:
            out.a_ext.topRightCorner(p, 1) = stats.m - stats.ybar;
            out.noise = ScaledNoise{stats.s};
            break;
        case ApproximationCase::PartialGaussianResidual:
            out.a_ext.topRightCorner(p, 1) = stats.m - stats.ybar;
            out.noise = ScaledNoise{stats.s + stats.sigma_bare};
            break;
        case ApproximationCase::FullGaussianResidual: {
            const double s2 = params.sigma_w() * params.sigma_w();
            out.noise = FullNoise{params.mu_w() * stats.m - stats.zbar,
                                  s2 * stats.s + nu_factor(approx, params) * stats.sigma_bare};
            break;
        }
    }
    return out;
}

Vector sample_gaussian(const Vector& mean, const Matrix& cov, Rng& rng) {
    const auto n = mean.size();
    std::normal_distribution<double> std_normal(0.0, 1.0);
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = std_normal(rng);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
    const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return mean + es.eigenvectors() * root.cwiseProduct(z);
}

std::vector<Vector> forward_simulate(const SystemMatrices& sys, const StableParams& params,
                                     ApproximationCase approx, std::span<const double> times,
                                     const Vector& x0, Rng& rng, ForwardOptions options) {
    const int p = sys.dim();
    if (x0.size() != p) throw std::invalid_argument("initial state has wrong dimension");
    if (!times.empty() && times.front() < 0.0) throw std::invalid_argument("times must start at or after 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw std::invalid_argument("times must be strictly ascending");

    std::vector<Vector> states;
    if (times.empty()) return states;
    states.reserve(times.size());

    Vector alpha(p + 1);
    alpha << x0, params.mu_w();
    states.push_back(x0);
    const double s2 = params.sigma_w() * params.sigma_w();
    const double inv_alpha = 1.0 / params.alpha();

    for (std::size_t i = 1; i < times.size(); ++i) {
        const Interval iv{times[i - 1], times[i]};
        const JumpSet jumps = sample_jump_set(params, iv, rng, options.marks);
        const TransitionStats stats = compute_transition_stats(jumps, sys, params);

        if (options.marks == MarkMode::Explicit) {
            // X_t = exp(A d) X_s + Z - zbar + residual, with Z summed mark by mark
            Vector z = Vector::Zero(p);
            const double scale = std::pow(iv.length(), inv_alpha);
            for (const auto& r : jumps.records)
                z += (*r.u * scale * std::exp(-inv_alpha * std::log(r.gamma))) * ft_kernel(sys, iv.t, r.v);
            const Vector residual =
                sample_gaussian(Vector::Zero(p), nu_factor(approx, params) * stats.sigma_bare, rng);
            alpha.head(p) = mat_exp(sys, iv.length()) * alpha.head(p) + z - stats.zbar + residual;
        } else {
            const ExtendedTransition tr = build_transition(stats, approx, sys, params);
            if (const auto* scaled = std::get_if<ScaledNoise>(&tr.noise)) {
                const Vector e = sample_gaussian(Vector::Zero(p), s2 * scaled->cov, rng);
                alpha = tr.a_ext * alpha + tr.b * e;
            } else {
                const auto& full = std::get<FullNoise>(tr.noise);
                const Vector e = sample_gaussian(full.offset, full.cov, rng);
                alpha.head(p) = tr.a_ext.topLeftCorner(p, p) * alpha.head(p) + e;
            }
        }
        states.push_back(alpha.head(p));
    }
    return states;
}

std::vector<Vector> observe(std::span<const Vector> states, const StableParams& params,
                            const ObservationModel& obs, Rng& rng) {
    std::vector<Vector> ys;
    ys.reserve(states.size());
    const double s2 = params.sigma_w() * params.sigma_w();
    for (const auto& x : states) {
        Vector alpha(x.size() + 1);
        alpha << x, params.mu_w();
        obs.validate(static_cast<int>(alpha.size()));
        ys.push_back(sample_gaussian(obs.h * alpha, s2 * obs.kappa_v, rng));
    }
    return ys;
}

}  // namespace levy
