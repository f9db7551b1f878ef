#include "levy/linear_sde.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace levy {

LangevinParams::LangevinParams(double theta_) : theta(theta_) {
    if (!(theta_ < 0.0)) throw std::invalid_argument("Langevin theta must be negative");
    if (std::abs(theta_) < kThetaGuard)
        throw std::invalid_argument("|theta| below " + std::to_string(kThetaGuard) + " is not supported");
}

SystemMatrices SystemMatrices::langevin(LangevinParams p) {
    Matrix a(2, 2);
    a << 0.0, 1.0, 0.0, p.theta;
    Vector h(2);
    h << 0.0, 1.0;
    return SystemMatrices(std::move(a), std::move(h), p.theta);
}

SystemMatrices SystemMatrices::general(const Matrix& a, const Vector& h) {
    const auto p = h.size();
    if (p < 1 || p > kMaxStateDim)
        throw std::invalid_argument("state dimension must lie in [1, " + std::to_string(kMaxStateDim) + "]");
    if (a.rows() != p || a.cols() != p) throw std::invalid_argument("drift matrix must be P x P");
    if (!a.allFinite() || !h.allFinite()) throw std::invalid_argument("system matrices must be finite");
    return SystemMatrices(a, h, std::nullopt);
}

SystemMatrices SystemMatrices::generic() const { return SystemMatrices(a_, h_, std::nullopt); }

Matrix mat_exp(const Matrix& a, double t) {
    const Eigen::MatrixXd scaled = Eigen::MatrixXd(a) * t;
    return scaled.exp();
}

Matrix mat_exp(const SystemMatrices& sys, double t) {
    if (const auto theta = sys.langevin_theta()) {
        const double th = *theta;
        const double e = std::exp(th * t);
        Matrix out(2, 2);
        out << 1.0, std::expm1(th * t) / th, 0.0, e;
        return out;
    }
    return mat_exp(sys.a(), t);
}

namespace {

// Langevin response to a unit jump a time tau earlier.
Vector langevin_response(double theta, double tau) {
    Vector f(2);
    f << std::expm1(theta * tau) / theta, std::exp(theta * tau);
    return f;
}

// Top-right block of exp([[A, h], [0, 0]] d) is the integral of exp(A u) h over [0, d].
Vector van_loan_integral(const SystemMatrices& sys, double d) {
    const int p = sys.dim();
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(p + 1, p + 1);
    aug.topLeftCorner(p, p) = sys.a();
    aug.topRightCorner(p, 1) = sys.h();
    const Eigen::MatrixXd e = (aug * d).exp();
    return e.topRightCorner(p, 1);
}

// Van Loan: with F = exp([[-A, h h^T], [0, A^T]] d), the Gram integral is F22^T F12.
Matrix van_loan_gram(const SystemMatrices& sys, double d) {
    const int p = sys.dim();
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(2 * p, 2 * p);
    aug.topLeftCorner(p, p) = -Eigen::MatrixXd(sys.a());
    aug.topRightCorner(p, p) = Eigen::VectorXd(sys.h()) * Eigen::VectorXd(sys.h()).transpose();
    aug.bottomRightCorner(p, p) = Eigen::MatrixXd(sys.a()).transpose();
    const Eigen::MatrixXd e = (aug * d).exp();
    Eigen::MatrixXd g = e.bottomRightCorner(p, p).transpose() * e.topRightCorner(p, p);
    return 0.5 * (g + g.transpose());
}

void require_ordered(double s, double t) {
    if (!(s <= t)) throw std::invalid_argument("interval requires s <= t");
}

}  // namespace

Vector ft_kernel(const SystemMatrices& sys, double t, double u) {
    if (u > t) return Vector::Zero(sys.dim());
    if (const auto theta = sys.langevin_theta()) return langevin_response(*theta, t - u);
    return mat_exp(sys.a(), t - u) * sys.h();
}

Vector integrated_ft(const SystemMatrices& sys, double s, double t) {
    require_ordered(s, t);
    const double d = t - s;
    if (d == 0.0) return Vector::Zero(sys.dim());
    if (const auto theta = sys.langevin_theta()) {
        const double th = *theta;
        const double g = std::expm1(th * d) / th;
        Vector out(2);
        out << (g - d) / th, g;
        return out;
    }
    return van_loan_integral(sys, d);
}

Vector mean_ft(const SystemMatrices& sys, double s, double t) {
    require_ordered(s, t);
    const double d = t - s;
    if (d == 0.0) return sys.h();
    return integrated_ft(sys, s, t) / d;
}

Matrix gaussian_sde_cov(const SystemMatrices& sys, double s, double t) {
    require_ordered(s, t);
    const double d = t - s;
    const int p = sys.dim();
    if (d == 0.0) return Matrix::Zero(p, p);
    if (const auto theta = sys.langevin_theta()) {
        const double th = *theta;
        const double i2 = std::expm1(2.0 * th * d) / (2.0 * th);
        const double i1 = std::expm1(th * d) / th;
        const double it2 = 1.0 / (th * th);
        Matrix m1(2, 2), m2(2, 2), m3(2, 2);
        m1 << it2, 1.0 / th, 1.0 / th, 1.0;
        m2 << -2.0 * it2, -1.0 / th, -1.0 / th, 0.0;
        m3 << it2, 0.0, 0.0, 0.0;
        return i2 * m1 + i1 * m2 + d * m3;
    }
    return van_loan_gram(sys, d);
}

JumpMoments compute_m_s(const JumpSet& jumps, const SystemMatrices& sys, const StableParams& params) {
    const int p = sys.dim();
    JumpMoments out{Vector::Zero(p), Matrix::Zero(p, p)};
    if (jumps.empty()) return out;

    const Interval iv = jumps.interval;
    const double inv_alpha = 1.0 / params.alpha();
    const double scale = std::pow(iv.length(), inv_alpha);

    if (const auto theta = sys.langevin_theta()) {
        const double th = *theta;
        const double it = 1.0 / th, it2 = it * it;
        // m = sum w_i (e_i [1/th, 1] + [-1/th, 0]),
        // S = sum w_i^2 (e_i^2 M1 + e_i M2 + M3) with e_i = exp(th (t - V_i))
        double sw = 0.0, swe = 0.0, sw2 = 0.0, sw2e = 0.0, sw2e2 = 0.0;
        for (const auto& r : jumps.records) {
            const double w = scale * std::exp(-inv_alpha * std::log(r.gamma));
            const double e = std::exp(th * (iv.t - r.v));
            const double w2 = w * w;
            sw += w;
            swe += w * e;
            sw2 += w2;
            sw2e += w2 * e;
            sw2e2 += w2 * e * e;
        }
        out.m << it * swe - it * sw, swe;
        out.s(0, 0) = it2 * sw2e2 - 2.0 * it2 * sw2e + it2 * sw2;
        out.s(0, 1) = it * sw2e2 - it * sw2e;
        out.s(1, 0) = out.s(0, 1);
        out.s(1, 1) = sw2e2;
        return out;
    }

    for (const auto& r : jumps.records) {
        const double w = scale * std::exp(-inv_alpha * std::log(r.gamma));
        const Vector f = mat_exp(sys.a(), iv.t - r.v) * sys.h();
        out.m += w * f;
        out.s += (w * w) * (f * f.transpose());
    }
    return out;
}

Vector compute_ybar(const SystemMatrices& sys, const StableParams& params, double s, double t) {
    const double a = params.alpha();
    if (a < 1.0) return Vector::Zero(sys.dim());
    return (a / (a - 1.0) * std::pow(params.c(), 1.0 - 1.0 / a)) * integrated_ft(sys, s, t);
}

Vector compute_zbar(const SystemMatrices& sys, const StableParams& params, double s, double t) {
    if (params.mu_w() == 0.0) return Vector::Zero(sys.dim());
    return params.mu_w() * compute_ybar(sys, params, s, t);
}

Matrix residual_cov_bare(const SystemMatrices& sys, const StableParams& params, double s, double t) {
    const double a = params.alpha();
    return (a / (2.0 - a) * std::pow(params.c(), 1.0 - 2.0 / a)) * gaussian_sde_cov(sys, s, t);
}

IntervalKernel make_interval_kernel(const SystemMatrices& sys, const StableParams& params, Interval interval) {
    require_ordered(interval.s, interval.t);
    return {interval, mat_exp(sys, interval.length()), compute_ybar(sys, params, interval.s, interval.t),
            residual_cov_bare(sys, params, interval.s, interval.t)};
}

TransitionStats compute_transition_stats(const JumpSet& jumps, const SystemMatrices& sys,
                                         const StableParams& params, const IntervalKernel& kernel) {
    auto [m, s] = compute_m_s(jumps, sys, params);
    return {std::move(m), std::move(s), params.mu_w() * kernel.ybar, kernel.ybar, kernel.sigma_bare,
            jumps.interval};
}

TransitionStats compute_transition_stats(const JumpSet& jumps, const SystemMatrices& sys,
                                         const StableParams& params) {
    return compute_transition_stats(jumps, sys, params, make_interval_kernel(sys, params, jumps.interval));
}

}  // namespace levy
