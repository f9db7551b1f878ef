#include <doctest.h>

#include <cmath>
#include <numbers>

#include "levy/kalman.hpp"
#include "levy/validation/oracles.hpp"

using namespace levy;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Matrix random_spd(int n, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix l(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) l(i, j) = u(rng);
    return l * l.transpose() + 0.1 * Matrix::Identity(n, n);
}

ExtendedTransition random_transition(Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ExtendedTransition t;
    t.a_ext = Matrix::Zero(3, 3);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) t.a_ext(i, j) = u(rng);
    t.a_ext(2, 2) = 1.0;
    t.b = Matrix::Zero(3, 2);
    t.b.topRows(2).setIdentity();
    t.noise = ScaledNoise{random_spd(2, rng)};
    return t;
}

}  // namespace

TEST_CASE("initial belief") {
    const GaussianBelief b = init_belief(IGPrior{1.0, 1.0, 1e6}, 0.0, 2);
    CHECK(max_abs(b.a) == 0.0);
    Matrix expected = Matrix::Zero(3, 3);
    expected(2, 2) = 1e6;
    CHECK(max_abs(b.c_scaled - expected) == 0.0);
    CHECK(init_belief(IGPrior{}, 0.0, 2).c_scaled(2, 2) == kFlatKappa);
    CHECK_THROWS_AS(init_belief(IGPrior{0.0, 1.0, 1.0}, 0.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(init_belief(IGPrior{1.0, -1.0, 1.0}, 0.0, 2), std::invalid_argument);
}

TEST_CASE("pinned drift stays pinned") {
    Rng rng = make_rng(3);
    GaussianBelief b = init_belief(IGPrior{1.0, 1.0, 0.0}, 0.7, 2);
    ObservationModel obs{Matrix::Zero(1, 3), Matrix::Constant(1, 1, 0.1)};
    obs.h(0, 0) = 1.0;
    for (int i = 0; i < 5; ++i) {
        b = update(predict(b, random_transition(rng)), Vector::Constant(1, 1.0 * i), obs).belief;
        CHECK(b.a(2) == doctest::Approx(0.7).epsilon(1e-14));
        CHECK(std::abs(b.c_scaled(2, 2)) < 1e-14);
    }
}

TEST_CASE("prediction") {
    Rng rng = make_rng(4);
    GaussianBelief b{Vector::Zero(3), random_spd(3, rng)};
    b.a << 0.3, -0.2, 0.9;

    ExtendedTransition id;
    id.a_ext = Matrix::Identity(3, 3);
    id.b = Matrix::Zero(3, 2);
    id.b.topRows(2).setIdentity();
    id.noise = ScaledNoise{Matrix::Zero(2, 2)};
    const GaussianBelief same = predict(b, id);
    CHECK(max_abs(same.a - b.a) == 0.0);
    CHECK(max_abs(same.c_scaled - b.c_scaled) < 1e-15);

    const ExtendedTransition t = random_transition(rng);
    const Matrix& q = std::get<ScaledNoise>(t.noise).cov;
    const GaussianBelief zero{b.a, Matrix::Zero(3, 3)};
    CHECK(max_abs(predict(zero, t).c_scaled - t.b * q * t.b.transpose()) < 1e-15);

    // block algebra: state block A11 C11 A11' + A11 C12 a' + a C21 A11' + a C22 a' + Q
    const GaussianBelief p = predict(b, t);
    const Matrix a11 = t.a_ext.topLeftCorner(2, 2);
    const Matrix col = t.a_ext.topRightCorner(2, 1);
    const Matrix c11 = b.c_scaled.topLeftCorner(2, 2), c12 = b.c_scaled.topRightCorner(2, 1);
    const double c22 = b.c_scaled(2, 2);
    const Matrix top = a11 * c11 * a11.transpose() + a11 * c12 * col.transpose() +
                       col * c12.transpose() * a11.transpose() + c22 * col * col.transpose() + q;
    CHECK(max_abs(p.c_scaled.topLeftCorner(2, 2) - top) < 1e-12);
    CHECK(max_abs(p.c_scaled.topRightCorner(2, 1) - (a11 * c12 + c22 * col)) < 1e-12);
    CHECK(p.c_scaled(2, 2) == doctest::Approx(c22).epsilon(1e-14));
    CHECK(max_abs(p.a.head(2) - (a11 * b.a.head(2) + col * b.a(2))) < 1e-12);

    ExtendedTransition full = t;
    full.a_ext.topRightCorner(2, 1).setZero();
    Vector offset(2);
    offset << 0.5, -1.5;
    full.noise = FullNoise{offset, q};
    CHECK(max_abs(predict(b, full).a.head(2) - (a11 * b.a.head(2) + offset)) < 1e-12);
}

TEST_CASE("measurement update") {
    Rng rng = make_rng(5);
    const GaussianBelief b{Vector::Constant(3, 0.5), random_spd(3, rng)};

    SUBCASE("noiseless observation of the first state") {
        ObservationModel obs{Matrix::Zero(1, 3), Matrix::Zero(1, 1)};
        obs.h(0, 0) = 1.0;
        const auto r = update(b, Vector::Constant(1, 2.25), obs);
        CHECK(r.belief.a(0) == doctest::Approx(2.25).epsilon(1e-14));
        CHECK(std::abs(r.belief.c_scaled(0, 0)) < 1e-12);
    }
    SUBCASE("uninformative observation") {
        const ObservationModel obs{Matrix::Zero(1, 3), Matrix::Constant(1, 1, 0.3)};
        const auto r = update(b, Vector::Constant(1, 4.0), obs);
        CHECK(max_abs(r.belief.a - b.a) == 0.0);
        CHECK(max_abs(r.belief.c_scaled - b.c_scaled) < 1e-15);
        CHECK(r.innovation(0) == 4.0);
        CHECK(r.f(0, 0) == 0.3);
    }
    SUBCASE("degenerate observation") {
        const ObservationModel obs{Matrix::Zero(1, 3), Matrix::Zero(1, 1)};
        CHECK_THROWS_AS(update(b, Vector::Constant(1, 1.0), obs), DegenerateObservation);
    }
    SUBCASE("agrees with conditioning through the joint precision") {
        for (int trial = 0; trial < 20; ++trial) {
            const GaussianBelief prior{Vector::Random(3), random_spd(3, rng)};
            ObservationModel obs{Matrix::Random(2, 3), random_spd(2, rng)};
            const Vector y = Vector::Random(2);
            const auto r = update(prior, y, obs);

            Eigen::MatrixXd joint(5, 5);
            const Eigen::MatrixXd c = prior.c_scaled, h = obs.h;
            joint << c, c * h.transpose(), h * c, h * c * h.transpose() + Eigen::MatrixXd(obs.kappa_v);
            const Eigen::MatrixXd lambda = joint.inverse();
            const Eigen::MatrixXd post_cov = lambda.topLeftCorner(3, 3).inverse();
            const Eigen::VectorXd resid = Eigen::VectorXd(y) - h * Eigen::VectorXd(prior.a);
            const Eigen::VectorXd post_mean =
                Eigen::VectorXd(prior.a) - post_cov * lambda.topRightCorner(3, 2) * resid;
            CHECK(max_abs(r.belief.a - post_mean) < 1e-10);
            CHECK(max_abs(r.belief.c_scaled - post_cov) < 1e-10);
        }
    }
}

TEST_CASE("accumulator") {
    MarginalAccumulator acc;
    acc = accumulate(acc, Vector::Constant(1, 0.0), Matrix::Constant(1, 1, 2.0));
    CHECK(acc.e_n == 0.0);
    acc = accumulate(acc, Vector::Constant(1, 2.0), Matrix::Constant(1, 1, 4.0));
    CHECK(acc.e_n == doctest::Approx(1.0));
    CHECK(acc.log_det_sum == doctest::Approx(std::log(2.0) + std::log(4.0)));
    CHECK(acc.n_obs == 2);
    CHECK_THROWS_AS(accumulate(acc, Vector::Zero(2), Matrix::Identity(2, 2)), std::invalid_argument);

    Rng rng = make_rng(6);
    std::vector<std::pair<Vector, Matrix>> terms;
    for (int i = 0; i < 6; ++i) terms.emplace_back(Vector::Random(2), random_spd(2, rng));
    MarginalAccumulator fwd, rev;
    for (const auto& [w, f] : terms) fwd = accumulate(fwd, w, f);
    for (auto it = terms.rbegin(); it != terms.rend(); ++it) rev = accumulate(rev, it->first, it->second);
    CHECK(std::abs(fwd.e_n - rev.e_n) < 1e-12);
    CHECK(std::abs(fwd.log_det_sum - rev.log_det_sum) < 1e-12);
}

TEST_CASE("marginal likelihood") {
    CHECK(log_marginal(MarginalAccumulator{}, IGPrior{}) == 0.0);

    const MarginalAccumulator one{1, 0.0, 0.0, 1};
    CHECK(log_marginal(one, IGPrior{1.0, 1.0}) == doctest::Approx(-1.039721).epsilon(1e-6));
    CHECK(log_marginal(one, IGPrior{1.0, 1.0}) ==
          doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi) + std::log(std::sqrt(std::numbers::pi) / 2.0))
              .epsilon(1e-14));

    for (const MarginalAccumulator acc : {MarginalAccumulator{3, 2.5, -0.7, 1}, MarginalAccumulator{4, 11.0, 3.2, 2},
                                          MarginalAccumulator{12, 0.4, -9.0, 1}})
        for (const IGPrior prior : {IGPrior{1.0, 1.0}, IGPrior{3.5, 0.2}, IGPrior{0.6, 4.0}})
            CHECK(std::abs(log_marginal(acc, prior) - validation::ig_quadrature_log_marginal(acc, prior)) < 1e-6);
}

TEST_CASE("sigma posterior") {
    const IGParams none = posterior_sigma2(MarginalAccumulator{}, IGPrior{2.0, 3.0});
    CHECK(none.shape == 2.0);
    CHECK(none.scale == 3.0);
    const IGParams p = posterior_sigma2(MarginalAccumulator{4, 2.0, 0.0, 1}, IGPrior{2.0, 3.0});
    CHECK(p.shape == 4.0);
    CHECK(p.scale == 4.0);
    CHECK(p.point_estimate() == doctest::Approx(4.0 / 3.0));
    CHECK(IGParams{0.5, 3.0}.point_estimate() == doctest::Approx(2.0));
}

TEST_CASE("sigma posterior recovers the scale of simulated data") {
    // random walk observed in noise, true sigma^2 = 4
    const double sigma = 2.0;
    Rng rng = make_rng(7);
    std::normal_distribution<double> nd(0.0, 1.0);
    ExtendedTransition t;
    t.a_ext = Matrix::Identity(2, 2);
    t.b = Matrix::Zero(2, 1);
    t.b(0, 0) = 1.0;
    t.noise = ScaledNoise{Matrix::Constant(1, 1, 0.5)};
    const ObservationModel obs{(Matrix(1, 2) << 1.0, 0.0).finished(), Matrix::Constant(1, 1, 0.2)};
    const IGPrior prior{1.0, 1.0, 0.0};
    GaussianBelief b = init_belief(prior, 0.0, 1);
    MarginalAccumulator acc;
    double x = 0.0;
    for (int i = 0; i < 2000; ++i) {
        x += sigma * std::sqrt(0.5) * nd(rng);
        const double y = x + sigma * std::sqrt(0.2) * nd(rng);
        const auto r = update(predict(b, t), Vector::Constant(1, y), obs);
        b = r.belief;
        acc = accumulate(acc, r.innovation, r.f);
    }
    const IGParams post = posterior_sigma2(acc, prior);
    const double mean = post.scale / (post.shape - 1.0);
    const double sd = mean / std::sqrt(post.shape - 2.0);
    CHECK(std::abs(mean - sigma * sigma) < 3.0 * sd);
}

TEST_CASE("recursion matches the stacked joint density") {
    Rng rng = make_rng(9);
    const GaussianBelief initial{Vector::Random(3), random_spd(3, rng)};
    ObservationModel obs{Matrix::Random(1, 3), Matrix::Constant(1, 1, 0.4)};
    std::vector<validation::LinearStep> steps;
    std::vector<Vector> ys;
    GaussianBelief b = initial;
    MarginalAccumulator acc;
    for (int i = 0; i < 5; ++i) {
        const ExtendedTransition t = random_transition(rng);
        steps.push_back({t.a_ext, t.b, std::get<ScaledNoise>(t.noise).cov});
        ys.push_back(Vector::Random(1));
        const auto r = update(predict(b, t), ys.back(), obs);
        b = r.belief;
        acc = accumulate(acc, r.innovation, r.f);
    }
    for (double s2 : {0.3, 1.0, 2.5})
        CHECK(std::abs(log_conditional(acc, s2) - validation::stacked_joint_loglik(initial, steps, obs, ys, s2)) <
              1e-8);
}
