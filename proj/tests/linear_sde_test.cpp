#include <doctest.h>

#include <cmath>

#include "levy/linear_sde.hpp"
#include "levy/ssm.hpp"
#include "levy/validation/oracles.hpp"

using namespace levy;

namespace {

const SystemMatrices kLangevin = SystemMatrices::langevin(LangevinParams{-1.0});

SystemMatrices coupled() {
    Matrix a(3, 3);
    a << -0.7, 0.4, 0.0, -0.3, -1.1, 0.2, 0.1, 0.0, -0.5;
    Vector h(3);
    h << 0.3, 1.0, -0.4;
    return SystemMatrices::general(a, h);
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("system validation") {
    CHECK_THROWS_AS(LangevinParams{0.5}, std::invalid_argument);
    CHECK_THROWS_AS(LangevinParams{-1e-9}, std::invalid_argument);
    CHECK_THROWS_AS(SystemMatrices::general(Matrix::Zero(2, 3), Vector::Zero(2)), std::invalid_argument);
    CHECK_THROWS_AS(SystemMatrices::general(Matrix::Zero(2, 2), Vector::Zero(3)), std::invalid_argument);
    Matrix bad = Matrix::Zero(2, 2);
    bad(0, 1) = NAN;
    CHECK_THROWS_AS(SystemMatrices::general(bad, Vector::Zero(2)), std::invalid_argument);
    CHECK(kLangevin.langevin_theta().has_value());
    CHECK_FALSE(kLangevin.generic().langevin_theta().has_value());
}

TEST_CASE("matrix exponential") {
    const auto sys = SystemMatrices::langevin(LangevinParams{-0.5});
    CHECK(max_abs(mat_exp(sys, 0.0) - Matrix::Identity(2, 2)) == 0.0);
    CHECK(max_abs(mat_exp(coupled().a(), 0.0) - Matrix::Identity(3, 3)) < 1e-15);

    const Matrix e = mat_exp(sys, 1.0);
    CHECK(e(0, 0) == 1.0);
    CHECK(e(1, 0) == 0.0);
    CHECK(e(0, 1) == doctest::Approx(0.786939).epsilon(1e-6));
    CHECK(e(1, 1) == doctest::Approx(0.606531).epsilon(1e-6));
    CHECK(max_abs(e - mat_exp(sys.a(), 1.0)) < 1e-12);

    const Matrix a = coupled().a();
    CHECK(max_abs(mat_exp(a, 0.7) - mat_exp(a, 0.3) * mat_exp(a, 0.4)) < 1e-10);
    CHECK(max_abs(mat_exp(sys, 1.7) - mat_exp(sys, 0.9) * mat_exp(sys, 0.8)) < 1e-10);
}

TEST_CASE("impulse response") {
    CHECK(max_abs(ft_kernel(kLangevin, 2.0, 2.0) - kLangevin.h()) == 0.0);
    CHECK(max_abs(ft_kernel(kLangevin, 2.0, 2.5)) == 0.0);
    const Vector f = ft_kernel(kLangevin, 3.0, 2.0);
    CHECK(f(0) == doctest::Approx(0.632121).epsilon(1e-6));
    CHECK(f(1) == doctest::Approx(0.367879).epsilon(1e-6));
    CHECK(max_abs(f - mat_exp(kLangevin.a(), 1.0) * kLangevin.h()) < 1e-14);
}

TEST_CASE("mean kernel") {
    const Vector tiny = mean_ft(kLangevin, 1.0, 1.0 + 1e-9);
    CHECK(max_abs(tiny - kLangevin.h()) < 1e-8);
    CHECK(max_abs(mean_ft(kLangevin, 1.0, 1.0) - kLangevin.h()) == 0.0);

    const Vector m = mean_ft(kLangevin, 0.0, 1.0);
    CHECK(m(0) == doctest::Approx(0.367879).epsilon(1e-6));
    CHECK(m(1) == doctest::Approx(0.632121).epsilon(1e-6));
    CHECK(max_abs(m - validation::trapezoid_integrated_ft(kLangevin.generic(), 0.0, 1.0)) < 1e-8);

    const auto g = coupled();
    CHECK(max_abs(integrated_ft(g, 0.5, 1.8) - validation::trapezoid_integrated_ft(g, 0.5, 1.8)) < 1e-8);
}

TEST_CASE("gram integral") {
    CHECK(max_abs(gaussian_sde_cov(kLangevin, 2.0, 2.0)) == 0.0);
    const Matrix q = gaussian_sde_cov(kLangevin, 0.0, 1.0);
    CHECK(max_abs(q - validation::trapezoid_gram(kLangevin.generic(), 0.0, 1.0)) < 1e-8);
    CHECK(q == q.transpose());
    CHECK(is_psd(q));

    const auto g = coupled();
    const Matrix qg = gaussian_sde_cov(g, 0.0, 1.3);
    CHECK(max_abs(qg - validation::trapezoid_gram(g, 0.0, 1.3)) < 1e-8);
    CHECK(is_psd(qg));
}

TEST_CASE("jump moments") {
    const StableParams p(1.5, 1.0, 1.0, 10.0);

    SUBCASE("empty set") {
        const JumpMoments mo = compute_m_s(JumpSet{{0.0, 1.0}, 10.0, {}}, kLangevin, p);
        CHECK(max_abs(mo.m) == 0.0);
        CHECK(max_abs(mo.s) == 0.0);
    }
    SUBCASE("single unit jump at the right end") {
        const JumpSet js{{0.0, 1.0}, 10.0, {{1.0, 1.0, std::nullopt}}};
        const JumpMoments mo = compute_m_s(js, kLangevin, p);
        CHECK(max_abs(mo.m - kLangevin.h()) < 1e-15);
        CHECK(max_abs(mo.s - kLangevin.h() * kLangevin.h().transpose()) < 1e-15);
    }
    SUBCASE("closed form and generic kernels agree") {
        Rng rng = make_rng(8);
        for (double theta : {-0.2, -1.0, -2.7}) {
            const auto sys = SystemMatrices::langevin(LangevinParams{theta});
            const JumpSet js = sample_jump_set(p.with_c(40.0), {0.3, 1.9}, rng);
            const JumpMoments a = compute_m_s(js, sys, p);
            const JumpMoments b = compute_m_s(js, sys.generic(), p);
            CHECK(max_abs(a.m - b.m) < 1e-10 * std::max(1.0, max_abs(b.m)));
            CHECK(max_abs(a.s - b.s) < 1e-10 * std::max(1.0, max_abs(b.s)));
            CHECK(is_psd(a.s));
        }
    }
}

TEST_CASE("compensator") {
    CHECK(max_abs(compute_zbar(kLangevin, StableParams(0.8, 2.0, 1.0, 8.0), 0.0, 1.0)) == 0.0);
    CHECK(max_abs(compute_zbar(kLangevin, StableParams(1.5, 0.0, 1.0, 8.0), 0.0, 1.0)) == 0.0);

    const StableParams p(1.5, 1.0, 1.0, 8.0);
    const Vector z = compute_zbar(kLangevin, p, 0.0, 1.0);
    CHECK(z(0) == doctest::Approx(6.0 * 0.367879).epsilon(1e-6));
    CHECK(z(1) == doctest::Approx(6.0 * 0.632121).epsilon(1e-6));

    // mean of mu * m over jump sets; heavy tailed, hence the loose band
    Rng rng = make_rng(31);
    Vector acc = Vector::Zero(2);
    constexpr int kDraws = 100'000;
    for (int i = 0; i < kDraws; ++i) acc += compute_m_s(sample_jump_set(p, {0.0, 1.0}, rng), kLangevin, p).m;
    acc /= kDraws;
    CHECK(acc(0) == doctest::Approx(z(0)).epsilon(0.05));
    CHECK(acc(1) == doctest::Approx(z(1)).epsilon(0.05));
}

TEST_CASE("residual covariance") {
    const StableParams p(1.5, 1.0, 1.0, 10.0);
    CHECK(max_abs(residual_cov_bare(kLangevin, p, 1.0, 1.0)) == 0.0);
    const double base = max_abs(residual_cov_bare(kLangevin, p, 0.0, 1.0));
    const double far = max_abs(residual_cov_bare(kLangevin, p.with_c(1e10), 0.0, 1.0));
    CHECK(far == doctest::Approx(base * std::pow(1e9, -1.0 / 3.0)).epsilon(1e-12));
    CHECK(is_psd(residual_cov_bare(kLangevin, p, 0.0, 1.0)));
    CHECK(is_psd(residual_cov_bare(coupled(), p, 0.0, 2.0)));
}

TEST_CASE("transition stats with a cached kernel") {
    const StableParams p(1.4, 0.7, 1.0, 10.0);
    Rng rng = make_rng(12);
    const Interval iv{0.5, 1.25};
    const JumpSet js = sample_jump_set(p, iv, rng);
    const TransitionStats a = compute_transition_stats(js, kLangevin, p);
    const TransitionStats b = compute_transition_stats(js, kLangevin, p, make_interval_kernel(kLangevin, p, iv));
    CHECK(max_abs(a.m - b.m) == 0.0);
    CHECK(max_abs(a.s - b.s) == 0.0);
    CHECK(max_abs(a.zbar - b.zbar) == 0.0);
    CHECK(max_abs(a.sigma_bare - b.sigma_bare) == 0.0);
    CHECK(max_abs(a.zbar - p.mu_w() * a.ybar) < 1e-15);
}
