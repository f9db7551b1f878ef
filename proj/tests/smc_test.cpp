#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "levy/smc.hpp"
#include "levy/validation/oracles.hpp"

using namespace levy;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

FilterConfig small_config() {
    FilterConfig cfg;
    cfg.n_particles = 200;
    cfg.params = StableParams(1.4, 1.0, 1.0, 10.0);
    cfg.obs.h = Matrix::Zero(1, 3);
    cfg.obs.h(0, 0) = 1.0;
    cfg.obs.kappa_v = Matrix::Constant(1, 1, 0.01);
    cfg.prior = IGPrior{1.0, 1.0, 1.0};
    cfg.seed = 42;
    return cfg;
}

std::vector<Observation> synthetic_data(std::size_t n, std::uint64_t seed) {
    const FilterConfig cfg = small_config();
    Rng rng = make_rng(seed);
    std::vector<double> times{0.0};
    std::exponential_distribution<double> gap(5.0);
    while (times.size() <= n) times.push_back(times.back() + gap(rng));
    const auto xs = forward_simulate(cfg.sys, cfg.params, cfg.approx, times, Vector::Zero(2), rng);
    const auto ys = observe(xs, cfg.params, cfg.obs, rng);
    std::vector<Observation> out;
    for (std::size_t i = 1; i < times.size(); ++i) out.push_back({times[i], ys[i]});
    return out;
}

bool same_output(const FilterOutput& a, const FilterOutput& b) {
    if (a.steps.size() != b.steps.size() || a.log_evidence != b.log_evidence) return false;
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        if (a.steps[i].ess != b.steps[i].ess || a.steps[i].resampled != b.steps[i].resampled) return false;
        for (std::size_t k = 0; k < a.steps[i].state.size(); ++k) {
            const auto &x = a.steps[i].state[k], &y = b.steps[i].state[k];
            if (x.mean != y.mean || x.q05 != y.q05 || x.q95 != y.q95) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("effective sample size") {
    const std::vector<double> flat(100, -3.0);
    CHECK(ess(flat) == doctest::Approx(100.0));
    const std::vector<double> one{0.0, kNegInf, kNegInf};
    CHECK(ess(one) == doctest::Approx(1.0));
    const std::vector<double> half{std::log(0.5), std::log(0.5), kNegInf, kNegInf};
    CHECK(ess(half) == doctest::Approx(2.0));
    const std::vector<double> dead{kNegInf, kNegInf};
    CHECK_THROWS_AS(ess(dead), FilterFailure);
}

TEST_CASE("systematic resampling positions") {
    const std::vector<double> w{0.7, 0.3};
    const std::vector<double> w10{0.7, 0.3, 0, 0, 0, 0, 0, 0, 0, 0};
    for (double u : {0.0, 0.1, 0.37, 0.5, 0.99}) {
        const auto idx = systematic_indices(w10, u);
        CHECK(std::count(idx.begin(), idx.end(), 0u) == 7);
        CHECK(std::count(idx.begin(), idx.end(), 1u) == 3);
    }
    const std::vector<double> uniform(8, 1.0);
    const auto idx = systematic_indices(uniform, 0.5);
    for (std::size_t k = 0; k < idx.size(); ++k) CHECK(idx[k] == k);

    Rng rng = make_rng(3);
    std::vector<double> random(50);
    for (double& x : random) x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double total = std::accumulate(random.begin(), random.end(), 0.0);
    const auto r = systematic_indices(random, 0.42);
    for (std::size_t j = 0; j < random.size(); ++j) {
        const double expected = 50.0 * random[j] / total;
        const auto got = static_cast<double>(std::count(r.begin(), r.end(), j));
        CHECK(std::abs(got - expected) < 1.0 + 1e-12);
    }
}

TEST_CASE("resampling a degenerate population") {
    const FilterConfig cfg = small_config();
    auto ps = init_particles(cfg);
    for (auto& p : ps) p.log_weight = kNegInf;
    ps[17].log_weight = 0.0;
    ps[17].belief.a(0) = 5.0;
    Rng rng = make_rng(1);
    const auto out = resample_systematic(ps, rng);
    REQUIRE(out.size() == ps.size());
    std::vector<std::uint64_t> streams;
    for (const auto& p : out) {
        CHECK(p.belief.a(0) == 5.0);
        CHECK(p.log_weight == doctest::Approx(-std::log(static_cast<double>(ps.size()))));
        streams.push_back(p.stream);
    }
    std::sort(streams.begin(), streams.end());
    CHECK(std::adjacent_find(streams.begin(), streams.end()) == streams.end());
}

TEST_CASE("filter config validation") {
    FilterConfig cfg = small_config();
    cfg.n_particles = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.resample_threshold = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.resample_threshold = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.approx = ApproximationCase::FullGaussianResidual;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.marginalize = false;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("proposal and weighting") {
    FilterConfig cfg = small_config();
    const auto ps = init_particles(cfg);
    const Vector y = Vector::Constant(1, 0.3);

    SUBCASE("identical streams give identical particles") {
        const Particle a = propose_and_weight(ps[3], Interval{0.0, 0.7}, y, cfg);
        const Particle b = propose_and_weight(ps[3], Interval{0.0, 0.7}, y, cfg);
        CHECK(a.log_weight == b.log_weight);
        CHECK(a.belief.a == b.belief.a);
        CHECK(a.belief.c_scaled == b.belief.c_scaled);
        CHECK(a.stream != ps[3].stream);
    }
    SUBCASE("uninformative observation weights every particle alike") {
        cfg.obs.h = Matrix::Zero(1, 3);
        const double d0 = propose_and_weight(ps[0], Interval{0.0, 1.0}, y, cfg).log_weight - ps[0].log_weight;
        for (std::size_t j = 1; j < 20; ++j) {
            const double d = propose_and_weight(ps[j], Interval{0.0, 1.0}, y, cfg).log_weight - ps[j].log_weight;
            CHECK(d == doctest::Approx(d0).epsilon(1e-14));
        }
    }
    SUBCASE("increment telescopes to the marginal likelihood") {
        const Particle a = propose_and_weight(ps[0], Interval{0.0, 0.5}, y, cfg);
        const Particle b = propose_and_weight(a, Interval{0.5, 1.2}, Vector::Constant(1, -0.1), cfg);
        CHECK(b.log_weight - ps[0].log_weight == doctest::Approx(log_marginal(b.acc, cfg.prior)).epsilon(1e-12));
    }
}

TEST_CASE("single-step evidence against enumeration") {
    FilterConfig cfg;
    cfg.n_particles = 100'000;
    cfg.params = StableParams(1.5, 0.0, 1.0, 0.02);
    cfg.obs.h = Matrix::Zero(1, 3);
    cfg.obs.h(0, 0) = 1.0;
    cfg.obs.kappa_v = Matrix::Constant(1, 1, 0.1);
    cfg.prior = IGPrior{2.0, 1.0, 1.0};
    cfg.kappa_x0 = 0.1;
    cfg.t0 = 0.0;
    cfg.seed = 5;
    const std::vector<Observation> data{{1.0, Vector::Constant(1, 2.0)}};
    const double smc = run_filter(data, cfg).log_evidence;
    const double brute = validation::enumeration_evidence(data, cfg);
    CHECK(std::abs(std::expm1(smc - brute)) < 0.01);
}

TEST_CASE("filter sweeps") {
    const FilterConfig cfg = small_config();

    SUBCASE("no observations") {
        const FilterOutput out = run_filter({}, cfg);
        CHECK(out.steps.empty());
        CHECK(out.log_evidence == 0.0);
    }
    SUBCASE("summaries are ordered and finite") {
        const auto data = synthetic_data(40, 9);
        const FilterOutput out = run_filter(data, cfg);
        REQUIRE(out.steps.size() == data.size());
        for (const auto& s : out.steps) {
            CHECK(s.ess >= 1.0 - 1e-9);
            CHECK(s.ess <= static_cast<double>(cfg.n_particles) + 1e-9);
            CHECK(s.state.size() == 3);
            for (const auto& c : s.state) {
                CHECK(std::isfinite(c.mean));
                CHECK(c.q05 <= c.q95);
            }
        }
        double wsum = 0.0;
        for (const auto& c : out.sigma2_mixture) wsum += c.weight;
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::isfinite(out.log_evidence));
    }
    SUBCASE("bit reproducible and thread invariant") {
        const auto data = synthetic_data(30, 10);
        const FilterOutput a = run_filter(data, cfg);
        const FilterOutput b = run_filter(data, cfg);
        CHECK(same_output(a, b));
        FilterConfig threaded = cfg;
        threaded.threads = 3;
        CHECK(same_output(a, run_filter(data, threaded)));
    }
    SUBCASE("fixed-parameter full residual mode") {
        FilterConfig full = cfg;
        full.approx = ApproximationCase::FullGaussianResidual;
        full.marginalize = false;
        const auto data = synthetic_data(20, 11);
        const FilterOutput out = run_filter(data, full);
        CHECK(out.steps.size() == 20);
        CHECK(out.sigma2_mixture.empty());
        for (const auto& s : out.steps) CHECK(s.state[2].mean == doctest::Approx(full.params.mu_w()));
    }
    SUBCASE("non-ascending data") {
        std::vector<Observation> data{{1.0, Vector::Constant(1, 0.0)}, {1.0, Vector::Constant(1, 0.0)}};
        CHECK_THROWS_AS(run_filter(data, cfg), std::invalid_argument);
    }
}

TEST_CASE("summaries do not depend on particle order") {
    const FilterConfig cfg = small_config();
    auto ps = init_particles(cfg);
    const Vector y = Vector::Constant(1, 0.4);
    for (auto& p : ps) p = propose_and_weight(p, Interval{0.0, 1.0}, y, cfg);
    const auto a = summarize_particles(ps, cfg);
    std::reverse(ps.begin(), ps.end());
    std::rotate(ps.begin(), ps.begin() + 37, ps.end());
    const auto b = summarize_particles(ps, cfg);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(std::abs(a[k].mean - b[k].mean) < 1e-10);
        CHECK(std::abs(a[k].q05 - b[k].q05) < 1e-10);
        CHECK(std::abs(a[k].q95 - b[k].q95) < 1e-10);
    }
}

TEST_CASE("mixture quantiles") {
    const double w[] = {1.0}, m[] = {1.0}, s[] = {2.0};
    CHECK(mixture_quantile(w, m, s, 0.95) == doctest::Approx(1.0 + 2.0 * 1.6448536269514722).epsilon(1e-9));
    const double w2[] = {0.5, 0.5}, m2[] = {-1.0, 3.0}, s2[] = {0.0, 0.0};
    CHECK(mixture_quantile(w2, m2, s2, 0.25) == doctest::Approx(-1.0));
    CHECK(mixture_quantile(w2, m2, s2, 0.75) == doctest::Approx(3.0));
    CHECK_THROWS_AS(mixture_quantile({}, {}, {}, 0.5), std::invalid_argument);
}
