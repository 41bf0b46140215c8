#include <doctest.h>

#include <cmath>
#include <vector>

#include "cmj/errors.hpp"
#include "cmj/random.hpp"
#include "cmj/stats.hpp"

using namespace cmj;

TEST_CASE("mean and standard error") {
    const std::vector<double> xs{1, 2, 3, 4};
    const auto m = mean_se(xs);
    CHECK(m.mean == 2.5);
    // sd = sqrt(5/3)
    CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
}

TEST_CASE("chi-square p-values at tabulated critical points") {
    // 95% points: 3.841 (1 dof), 18.307 (10 dof)
    std::vector<double> obs{0, 0}, exp{1, 1};
    obs = {1.0 + std::sqrt(3.841458820694124 / 2.0), 1.0 - std::sqrt(3.841458820694124 / 2.0)};
    auto r = chi_square_test(obs, exp);
    CHECK(r.dof == 1);
    CHECK(r.p_value == doctest::Approx(0.05).epsilon(1e-6));

    std::vector<double> e11(11, 100.0), o11(11, 100.0);
    const double d = std::sqrt(18.307038053275146 * 100.0 / 2.0);
    o11[0] += d;
    o11[1] -= d;
    r = chi_square_test(o11, e11);
    CHECK(r.dof == 10);
    CHECK(r.p_value == doctest::Approx(0.05).epsilon(1e-6));
    CHECK_THROWS_AS(chi_square_test(std::vector<double>{1, 2}, std::vector<double>{0, 3}), ConfigError);
}

TEST_CASE("Kolmogorov-Smirnov two sample") {
    Rng r(3);
    std::vector<double> a(400), b(400), c(400);
    for (auto& x : a) x = r.uniform();
    for (auto& x : b) x = r.uniform();
    for (auto& x : c) x = r.uniform() + 0.3;
    CHECK(ks_two_sample(a, a).p_value == doctest::Approx(1.0));
    CHECK(ks_two_sample(a, b).p_value > 0.001);
    CHECK(ks_two_sample(a, c).p_value < 1e-10);

    // size under the null: about 5% of tests reject at 0.05
    int rejects = 0;
    for (int rep = 0; rep < 400; ++rep) {
        std::vector<double> x(100), y(150);
        for (auto& v : x) v = r.uniform();
        for (auto& v : y) v = r.uniform();
        rejects += ks_two_sample(x, y).p_value < 0.05;
    }
    // binomial(400, 0.05): mean 20, sd 4.4
    CHECK(rejects >= 5);
    CHECK(rejects <= 36);

    // D is the plain sup distance of the two step functions
    const std::vector<double> p{1, 2, 3}, q{2.5, 3.5};
    CHECK(ks_two_sample(p, q).statistic == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("Wilson interval") {
    const auto w = wilson_interval(0, 10);
    CHECK(w.lo == 0.0);
    CHECK(w.hi == doctest::Approx(0.27753).epsilon(1e-4));
    const auto h = wilson_interval(50, 100);
    CHECK(h.lo == doctest::Approx(0.40383).epsilon(1e-4));
    CHECK(h.hi == doctest::Approx(0.59617).epsilon(1e-4));
}

TEST_CASE("quantiles, slope, covariance") {
    CHECK(quantile({4, 1, 3, 2}, 0.25) == doctest::Approx(1.75));
    CHECK(median({5, 1, 3}) == 3.0);
    CHECK(quantile({7}, 0.9) == 7.0);
    CHECK_THROWS_AS(quantile({}, 0.5), ConfigError);
    const std::vector<double> x{1, 2, 3, 4}, y{3, 1, -1, -3};
    CHECK(ols_slope(x, y) == doctest::Approx(-2.0));
    CHECK(covariance(x, y).mean == doctest::Approx(-2.0 * 5.0 / 3.0));
}
