#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "cmj/errors.hpp"
#include "cmj/interaction.hpp"
#include "cmj/random.hpp"

using namespace cmj;

namespace {
EmpiricalAgeMeasure with_mass(int count, int N) {
    return EmpiricalAgeMeasure(1.0, std::vector<double>(static_cast<std::size_t>(count), 0.5), N);
}
}  // namespace

TEST_CASE("built-in rules") {
    const auto c = InteractionRule::constant(0.3);
    CHECK(c(0.0, with_mass(5, 1)) == 0.3);
    CHECK(c.lipschitz() == 0.0);
    CHECK(c.is_constant());

    const auto im = InteractionRule::immunity(10.0);
    CHECK(im(0.0, with_mass(4, 1)) == doctest::Approx(0.6));
    CHECK(im(0.0, with_mass(12, 1)) == 0.0);
    CHECK(im.lipschitz() == doctest::Approx(0.1));
    CHECK_FALSE(im.is_constant());

    const auto ld = InteractionRule::lockdown(10.0, 0.5, 0.3);
    CHECK(ld(0.0, with_mass(2, 1)) == doctest::Approx(0.8));
    CHECK(ld(0.0, with_mass(4, 1)) == doctest::Approx(0.3));
    CHECK(std::isinf(ld.lipschitz()));
}

TEST_CASE("invalid parameters and outputs") {
    CHECK_THROWS_AS(InteractionRule::constant(1.5), ConfigError);
    CHECK_THROWS_AS(InteractionRule::immunity(0.0), ConfigError);
    CHECK_THROWS_AS(InteractionRule::lockdown(10.0, 2.0, 0.5), ConfigError);
    const InteractionRule bad("bad", [](double, const MeasureLike&) { return 1.5; }, 0.0);
    CHECK_THROWS_AS(bad(0.0, with_mass(1, 1)), ContractViolation);
    const InteractionRule nan("nan", [](double, const MeasureLike&) { return std::nan(""); }, 0.0);
    CHECK_THROWS_AS(nan(0.0, with_mass(1, 1)), ContractViolation);
}

TEST_CASE("declared Lipschitz constant") {
    const auto im = InteractionRule::immunity(10.0);
    CHECK(im.with_lipschitz(0.5).lipschitz() == 0.5);
    CHECK(im.with_lipschitz(0.5)(0.0, with_mass(4, 1)) == doctest::Approx(0.6));
    CHECK_THROWS_AS(im.with_lipschitz(0.05), ConfigError);
    CHECK(InteractionRule::constant(1.0).with_lipschitz(1.0).is_constant());
}

TEST_CASE("immunity is Lipschitz in the Prohorov bound") {
    Rng rng(4);
    const auto im = InteractionRule::immunity(2.0);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> a, b;
        for (auto n = rng() % 60; n > 0; --n) a.push_back(3.0 * rng.uniform());
        for (auto n = rng() % 60; n > 0; --n) b.push_back(3.0 * rng.uniform());
        const EmpiricalAgeMeasure mu(3.0, a, 20), nu(3.0, b, 20);
        CHECK(std::abs(im(0.0, mu) - im(0.0, nu)) <= im.lipschitz() * prohorov_upper(mu, nu, 1e-3) + 1e-12);
    }
}
