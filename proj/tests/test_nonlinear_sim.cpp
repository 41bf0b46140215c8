#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "cmj/errors.hpp"
#include "cmj/interacting_sim.hpp"
#include "cmj/nonlinear_sim.hpp"

using namespace cmj;

namespace {
const auto kSpec = BirthProcessSpec::constant_rate(1.0);
const auto kG = InitialAgeDensity::exponential(1.0);
}  // namespace

TEST_CASE("with C = 1 a non-linear tree is a single interacting tree") {
    const auto C = InteractionRule::constant(1.0);
    const auto sol = solve_nonlinear(kSpec, kG, C, 2.0, 1e-3);
    const auto key = NoiseKey::replicate(8, 3);
    const auto tree = simulate_nonlinear_tree(kSpec, kG, C, sol, 2.0, key);
    const auto forest = simulate_interacting(1, kSpec, kG, C, 2.0, key).forest;
    CHECK(tree == forest);
    CHECK_THROWS_AS(simulate_nonlinear_tree(kSpec, kG, C, sol, 2.5, key), ConfigError);
}

TEST_CASE("mean age density matches the solution") {
    const auto C = InteractionRule::immunity(10.0);
    const auto sol = solve_nonlinear(kSpec, kG, C, 2.0, 1e-3);
    const std::vector<double> times{1.0, 2.0};
    const auto est = estimate_mean_age_density(kSpec, kG, C, sol, 20000, 0.1, times, 11, 1);
    REQUIRE(est.size() == 2);
    for (const auto& e : est) {
        CHECK(e.replicates == 20000);
        CHECK(std::abs(e.mean_size - mass(sol, e.time)) < 4.0 * e.size_se);
        const auto cmp = compare_with_solution(e, sol);
        CHECK(cmp.within());
        CHECK(cmp.l1 > 0.0);
        // histogram mass equals mean size
        CHECK(e.density.total_mass() == doctest::Approx(e.mean_size).epsilon(1e-12));
    }
}

TEST_CASE("the estimate does not depend on the thread count") {
    const auto C = InteractionRule::immunity(10.0);
    const auto sol = solve_nonlinear(kSpec, kG, C, 1.0, 1e-3);
    const std::vector<double> times{1.0};
    const auto a = estimate_mean_age_density(kSpec, kG, C, sol, 700, 0.1, times, 5, 1);
    const auto b = estimate_mean_age_density(kSpec, kG, C, sol, 700, 0.1, times, 5, 3);
    CHECK(a[0].density.values() == b[0].density.values());
    CHECK(a[0].standard_error == b[0].standard_error);
    std::ostringstream x, y;
    write_density_csv(x, a[0]);
    write_density_csv(y, b[0]);
    CHECK(x.str() == y.str());
    CHECK(x.str().rfind("age_lo,age_hi,density,se\n0,0.1,", 0) == 0);
}

TEST_CASE("a wrong solution shows up as a failed comparison") {
    const auto C = InteractionRule::immunity(10.0);
    const auto sol = solve_nonlinear(kSpec, kG, C, 2.0, 1e-3);
    const auto lin = solve_nonlinear(kSpec, kG, InteractionRule::constant(1.0), 2.0, 1e-3);
    const std::vector<double> times{2.0};
    const auto est = estimate_mean_age_density(kSpec, kG, C, sol, 20000, 0.1, times, 12, 1);
    CHECK_FALSE(compare_with_solution(est[0], lin).within());
}

TEST_CASE("argument checks") {
    const auto C = InteractionRule::constant(1.0);
    const auto sol = solve_nonlinear(kSpec, kG, C, 1.0, 1e-3);
    const std::vector<double> bad{2.0}, ok{1.0};
    CHECK_THROWS_AS(estimate_mean_age_density(kSpec, kG, C, sol, 10, 0.1, bad, 1), ConfigError);
    CHECK_THROWS_AS(estimate_mean_age_density(kSpec, kG, C, sol, 0, 0.1, ok, 1), ConfigError);
    CHECK_THROWS_AS(estimate_mean_age_density(kSpec, kG, C, sol, 10, 0.0, ok, 1), ConfigError);
}
