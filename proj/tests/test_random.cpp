#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "cmj/random.hpp"

using namespace cmj;

TEST_CASE("rng is a pure function of its seed") {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        CHECK(x == b());
        differs = differs || x != c();
    }
    CHECK(differs);
}

TEST_CASE("uniform stays inside the open unit interval and has the right moments") {
    Rng r(1);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        s += u;
        s2 += u * u;
    }
    CHECK(s / n == doctest::Approx(0.5).epsilon(0.005));
    CHECK(s2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.005));
}

TEST_CASE("exponential mean is 1/rate") {
    Rng r(9);
    double s = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) s += r.exponential(2.5);
    // se = 0.4/sqrt(n) ~ 9e-4
    CHECK(std::abs(s / n - 0.4) < 4e-3);
}

TEST_CASE("key derivations do not collide") {
    const auto k = NoiseKey::replicate(5, 0);
    std::set<std::uint64_t> seen;
    seen.insert(k.value());
    for (std::uint64_t i = 1; i <= 50; ++i) {
        seen.insert(k.ancestor(i).value());
        seen.insert(k.child(i).value());
        seen.insert(NoiseKey::replicate(5, i).value());
        seen.insert(NoiseKey::replicate(6, i).value());
    }
    for (auto s : {Stream::omega, Stream::offspring, Stream::offspring_star, Stream::offspring_dagger,
                   Stream::initial_age, Stream::immigration, Stream::replicate})
        seen.insert(k.tagged(s).value());
    CHECK(seen.size() == 1 + 4 * 50 + 7);
    CHECK(k.child(1).child(2) != k.child(2).child(1));
    CHECK(k.ancestor(3) == NoiseKey::replicate(5, 0).ancestor(3));
}

TEST_CASE("streams of one key are uncorrelated") {
    const int n = 20000;
    double sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto k = NoiseKey::replicate(11, static_cast<std::uint64_t>(i));
        sxy += (k.uniform(Stream::omega) - 0.5) * (k.uniform(Stream::offspring) - 0.5);
    }
    // var of each product is 1/144
    CHECK(std::abs(sxy / n) < 4.0 * std::sqrt(1.0 / 144.0 / n));
}
