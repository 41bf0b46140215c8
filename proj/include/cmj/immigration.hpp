#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cmj/point_process.hpp"
#include "cmj/random.hpp"
#include "cmj/stats.hpp"

namespace cmj {

// Right-continuous integer step path.
struct CountPath {
    std::vector<double> times;
    std::vector<std::uint64_t> values;
    std::uint64_t initial = 0;

    std::uint64_t at(double t) const;
    void record(double t, std::uint64_t v);
};

struct ImmigrationParams {
    int N = 1;
    double eta = 0.0;
    double lipschitz = 0.0;
    double horizon = 1.0;
    bool track_dominating = true;  // also build S^η driven by the same noise
    std::size_t event_cap = 50'000'000;
};

struct ImmigrationResult {
    ImmigrationParams params;
    CountPath immigrants;  // I^η: births (roots included) among planted trees
    CountPath left;        // Z_ι: left-forest births, ancestors included
    CountPath dominating;  // S^η(t): jumps by Z^u(T) at each of its immigrations
    std::uint64_t planted = 0;
    std::uint64_t dominating_planted = 0;
    std::vector<double> planting_times;
};

ImmigrationResult simulate_immigration(const ImmigrationParams& p, const BirthProcessSpec& spec,
                                       const InitialAgeDensity& g, NoiseKey key);

// Sorted ages of the births of one un-thinned tree rooted at age 0 (the root
// included), up to age `age_horizon` (half-open).
std::vector<double> cmj_tree_ages(const BirthProcessSpec& spec, NoiseKey key, double age_horizon,
                                  std::size_t cap = 50'000'000);

// x_n = (ηN/L)((1 + L·EZ/N)^n - 1), and η·EZ·n when L = 0
double chain_bound(double eta, double L, int N, double EZ, std::uint64_t n);

// S_0 = 0, S_{k+1} = S_k + 1{ω_k ≤ η + L S_k / N} Z_k with Z_k the size of an
// independent tree at age t. Returns S_0..S_n.
std::vector<double> simulate_dominating_chain(double eta, double L, int N, std::uint64_t n,
                                              const BirthProcessSpec& spec, double t, NoiseKey key);

// E[Z(t)] from the renewal equation m(t) = 1 + ∫_0^t τ(a) m(t-a) da.
double expected_tree_size(const BirthProcessSpec& spec, double t, double dt = 1e-3);

struct TailEstimate {
    Interval p;
    std::size_t hits = 0;
    std::size_t replicates = 0;
};

// P(I^η(t) ≥ εN); replicate r uses NoiseKey::replicate(seed, r).
TailEstimate estimate_tail(const ImmigrationParams& p, const BirthProcessSpec& spec, const InitialAgeDensity& g,
                           double eps, double t, std::size_t replicates, std::uint64_t seed, unsigned threads = 0);

// t, I, Z_iota on the union of event times
void write_immigration_csv(std::ostream& os, const ImmigrationResult& r);

}  // namespace cmj
