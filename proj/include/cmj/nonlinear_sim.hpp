#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "cmj/forest.hpp"
#include "cmj/interaction.hpp"
#include "cmj/measures.hpp"
#include "cmj/pde.hpp"
#include "cmj/point_process.hpp"
#include "cmj/random.hpp"

namespace cmj {

// One non-linear CMJ tree on [0,T]: births at σ kept with probability
// C(σ, u_σ) read off the precomputed solution. `key` is the tree's key; the
// root uses key.ancestor(0), as ancestor 0 of an interacting forest would.
Forest simulate_nonlinear_tree(const BirthProcessSpec& spec, const InitialAgeDensity& g, const InteractionRule& C,
                               const PdeSolution& sol, double T, NoiseKey key);

struct AgeDensityEstimate {
    double time = 0.0;
    GriddedDensity density;              // step mode, bins [kh, (k+1)h)
    std::vector<double> standard_error;  // per bin
    std::size_t replicates = 0;
    double mean_size = 0.0;  // kept nodes with σ ≤ t, per tree
    double size_se = 0.0;
};

// Monte Carlo mean age density of M independent trees, all ages read from the
// same trees at each requested time. Replicate m uses
// NoiseKey::replicate(seed, m).
std::vector<AgeDensityEstimate> estimate_mean_age_density(const BirthProcessSpec& spec, const InitialAgeDensity& g,
                                                          const InteractionRule& C, const PdeSolution& sol,
                                                          std::size_t M, double h, std::span<const double> times,
                                                          std::uint64_t seed, unsigned threads = 0);

// L1 gap between the histogram and u_t at bin midpoints, and the bound it is
// held to: 3 Σ h·se plus the midpoint-vs-bin-average error of u_t itself.
struct DensityComparison {
    double l1 = 0.0;
    double se_sum = 0.0;    // Σ h·se
    double bin_term = 0.0;  // Σ h |avg_bin u_t - u_t(mid)|
    double bound() const { return 3.0 * se_sum + bin_term; }
    bool within() const { return l1 <= bound(); }
};

DensityComparison compare_with_solution(const AgeDensityEstimate& est, const PdeSolution& sol);

// age_lo, age_hi, density, se
void write_density_csv(std::ostream& os, const AgeDensityEstimate& est);

}  // namespace cmj
