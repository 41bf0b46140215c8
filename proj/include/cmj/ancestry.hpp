#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "cmj/forest.hpp"
#include "cmj/interaction.hpp"
#include "cmj/pde.hpp"
#include "cmj/random.hpp"
#include "cmj/stats.hpp"

namespace cmj {

// T_1 > T_2 > ... > T_k with T_k ≤ 0 < T_{k-1}.
struct ChainSample {
    std::vector<double> times;
};

// Density in a of the jump T_i → T_i - a given T_i = t:
// C(t, u_t) u_t(a) τ(a) / u_t(0). Throws DomainError when u_t(0) = 0.
double kernel_density(const PdeSolution& sol, const InteractionRule& C, double t, double a);

// ∫ kernel_density(t, a) da by quadrature on the solution grid
double kernel_mass(const PdeSolution& sol, const InteractionRule& C, double t);

// Kernel mass of each interval [edges[k], edges[k+1]).
std::vector<double> kernel_bin_masses(const PdeSolution& sol, const InteractionRule& C, double t,
                                      std::span<const double> edges);

// Backward chain from t1 until the first nonpositive time. A nonpositive t1
// gives the length-1 chain.
ChainSample sample_chain(const PdeSolution& sol, double t1, Rng& rng);

// g(-t_k) Π C(t_i, u_{t_i}) τ(t_i - t_{i+1})
double chain_density(const PdeSolution& sol, const InteractionRule& C, std::span<const double> chain);
// u_{t_1}(0) Π kernel_density(t_i, t_i - t_{i+1}); same value, other factorization
double chain_density_telescoped(const PdeSolution& sol, const InteractionRule& C, std::span<const double> chain);

struct WeightedChain {
    double weight;
    std::vector<double> times;  // σ_u, σ_parent, ..., σ_ancestor
};

// One chain per kept node with σ ≤ T, each of weight 1/N.
std::vector<WeightedChain> empirical_chain_measure(const Forest& f, double T);

// Edges 0 = e_0 < ... < e_bins splitting the kernel at t into equal masses;
// e_bins is the end of the kernel's support.
std::vector<double> kernel_quantile_edges(const PdeSolution& sol, const InteractionRule& C, double t,
                                          std::size_t bins);

struct DelayFit {
    TestResult test;
    std::vector<double> edges;
    std::vector<double> observed, expected;
    std::size_t nodes = 0;
};

// Pearson test of the parent delays σ_u - σ_parent of kept non-root nodes
// born in [lo, hi]. Each node contributes its own kernel at t = σ_u
// (renormalized to one); bins are equal-mass at the window midpoint.
DelayFit delay_goodness_of_fit(const Forest& f, const PdeSolution& sol, const InteractionRule& C, double lo,
                               double hi, std::size_t bins = 20);

// weight,k,t_1,...,t_k
void write_chains_csv(std::ostream& os, std::span<const WeightedChain> chains);

}  // namespace cmj
