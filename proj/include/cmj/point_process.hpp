#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "cmj/random.hpp"
#include "cmj/tabulated.hpp"

namespace cmj {

using RateFunction = std::function<double(double)>;

struct PoissonIntensity {
    RateFunction tau;
};

// Gamma(shape, scale) inter-birth times, at most max_births births.
struct RenewalProcess {
    double shape;
    double scale;
    std::size_t max_births;
};

struct FiniteAtoms {
    std::vector<double> ages;
};

inline constexpr std::size_t kAtomCap = 10'000'000;

class BirthProcessSpec {
public:
    using Kind = std::variant<PoissonIntensity, RenewalProcess, FiniteAtoms>;

    static BirthProcessSpec poisson(RateFunction tau, double sup_bound);
    static BirthProcessSpec constant_rate(double lambda);
    // λ on [from, to), zero elsewhere
    static BirthProcessSpec window_rate(double lambda, double from, double to);
    static BirthProcessSpec exp_decay_rate(double lambda, double decay);
    static BirthProcessSpec tabulated_rate(std::vector<double> ages, std::vector<double> values);
    static BirthProcessSpec renewal(double shape, double scale, std::size_t max_births);
    static BirthProcessSpec finite_atoms(std::vector<double> ages);

    const Kind& kind() const { return kind_; }
    double sup_bound() const { return sup_bound_; }
    bool has_density() const { return !std::holds_alternative<FiniteAtoms>(kind_); }
    // τ(a); throws for FiniteAtoms
    double intensity(double a) const;

private:
    BirthProcessSpec(Kind k, double sup) : kind_(std::move(k)), sup_bound_(sup) {}
    Kind kind_;
    double sup_bound_;
};

class InitialAgeDensity {
public:
    using Density = std::function<double(double)>;
    using Sampler = std::function<double(Rng&)>;

    static InitialAgeDensity exponential(double rate);
    static InitialAgeDensity uniform(double width);
    // piecewise linear through (age, value) rows, renormalized to mass 1
    static InitialAgeDensity tabulated(std::vector<double> ages, std::vector<double> values);
    // caller vouches for normalization and for the sampler matching the density
    static InitialAgeDensity custom(Density density, Sampler sampler, double support_end);

    double operator()(double a) const { return density_(a); }
    // throws ContractViolation on a negative draw
    double sample(Rng& rng) const;
    // A_max: ∫_{A_max}^∞ g < 1e-8
    double support_end() const { return support_end_; }

private:
    InitialAgeDensity(Density d, Sampler s, double end)
        : density_(std::move(d)), sampler_(std::move(s)), support_end_(end) {}
    Density density_;
    Sampler sampler_;
    double support_end_;
};

// One realization of 𝒫 on [0, horizon), strictly increasing.
std::vector<double> sample_atoms(const BirthProcessSpec& spec, double horizon, Rng& rng);

// Nudges ties (and float inversions) upward by one ulp.
void make_strictly_increasing(std::vector<double>& atoms);

struct InitialPair {
    double birth_time;  // -A
    std::vector<double> atoms;  // absolute times in [0, horizon)
};

// {a - age : a ≥ age, a - age < horizon}
std::vector<double> censor_initial(std::span<const double> atoms, double age, double horizon);

InitialPair initial_pair(const InitialAgeDensity& g, const BirthProcessSpec& spec, double horizon, Rng& rng);
InitialPair initial_pair(const InitialAgeDensity& g, const BirthProcessSpec& spec, double horizon,
                         Rng& age_rng, Rng& atom_rng);

}  // namespace cmj
