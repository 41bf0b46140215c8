#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "cmj/forest.hpp"
#include "cmj/interaction.hpp"
#include "cmj/measures.hpp"
#include "cmj/point_process.hpp"
#include "cmj/random.hpp"

namespace cmj {

// Right-continuous step path t ↦ μ^N_t, stored as the sorted kept birth times.
struct AgePath {
    int n_ancestors = 1;
    double horizon = 0.0;
    std::shared_ptr<const std::vector<double>> kept_births;
};

struct SimOptions {
    std::size_t event_cap = 50'000'000;
    bool record_forest = true;
};

struct InteractingResult {
    Forest forest;  // empty (0 ancestors) when record_forest is off
    AgePath path;
    std::size_t events = 0;
};

// N ancestors thinned by C(σ, μ^N_{σ-}). `key` is the replicate key; ancestor i
// and every label below it draw from sub-keys of it.
InteractingResult simulate_interacting(int N, const BirthProcessSpec& spec, const InitialAgeDensity& g,
                                       const InteractionRule& C, double T, NoiseKey key, const SimOptions& opt = {});

// μ^N_t including births at exactly t
EmpiricalAgeMeasure age_measure_at(const AgePath& path, double t);

// t, mass and age quantiles on the grid {0, step, 2 step, ...} up to the horizon
void write_path_csv(std::ostream& os, const AgePath& path, double step, std::span<const double> quantiles);

}  // namespace cmj
