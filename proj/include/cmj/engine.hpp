#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "cmj/errors.hpp"
#include "cmj/forest.hpp"
#include "cmj/point_process.hpp"
#include "cmj/random.hpp"

namespace cmj {

struct EngineOptions {
    int n_ancestors = 1;
    double horizon = 1.0;
    std::size_t event_cap = 50'000'000;
    bool record_forest = true;
};

// What an observer sees for every inspected birth, ancestors included.
struct BirthRecord {
    double time;
    NoiseKey key;
    std::int32_t node;  // forest index, -1 when the forest is not recorded
    std::uint32_t depth;
    bool kept;
};

struct EngineOutput {
    Forest forest;
    std::shared_ptr<std::vector<double>> kept_births;  // sorted, ancestors first
    std::size_t events = 0;                            // inspected potential births
};

using BirthView = std::shared_ptr<const std::vector<double>>;

struct NoObserver {
    void operator()(const BirthRecord&) const {}
};

namespace detail {

struct Pending {
    double time;
    std::uint64_t seq;
    std::int32_t parent;  // index into the parent table
    std::uint32_t rank;
};

struct PendingLater {
    bool operator()(const Pending& a, const Pending& b) const {
        return a.time > b.time || (a.time == b.time && a.seq > b.seq);
    }
};

struct Parent {
    NoiseKey key;
    std::int32_t node;
    std::uint32_t depth;
};

}  // namespace detail

// Event loop shared by the interacting and the non-linear simulators.
// Potential births are inspected in (time, insertion) order; the birth at σ
// is kept iff ω ≤ keep(σ, births), where `births` holds the kept birth times
// strictly before this event (μ_{σ-}). Ancestors are never thinned. Every
// node draws ω, its offspring atoms and (for roots) its age from generators
// keyed by its label under `base`.
template <class Keep, class Observe = NoObserver>
EngineOutput run_cmj(const BirthProcessSpec& spec, const InitialAgeDensity& g, NoiseKey base,
                     const EngineOptions& opt, Keep&& keep, Observe&& observe = {}) {
    if (opt.n_ancestors < 1) throw ConfigError("need at least one ancestor");
    if (!(opt.horizon > 0.0)) throw ConfigError("horizon must be positive");
    const double T = opt.horizon;
    EngineOutput out;
    out.forest = opt.record_forest ? Forest(opt.n_ancestors, T) : Forest(0, T);
    auto births = std::make_shared<std::vector<double>>();
    births->reserve(static_cast<std::size_t>(opt.n_ancestors) * 2);

    std::vector<detail::Parent> parents;
    std::priority_queue<detail::Pending, std::vector<detail::Pending>, detail::PendingLater> queue;
    std::uint64_t seq = 0;

    auto push_offspring = [&](std::int32_t slot, double born, const std::vector<double>& ages) {
        std::uint32_t rank = 0;
        for (double a : ages) queue.push({born + a, seq++, slot, ++rank});
    };

    for (int i = 0; i < opt.n_ancestors; ++i) {
        const NoiseKey key = base.ancestor(static_cast<std::uint64_t>(i));
        Rng age_rng = key.rng(Stream::initial_age);
        Rng atom_rng = key.rng(Stream::offspring);
        InitialPair ip = initial_pair(g, spec, T, age_rng, atom_rng);
        const std::int32_t node = opt.record_forest ? out.forest.add_ancestor(ip.birth_time) : -1;
        births->push_back(ip.birth_time);
        const auto slot = static_cast<std::int32_t>(parents.size());
        parents.push_back({key, node, 0});
        observe(BirthRecord{ip.birth_time, key, node, 0, true});
        // initial atoms are already absolute times
        push_offspring(slot, 0.0, ip.atoms);
    }
    std::sort(births->begin(), births->end());

    while (!queue.empty()) {
        const detail::Pending ev = queue.top();
        queue.pop();
        if (++out.events > opt.event_cap)
            throw ResourceError("event cap of " + std::to_string(opt.event_cap) + " exceeded");
        const detail::Parent par = parents[static_cast<std::size_t>(ev.parent)];
        const NoiseKey key = par.key.child(ev.rank);
        const double p = keep(ev.time, BirthView(births));
        const bool kept = key.uniform(Stream::omega) <= p;
        std::int32_t node = -1;
        if (opt.record_forest)
            node = out.forest.add_child(par.node, ev.rank, ev.time, kept ? NodeStatus::kept : NodeStatus::pruned);
        observe(BirthRecord{ev.time, key, node, par.depth + 1, kept});
        if (!kept) continue;
        births->push_back(ev.time);
        Rng atom_rng = key.rng(Stream::offspring);
        const auto ages = sample_atoms(spec, T - ev.time, atom_rng);
        if (ages.empty()) continue;
        const auto slot = static_cast<std::int32_t>(parents.size());
        parents.push_back({key, node, par.depth + 1});
        push_offspring(slot, ev.time, ages);
    }
    out.kept_births = std::move(births);
    return out;
}

}  // namespace cmj
