#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "cmj/forest.hpp"
#include "cmj/interaction.hpp"
#include "cmj/pde.hpp"
#include "cmj/point_process.hpp"
#include "cmj/random.hpp"

namespace cmj {

// (1,1) both, (1,0) only interacting, (0,1) only non-linear, † and * fictitious,
// ∂ discarded for both (never stored).
enum class CouplingLabel : std::uint8_t { both, only_interacting, only_nonlinear, dagger, star, discarded };

std::string_view to_string(CouplingLabel l);

// Label of the offspring of a (1,1) parent; thresholds as in the maximal
// coupling with ties resolved as stated (≤ for the one-sided labels, strict
// on both sides for (1,1)).
CouplingLabel assign_offspring_label(double P1, double P2, double omega);

struct AuditRow {
    double time;
    CouplingLabel parent;
    CouplingLabel child;  // for a * parent: star; for a (1,1) parent: ℓ' (possibly discarded)
    bool rho;             // a † was immigrated at this event
    double P1, P2;
    std::uint64_t immigrant_count;  // I^η after the event
    std::uint64_t discrepancy;      // #(1,0) + #(0,1) after the event
};

struct LabelCounts {
    std::uint64_t both = 0, only_interacting = 0, only_nonlinear = 0, dagger = 0, star = 0, discarded = 0;
};

struct CoupledResult {
    Forest interacting;  // (1,1) ∪ (1,0) kept
    Forest nonlinear;    // (1,1) ∪ (0,1) kept; tree i is non-linear tree i
    std::vector<AuditRow> audit;
    LabelCounts born;  // particles born in [0,T], ancestors counted as (1,1)
    double tau_stop = std::numeric_limits<double>::infinity();
    double horizon = 0.0;
    int n_ancestors = 0;
    double eta = 0.0, lipschitz = 0.0;
    double prohorov_T = 0.0;      // d̂(μ̄_T, u_T)
    bool precondition = false;    // L·d̂ < η
};

// `key` plays the role of the replicate key: ancestor i uses key.ancestor(i),
// exactly like simulate_interacting and simulate_nonlinear_tree.
CoupledResult simulate_coupled(int N, const BirthProcessSpec& spec, const InitialAgeDensity& g,
                               const InteractionRule& C, const PdeSolution& sol, double eta, double T, NoiseKey key,
                               double eps_grid = 1e-3, std::size_t event_cap = 50'000'000);

struct DominationReport {
    bool certified = false;               // no violation at any event
    std::optional<std::size_t> first_violation;  // audit row index
    bool precondition = false;
    double prohorov_T = 0.0;
    // #(kept in exactly one forest, σ ≤ T), recomputed from the forests
    std::uint64_t forest_discrepancy = 0;
    bool counters_match_forests = false;
};

DominationReport check_domination(const CoupledResult& r);

// Kept labels with σ ≤ t present in exactly one of the two forests.
std::uint64_t forest_discrepancy(const Forest& a, const Forest& b, double t);

void write_audit_csv(std::ostream& os, const CoupledResult& r);

}  // namespace cmj
