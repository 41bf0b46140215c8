#include "cmj/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>
#include <queue>
#include <string>

#include "cmj/engine.hpp"
#include "cmj/errors.hpp"

namespace cmj {

std::string_view to_string(CouplingLabel l) {
    switch (l) {
        case CouplingLabel::both: return "(1,1)";
        case CouplingLabel::only_interacting: return "(1,0)";
        case CouplingLabel::only_nonlinear: return "(0,1)";
        case CouplingLabel::dagger: return "dagger";
        case CouplingLabel::star: return "star";
        case CouplingLabel::discarded: return "discarded";
    }
    return "?";
}

CouplingLabel assign_offspring_label(double P1, double P2, double omega) {
    if (!(P1 >= 0.0 && P1 <= 1.0) || !(P2 >= 0.0 && P2 <= 1.0))
        throw ContractViolation("assign_offspring_label: probabilities must lie in [0,1]");
    if (!(omega > 0.0 && omega < 1.0)) throw ContractViolation("assign_offspring_label: ω must lie in (0,1)");
    if (omega <= P1 - P2) return CouplingLabel::only_interacting;
    if (omega <= P2 - P1) return CouplingLabel::only_nonlinear;
    if (std::abs(P1 - P2) < omega && omega < std::max(P1, P2)) return CouplingLabel::both;
    return CouplingLabel::discarded;
}

namespace {

struct Particle {
    NoiseKey key;
    CouplingLabel label;
    std::int32_t node_int;  // index in the interacting forest, or -1
    std::int32_t node_nl;
};

void bump(LabelCounts& c, CouplingLabel l) {
    switch (l) {
        case CouplingLabel::both: ++c.both; break;
        case CouplingLabel::only_interacting: ++c.only_interacting; break;
        case CouplingLabel::only_nonlinear: ++c.only_nonlinear; break;
        case CouplingLabel::dagger: ++c.dagger; break;
        case CouplingLabel::star: ++c.star; break;
        case CouplingLabel::discarded: ++c.discarded; break;
    }
}

bool in_immigrant_set(CouplingLabel l) {
    return l == CouplingLabel::only_interacting || l == CouplingLabel::only_nonlinear || l == CouplingLabel::dagger;
}

bool is_mismatch(CouplingLabel l) {
    return l == CouplingLabel::only_interacting || l == CouplingLabel::only_nonlinear;
}

}  // namespace

CoupledResult simulate_coupled(int N, const BirthProcessSpec& spec, const InitialAgeDensity& g,
                               const InteractionRule& C, const PdeSolution& sol, double eta, double T, NoiseKey key,
                               double eps_grid, std::size_t event_cap) {
    if (N < 1) throw ConfigError("coupling: need N ≥ 1");
    if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("coupling: η must lie in (0,1]");
    if (!(T > 0.0) || T > sol.horizon() * (1.0 + 1e-12)) throw ConfigError("coupling: horizon beyond the solved range");
    const double L = C.lipschitz();
    if (!std::isfinite(L)) throw ConfigError("coupling: the interaction rule must have a finite Lipschitz constant");

    CoupledResult r;
    r.interacting = Forest(N, T);
    r.nonlinear = Forest(N, T);
    r.horizon = T;
    r.n_ancestors = N;
    r.eta = eta;
    r.lipschitz = L;

    auto births_int = std::make_shared<std::vector<double>>();
    auto births_nl = std::make_shared<std::vector<double>>();
    std::vector<Particle> parts;
    std::priority_queue<detail::Pending, std::vector<detail::Pending>, detail::PendingLater> queue;
    std::uint64_t seq = 0;
    std::uint64_t I = 0, disc = 0;

    // offspring atoms of a new particle, drawn from the given stream
    auto spawn = [&](Particle p, double born, Rng rng) {
        const auto ages = sample_atoms(spec, T - born, rng);
        if (ages.empty()) return;
        const auto slot = static_cast<std::int32_t>(parts.size());
        parts.push_back(p);
        std::uint32_t rank = 0;
        for (double a : ages) queue.push({born + a, seq++, slot, ++rank});
    };

    for (int i = 0; i < N; ++i) {
        const NoiseKey k = key.ancestor(static_cast<std::uint64_t>(i));
        Rng age_rng = k.rng(Stream::initial_age);
        Rng atom_rng = k.rng(Stream::offspring);
        InitialPair ip = initial_pair(g, spec, T, age_rng, atom_rng);
        const auto ni = r.interacting.add_ancestor(ip.birth_time);
        const auto nn = r.nonlinear.add_ancestor(ip.birth_time);
        births_int->push_back(ip.birth_time);
        births_nl->push_back(ip.birth_time);
        ++r.born.both;
        if (ip.atoms.empty()) continue;
        const auto slot = static_cast<std::int32_t>(parts.size());
        parts.push_back({k, CouplingLabel::both, ni, nn});
        std::uint32_t rank = 0;
        for (double a : ip.atoms) queue.push({a, seq++, slot, ++rank});
    }
    std::sort(births_int->begin(), births_int->end());
    std::sort(births_nl->begin(), births_nl->end());

    std::size_t events = 0;
    while (!queue.empty()) {
        const detail::Pending ev = queue.top();
        queue.pop();
        if (++events > event_cap) throw ResourceError("coupling: event cap of " + std::to_string(event_cap) + " exceeded");
        const Particle par = parts[static_cast<std::size_t>(ev.parent)];
        const double s = ev.time;
        const NoiseKey ck = par.key.child(ev.rank);
        const double omega = ck.uniform(Stream::omega);

        const double P1 = C(s, EmpiricalAgeMeasure(s, births_int, births_int->size(), N));
        const double P2 = C(s, sol.slice(s));
        const double envelope = L * static_cast<double>(I) / N + eta;
        if (std::abs(P1 - P2) > envelope && std::isinf(r.tau_stop)) r.tau_stop = s;

        AuditRow row{s, par.label, CouplingLabel::discarded, false, P1, P2, 0, 0};
        switch (par.label) {
            case CouplingLabel::only_interacting:
            case CouplingLabel::only_nonlinear:
            case CouplingLabel::dagger: {
                const double Cn = par.label == CouplingLabel::only_interacting ? P1
                                  : par.label == CouplingLabel::only_nonlinear ? P2
                                                                                : 1.0;
                const CouplingLabel child = omega <= Cn ? par.label : CouplingLabel::dagger;
                Particle p{ck, child, -1, -1};
                if (par.label == CouplingLabel::only_interacting) {
                    const bool kept = child == CouplingLabel::only_interacting;
                    p.node_int = r.interacting.add_child(par.node_int, ev.rank, s, kept ? NodeStatus::kept : NodeStatus::pruned);
                    if (kept) births_int->push_back(s);
                } else if (par.label == CouplingLabel::only_nonlinear) {
                    const bool kept = child == CouplingLabel::only_nonlinear;
                    p.node_nl = r.nonlinear.add_child(par.node_nl, ev.rank, s, kept ? NodeStatus::kept : NodeStatus::pruned);
                    if (kept) births_nl->push_back(s);
                }
                bump(r.born, child);
                ++I;
                if (is_mismatch(child)) ++disc;
                row.child = child;
                spawn(p, s, ck.rng(Stream::offspring));
                break;
            }
            case CouplingLabel::star: {
                const bool rho = omega <= envelope;
                bump(r.born, CouplingLabel::star);
                row.child = CouplingLabel::star;
                spawn({ck, CouplingLabel::star, -1, -1}, s, ck.rng(Stream::offspring_star));
                if (rho) {
                    bump(r.born, CouplingLabel::dagger);
                    ++I;
                    row.rho = true;
                    // the immigrated † reproduces according to 𝒫 of this event
                    spawn({ck.tagged(Stream::offspring_dagger), CouplingLabel::dagger, -1, -1}, s,
                          ck.rng(Stream::offspring));
                }
                break;
            }
            case CouplingLabel::both: {
                const CouplingLabel child = assign_offspring_label(P1, P2, omega);
                const bool rho = std::abs(P1 - P2) < omega && omega <= envelope;
                const bool in_int = child == CouplingLabel::both || child == CouplingLabel::only_interacting;
                const bool in_nl = child == CouplingLabel::both || child == CouplingLabel::only_nonlinear;
                const auto ni = r.interacting.add_child(par.node_int, ev.rank, s, in_int ? NodeStatus::kept : NodeStatus::pruned);
                const auto nn = r.nonlinear.add_child(par.node_nl, ev.rank, s, in_nl ? NodeStatus::kept : NodeStatus::pruned);
                if (in_int) births_int->push_back(s);
                if (in_nl) births_nl->push_back(s);
                bump(r.born, child);
                row.child = child;
                if (child != CouplingLabel::discarded) {
                    if (is_mismatch(child)) {
                        ++I;
                        ++disc;
                    }
                    spawn({ck, child, in_int ? ni : -1, in_nl ? nn : -1}, s, ck.rng(Stream::offspring));
                }
                if (child != CouplingLabel::both) {
                    bump(r.born, CouplingLabel::star);
                    spawn({ck.tagged(Stream::offspring_star), CouplingLabel::star, -1, -1}, s,
                          ck.rng(Stream::offspring_star));
                }
                if (rho) {
                    bump(r.born, CouplingLabel::dagger);
                    ++I;
                    row.rho = true;
                    spawn({ck.tagged(Stream::offspring_dagger), CouplingLabel::dagger, -1, -1}, s,
                          ck.rng(Stream::offspring_dagger));
                }
                break;
            }
            case CouplingLabel::discarded:
                throw ContractViolation("coupling: a discarded particle cannot reproduce");
        }
        row.immigrant_count = I;
        row.discrepancy = disc;
        r.audit.push_back(row);
    }

    const EmpiricalAgeMeasure mu_bar(T, births_nl, births_nl->size(), N);
    r.prohorov_T = prohorov_upper(mu_bar, sol.slice(T), eps_grid);
    r.precondition = L * r.prohorov_T < eta;
    return r;
}

namespace {

std::uint64_t mismatch_below(const Forest& a, std::int32_t ia, const Forest& b, std::int32_t ib, double t) {
    auto visible = [t](const Forest& f, std::int32_t i) {
        return i >= 0 && f.node(i).status == NodeStatus::kept && f.node(i).birth_time <= t;
    };
    std::uint64_t n = visible(a, ia) != visible(b, ib) ? 1 : 0;
    const auto ca = ia >= 0 ? a.children(ia) : std::span<const std::int32_t>{};
    const auto cb = ib >= 0 ? b.children(ib) : std::span<const std::int32_t>{};
    std::size_t x = 0, y = 0;
    while (x < ca.size() || y < cb.size()) {
        const std::uint32_t ra = x < ca.size() ? a.node(ca[x]).rank : UINT32_MAX;
        const std::uint32_t rb = y < cb.size() ? b.node(cb[y]).rank : UINT32_MAX;
        if (ra == rb) n += mismatch_below(a, ca[x++], b, cb[y++], t);
        else if (ra < rb) n += mismatch_below(a, ca[x++], b, -1, t);
        else n += mismatch_below(a, -1, b, cb[y++], t);
    }
    return n;
}

}  // namespace

std::uint64_t forest_discrepancy(const Forest& a, const Forest& b, double t) {
    if (a.n_ancestors() != b.n_ancestors()) throw ContractViolation("forest_discrepancy: ancestor counts differ");
    std::uint64_t n = 0;
    for (int i = 0; i < a.n_ancestors(); ++i) n += mismatch_below(a, a.root(i), b, b.root(i), t);
    return n;
}

DominationReport check_domination(const CoupledResult& r) {
    DominationReport rep;
    rep.precondition = r.precondition;
    rep.prohorov_T = r.prohorov_T;
    for (std::size_t k = 0; k < r.audit.size(); ++k) {
        if (r.audit[k].discrepancy > r.audit[k].immigrant_count) {
            rep.first_violation = k;
            break;
        }
    }
    rep.certified = !rep.first_violation.has_value();
    rep.forest_discrepancy = forest_discrepancy(r.interacting, r.nonlinear, r.horizon);
    const std::uint64_t last = r.audit.empty() ? 0 : r.audit.back().discrepancy;
    rep.counters_match_forests = last == rep.forest_discrepancy;
    return rep;
}

void write_audit_csv(std::ostream& os, const CoupledResult& r) {
    os << "time,parent,child,rho,P1,P2,immigrants,discrepancy\n";
    char buf[192];
    for (const auto& row : r.audit) {
        std::snprintf(buf, sizeof buf, "%.17g,%s,%s,%d,%.17g,%.17g,%llu,%llu\n", row.time,
                      std::string(to_string(row.parent)).c_str(), std::string(to_string(row.child)).c_str(),
                      row.rho ? 1 : 0, row.P1, row.P2, static_cast<unsigned long long>(row.immigrant_count),
                      static_cast<unsigned long long>(row.discrepancy));
        os << buf;
    }
}

}  // namespace cmj
