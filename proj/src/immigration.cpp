#include "cmj/immigration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <queue>
#include <string>

#include "cmj/engine.hpp"
#include "cmj/errors.hpp"
#include "cmj/parallel.hpp"

namespace cmj {

std::uint64_t CountPath::at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return initial;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

void CountPath::record(double t, std::uint64_t v) {
    if (!times.empty() && t < times.back()) throw ContractViolation("count path: times must be nondecreasing");
    if (!times.empty() && t == times.back()) {
        values.back() = v;
        return;
    }
    times.push_back(t);
    values.push_back(v);
}

std::vector<double> cmj_tree_ages(const BirthProcessSpec& spec, NoiseKey key, double age_horizon, std::size_t cap) {
    std::vector<double> ages;
    if (!(age_horizon > 0.0)) return ages;
    struct Item {
        double age;
        std::uint64_t seq;
        std::size_t parent;
        std::uint32_t rank;
    };
    auto later = [](const Item& a, const Item& b) { return a.age > b.age || (a.age == b.age && a.seq > b.seq); };
    std::priority_queue<Item, std::vector<Item>, decltype(later)> queue(later);
    std::vector<NoiseKey> keys{key};
    std::uint64_t seq = 0;
    auto push_children = [&](std::size_t slot, double born) {
        Rng rng = keys[slot].rng(Stream::offspring);
        std::uint32_t rank = 0;
        for (double a : sample_atoms(spec, age_horizon - born, rng)) queue.push({born + a, seq++, slot, ++rank});
    };
    ages.push_back(0.0);
    push_children(0, 0.0);
    while (!queue.empty()) {
        const Item it = queue.top();
        queue.pop();
        ages.push_back(it.age);
        if (ages.size() > cap) throw ResourceError("tree size cap exceeded");
        keys.push_back(keys[it.parent].child(it.rank));
        push_children(keys.size() - 1, it.age);
    }
    return ages;
}

ImmigrationResult simulate_immigration(const ImmigrationParams& p, const BirthProcessSpec& spec,
                                       const InitialAgeDensity& g, NoiseKey key) {
    if (p.N < 1) throw ConfigError("immigration: need N ≥ 1");
    if (!(p.eta >= 0.0 && p.eta <= 1.0)) throw ConfigError("immigration: η must lie in [0,1]");
    if (!(p.lipschitz >= 0.0) || !std::isfinite(p.lipschitz)) throw ConfigError("immigration: L must be finite and ≥ 0");
    if (!(p.horizon > 0.0)) throw ConfigError("immigration: horizon must be positive");
    const double T = p.horizon;
    const double N = p.N;

    struct LeftBirth {
        double t;
        NoiseKey key;
    };
    std::vector<LeftBirth> left;
    EngineOptions eo{p.N, T, p.event_cap, false};
    run_cmj(
        spec, g, key, eo, [](double, const BirthView&) { return 1.0; },
        [&](const BirthRecord& b) {
            if (b.time > 0.0) left.push_back({b.time, b.key});
        });

    ImmigrationResult r;
    r.params = p;
    r.left.initial = static_cast<std::uint64_t>(p.N);
    std::priority_queue<double, std::vector<double>, std::greater<>> right;
    std::uint64_t I = 0, S = 0, Z = static_cast<std::uint64_t>(p.N);
    auto drain_before = [&](double t) {
        while (!right.empty() && right.top() < t) {
            r.immigrants.record(right.top(), ++I);
            right.pop();
        }
    };
    for (const auto& u : left) {
        drain_before(u.t);
        r.left.record(u.t, ++Z);
        const double omega = u.key.uniform(Stream::immigration);
        const bool plant = omega <= p.eta + p.lipschitz * static_cast<double>(I) / N;
        const bool plant_s = p.track_dominating && omega <= p.eta + p.lipschitz * static_cast<double>(S) / N;
        if (!plant && !plant_s) continue;
        // one tree per potential immigration, shared by I and S
        const double reach = plant_s ? T : T - u.t;
        const auto ages = cmj_tree_ages(spec, u.key.tagged(Stream::immigration), reach, p.event_cap);
        if (plant) {
            ++r.planted;
            r.planting_times.push_back(u.t);
            for (double a : ages) {
                if (u.t + a >= T) break;
                right.push(u.t + a);
            }
        }
        if (plant_s) {
            ++r.dominating_planted;
            S += ages.size();
            r.dominating.record(u.t, S);
        }
    }
    drain_before(std::numeric_limits<double>::infinity());
    return r;
}

double chain_bound(double eta, double L, int N, double EZ, std::uint64_t n) {
    if (eta < 0.0 || L < 0.0 || N < 1 || EZ < 0.0) throw ConfigError("chain_bound: arguments must be nonnegative");
    const double nd = static_cast<double>(n);
    if (L == 0.0) return eta * EZ * nd;
    const double Nd = N;
    return eta * Nd / L * std::expm1(nd * std::log1p(L * EZ / Nd));
}

std::vector<double> simulate_dominating_chain(double eta, double L, int N, std::uint64_t n,
                                              const BirthProcessSpec& spec, double t, NoiseKey key) {
    if (N < 1) throw ConfigError("dominating chain: need N ≥ 1");
    std::vector<double> S(n + 1, 0.0);
    for (std::uint64_t k = 0; k < n; ++k) {
        const NoiseKey kk = key.child(k + 1);
        const double omega = kk.uniform(Stream::immigration);
        double jump = 0.0;
        if (omega <= eta + L * S[k] / N)
            jump = static_cast<double>(cmj_tree_ages(spec, kk.tagged(Stream::immigration), t).size());
        S[k + 1] = S[k] + jump;
    }
    return S;
}

double expected_tree_size(const BirthProcessSpec& spec, double t, double dt) {
    if (!(t >= 0.0)) throw ConfigError("expected_tree_size: t must be ≥ 0");
    if (t == 0.0) return 1.0;
    const auto J = static_cast<std::size_t>(std::max(1.0, std::ceil(t / dt)));
    const double h = t / static_cast<double>(J);
    std::vector<double> tau(J + 1), m(J + 1);
    for (std::size_t k = 0; k <= J; ++k) tau[k] = spec.intensity(h * static_cast<double>(k));
    m[0] = 1.0;
    for (std::size_t j = 1; j <= J; ++j) {
        double acc = 0.5 * tau[j] * m[0];
        for (std::size_t k = 1; k < j; ++k) acc += tau[k] * m[j - k];
        m[j] = (1.0 + h * acc) / (1.0 - 0.5 * h * tau[0]);
    }
    return m[J];
}

TailEstimate estimate_tail(const ImmigrationParams& p, const BirthProcessSpec& spec, const InitialAgeDensity& g,
                           double eps, double t, std::size_t replicates, std::uint64_t seed, unsigned threads) {
    if (replicates < 100) throw ConfigError("estimate_tail: need at least 100 replicates");
    if (!(t > 0.0)) throw ConfigError("estimate_tail: t must be positive");
    ImmigrationParams q = p;
    q.horizon = t;
    q.track_dominating = false;
    const double level = eps * p.N;
    const auto hit = parallel_map<char>(replicates, threads, [&](std::size_t k) -> char {
        const auto r = simulate_immigration(q, spec, g, NoiseKey::replicate(seed, k));
        return static_cast<double>(r.immigrants.at(t)) >= level ? 1 : 0;
    });
    TailEstimate e;
    e.replicates = replicates;
    e.hits = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
    e.p = wilson_interval(e.hits, replicates);
    return e;
}

void write_immigration_csv(std::ostream& os, const ImmigrationResult& r) {
    std::vector<double> times;
    times.push_back(0.0);
    times.insert(times.end(), r.immigrants.times.begin(), r.immigrants.times.end());
    times.insert(times.end(), r.left.times.begin(), r.left.times.end());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    const bool with_s = r.params.track_dominating;
    os << (with_s ? "t,I,Z_iota,S\n" : "t,I,Z_iota\n");
    char buf[128];
    for (double t : times) {
        if (with_s)
            std::snprintf(buf, sizeof buf, "%.17g,%llu,%llu,%llu\n", t,
                          static_cast<unsigned long long>(r.immigrants.at(t)),
                          static_cast<unsigned long long>(r.left.at(t)),
                          static_cast<unsigned long long>(r.dominating.at(t)));
        else
            std::snprintf(buf, sizeof buf, "%.17g,%llu,%llu\n", t, static_cast<unsigned long long>(r.immigrants.at(t)),
                          static_cast<unsigned long long>(r.left.at(t)));
        os << buf;
    }
}

}  // namespace cmj
